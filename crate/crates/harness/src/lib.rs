//! Synthetic experiment driver for copyright-regularized softmax regression.
//!
//! Generates Gaussian datasets, solves across `(γ_c, n₁)` grids, scores
//! each split and writes the results as CSV.

pub mod certified;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod solution;
pub mod sweep;

pub use config::{ExperimentConfig, ModeChoice, REFERENCE_GAMMA_C};
pub use error::{HarnessError, Result};
pub use metrics::SplitMetrics;
pub use sweep::{CellOutcome, MetricsRow};
