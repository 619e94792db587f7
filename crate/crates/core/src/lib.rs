//! Copyright-regularized softmax regression.
//!
//! The objective is
//!
//! ```text
//! L(x) = 0.5 ℓ₁(x) + γ_c / ℓ₁(x) + 0.5 ℓ₂(x) + 0.5 ‖W A x‖²
//! ```
//!
//! where `ℓ` is the squared residual of a softmax fit over the whole
//! dataset, `ℓ₁` the residual over the copyrighted rows and `ℓ₂ = ℓ − ℓ₁`.
//! The inverse term is a barrier that keeps the model from memorizing the
//! copyrighted split.
//!
//! Modules, bottom up:
//!
//! * [`numerics`]: dense linear algebra helpers and a stable softmax.
//! * [`kernel`]: dataset container, softmax/residual evaluation, `B(x)`.
//! * [`objective`]: loss, analytic gradient and Hessian, certificates.
//! * [`solver`]: exact and ε₀-approximate Newton.
//! * [`verify`]: finite-difference oracles, bound audits, protection audit.

pub mod error;
pub mod kernel;
pub mod numerics;
pub mod objective;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{Dataset, KernelEval};
pub use numerics::{DenseMatrix, DenseVector};
pub use objective::{Hyperparameters, LipschitzBound, LossBreakdown};
pub use solver::{NewtonConfig, SolveMode, SolveReport};
pub use verify::{CertificateReport, ProtectionAudit};
