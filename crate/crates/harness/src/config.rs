//! Experiment configuration: flat `key = value` files plus overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use copyreg::{NewtonConfig, SolveMode};

use crate::error::{HarnessError, Result};

/// The γ_c grid of the reference experiments.
pub const REFERENCE_GAMMA_C: [f64; 10] = [0.1, 0.15, 0.2, 0.225, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Exact,
    Approx,
}

impl FromStr for ModeChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Self::Exact),
            "approx" => Ok(Self::Approx),
            other => Err(HarnessError::Config(format!(
                "mode must be exact or approx, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub n1_values: Vec<usize>,
    pub gamma_c_values: Vec<f64>,
    pub seed: u64,
    /// Uniform value of every entry of `w`.
    pub reg_weight: f64,
    pub solver: NewtonConfig,
    pub mode: ModeChoice,
    pub output_path: PathBuf,
    /// Independent datasets per `(γ_c, n₁)` cell.
    pub repetitions: usize,
    /// Random-baseline draws averaged per row.
    pub baseline_draws: usize,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            d: 32,
            n1_values: vec![200],
            gamma_c_values: REFERENCE_GAMMA_C.to_vec(),
            seed: 7,
            reg_weight: 3e-3,
            solver: NewtonConfig::default(),
            mode: ModeChoice::Exact,
            output_path: PathBuf::from("sweep.csv"),
            repetitions: 1,
            baseline_draws: 32,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value for {key}: {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v)).collect()
}

impl ExperimentConfig {
    /// The full-size instance: `n = 10000`, `d = 512`, five split sizes.
    pub fn full_scale() -> Self {
        Self {
            n: 10_000,
            d: 512,
            n1_values: vec![1000, 2000, 4000, 6000, 8000],
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "n1" => self.n1_values = parse_list(key, value)?,
            "gamma_c" => self.gamma_c_values = parse_list(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "reg_weight" => self.reg_weight = parse(key, value)?,
            "mode" => self.mode = value.parse()?,
            "output" => self.output_path = PathBuf::from(value.trim()),
            "repetitions" => self.repetitions = parse(key, value)?,
            "baseline_draws" => self.baseline_draws = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "eps" => self.solver.eps = parse(key, value)?,
            "delta" => self.solver.delta = parse(key, value)?,
            "eps0" => self.solver.eps0 = parse(key, value)?,
            "max_iters" => self.solver.max_iters = parse(key, value)?,
            "l" => self.solver.l = parse(key, value)?,
            "damping" => self.solver.damping = parse(key, value)?,
            "max_damping_retries" => self.solver.max_damping_retries = parse(key, value)?,
            other => return Err(HarnessError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(HarnessError::Config("d must be positive".into()));
        }
        if self.n1_values.is_empty() || self.gamma_c_values.is_empty() {
            return Err(HarnessError::Config(
                "n1 and gamma_c lists must be non-empty".into(),
            ));
        }
        if let Some(bad) = self.n1_values.iter().find(|&&n1| n1 == 0 || n1 >= self.n) {
            return Err(HarnessError::Config(format!(
                "n1 = {bad} must lie in (0, n = {})",
                self.n
            )));
        }
        if let Some(bad) = self
            .gamma_c_values
            .iter()
            .find(|g| !(**g > 0.0 && g.is_finite()))
        {
            return Err(HarnessError::Config(format!(
                "gamma_c = {bad} must be positive"
            )));
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return Err(HarnessError::Config(
                "reg_weight must be finite and non-negative".into(),
            ));
        }
        if self.repetitions == 0 || self.baseline_draws == 0 || self.workers == 0 {
            return Err(HarnessError::Config(
                "repetitions, baseline_draws and workers must be positive".into(),
            ));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn solve_mode(&self, seed: u64) -> SolveMode {
        match self.mode {
            ModeChoice::Exact => SolveMode::Exact,
            ModeChoice::Approx => SolveMode::Approximate { seed },
        }
    }
}
