//! Second-order minimization of the objective.
//!
//! Two modes share one loop: exact Newton, and Newton with an
//! ε₀-approximate Hessian `H̃` satisfying `(1 − ε₀) H ⪯ H̃ ⪯ (1 + ε₀) H`.
//! Steps that fail to decrease the objective (or hit an indefinite matrix)
//! are retried with a growing ridge `λ I`.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{eval_kernel, Dataset};
use crate::numerics::{symmetrize, DenseMatrix, DenseVector};
use crate::objective::{
    gradient_from_eval, hessian_from_eval, loss_from_eval, Hyperparameters, BARRIER_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Target accuracy; the loop stops once `‖g‖₂ ≤ eps · l`.
    pub eps: f64,
    /// Failure budget. Recorded in reports only; the eigenvalue-perturbation
    /// Hessian succeeds with probability one.
    pub delta: f64,
    /// Hessian sandwich tolerance for approximate mode.
    pub eps0: f64,
    pub max_iters: usize,
    /// Strong convexity floor.
    pub l: f64,
    /// Ridge applied to the first attempt of every step.
    pub damping: f64,
    /// Escalations of the ridge before a step is declared failed.
    pub max_damping_retries: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            delta: 0.01,
            eps0: 0.01,
            max_iters: 100,
            l: 1.0,
            damping: 0.0,
            max_damping_retries: 12,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperparameter(msg));
        if !(self.eps > 0.0 && self.eps < 0.1) {
            return bad(format!("eps must lie in (0, 0.1), got {}", self.eps));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.1) {
            return bad(format!("eps0 must lie in (0, 0.1), got {}", self.eps0));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.l.is_nan() || self.l <= 0.0 {
            return bad(format!("l must be positive, got {}", self.l));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad(format!(
                "damping must be non-negative, got {}",
                self.damping
            ));
        }
        Ok(())
    }

    pub fn stop_threshold(&self) -> f64 {
        self.eps * self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Exact,
    /// Each step draws a fresh `H̃` from a generator derived from `seed`.
    Approximate {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `x₀, x₁, …`; the last entry is the returned point.
    pub iterates: Vec<DenseVector>,
    /// `‖g(x_t)‖₂` for every iterate.
    pub grad_norms: Vec<f64>,
    /// Objective value at every iterate.
    pub losses: Vec<f64>,
    /// `‖g_{t+1}‖ / ‖g_t‖`.
    pub shrink_ratios: Vec<f64>,
    /// Ridge used by each accepted step.
    pub dampings: Vec<f64>,
    pub converged: bool,
    pub iters_used: usize,
    pub wall_time: Duration,
    pub stop_threshold: f64,
    pub eps: f64,
    pub delta: f64,
    /// Why the loop stopped early, if it did.
    pub abort_reason: Option<String>,
}

impl SolveReport {
    pub fn final_x(&self) -> &DenseVector {
        self.iterates.last().expect("report always holds x0")
    }

    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norms.last().expect("report always holds g(x0)")
    }

    /// `‖x_t − x̂‖₂` with the final iterate standing in for the optimum.
    pub fn distances_to_final(&self) -> Vec<f64> {
        let last = self.final_x();
        self.iterates.iter().map(|x| (x - last).norm()).collect()
    }

    /// `ln(‖x₀ − x̂‖₂ / ε)`, the iteration count the linear-rate analysis
    /// predicts. Zero when the start is already within `ε`.
    pub fn predicted_iterations(&self) -> f64 {
        let r0 = self.distances_to_final()[0];
        if r0 <= self.eps {
            0.0
        } else {
            (r0 / self.eps).ln()
        }
    }
}

/// Sandwich approximation of a PSD matrix: every eigenvalue is multiplied by
/// an independent factor drawn uniformly from `[1 − ε₀, 1 + ε₀]`.
///
/// `eps0 = 0` returns `h` unchanged.
pub fn approx_hessian(h: &DenseMatrix, eps0: f64, seed: u64) -> Result<DenseMatrix> {
    if !h.is_square() {
        return Err(crate::error::dim_err(
            "approx_hessian",
            "square matrix",
            format!("{}x{}", h.nrows(), h.ncols()),
        ));
    }
    if !(0.0..0.1).contains(&eps0) {
        return Err(Error::InvalidHyperparameter(format!(
            "eps0 must lie in [0, 0.1), got {eps0}"
        )));
    }
    if eps0 == 0.0 {
        return Ok(h.clone());
    }
    let eig = SymmetricEigen::new(symmetrize(h));
    let scale = eig.eigenvalues.amax().max(1.0);
    let min_eig = eig.eigenvalues.min();
    if min_eig < -1e-10 * scale {
        return Err(Error::NotPsd { min_eig });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed = eig
        .eigenvalues
        .map(|lambda| lambda.max(0.0) * rng.random_range(1.0 - eps0..=1.0 + eps0));
    let v = &eig.eigenvectors;
    let rebuilt = v * DenseMatrix::from_diagonal(&perturbed) * v.transpose();
    Ok(symmetrize(&rebuilt))
}

/// Solves `m p = g` by Cholesky with up to two refinement sweeps. `None` if
/// `m` is not numerically positive definite or the residual stays above
/// `1e-10 ‖g‖`.
fn spd_solve(m: DenseMatrix, g: &DenseVector) -> Option<DenseVector> {
    let chol = Cholesky::new(m.clone())?;
    let mut p = chol.solve(g);
    let target = 1e-10 * g.norm();
    for _ in 0..2 {
        let r = g - &m * &p;
        if r.norm() <= target {
            return Some(p);
        }
        p += chol.solve(&r);
    }
    ((g - &m * &p).norm() <= target).then_some(p)
}

/// One undamped-fallback Newton update `x − (H + λI)⁻¹ g` with `λ = cfg.damping`.
pub fn newton_step(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    cfg: &NewtonConfig,
) -> Result<DenseVector> {
    let ev = eval_kernel(ds, x)?;
    guard(&ev)?;
    let g = gradient_from_eval(ds, hp, x, &ev);
    if g.iter().all(|v| *v == 0.0) {
        return Ok(x.clone());
    }
    let mut h = hessian_from_eval(ds, hp, &ev);
    add_ridge(&mut h, cfg.damping);
    let p = spd_solve(h, &g).ok_or(Error::SingularHessian {
        damping: cfg.damping,
    })?;
    Ok(x - p)
}

fn guard(ev: &crate::kernel::KernelEval) -> Result<()> {
    if ev.ell1 <= BARRIER_TOL {
        return Err(Error::DegenerateFit {
            ell1: ev.ell1,
            tol: BARRIER_TOL,
        });
    }
    Ok(())
}

fn add_ridge(h: &mut DenseMatrix, lambda: f64) {
    if lambda > 0.0 {
        for i in 0..h.nrows() {
            h[(i, i)] += lambda;
        }
    }
}

fn step_seed(seed: u64, iter: usize, attempt: usize) -> u64 {
    // splitmix64 finalizer over (seed, iter, attempt)
    let mut z = seed
        ^ (iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (attempt as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of one globalized step.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedStep {
    pub x: DenseVector,
    pub loss: f64,
    pub damping: f64,
}

/// Newton step with ridge fallback: tries `λ = cfg.damping`, then
/// `λ ← max(λ, 1e-8 s) · 10` with `s = max(1, max_i |H_ii|)`, until the
/// objective does not increase or the retries run out.
#[allow(clippy::too_many_arguments)]
pub fn damped_step(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    current_loss: f64,
    cfg: &NewtonConfig,
    mode: SolveMode,
    iter: usize,
) -> Result<AcceptedStep> {
    let ev = eval_kernel(ds, x)?;
    guard(&ev)?;
    let g = gradient_from_eval(ds, hp, x, &ev);
    let h = hessian_from_eval(ds, hp, &ev);
    let scale = h.diagonal().amax().max(1.0);
    let mut lambda = cfg.damping;
    for attempt in 0..=cfg.max_damping_retries {
        if attempt > 0 {
            lambda = lambda.max(1e-8 * scale) * 10.0;
        }
        let mut hd = h.clone();
        add_ridge(&mut hd, lambda);
        let system = match mode {
            SolveMode::Exact => Some(hd),
            SolveMode::Approximate { seed } => {
                approx_hessian(&hd, cfg.eps0, step_seed(seed, iter, attempt)).ok()
            }
        };
        let Some(p) = system.and_then(|m| spd_solve(m, &g)) else {
            continue;
        };
        let trial = x - p;
        let Ok(trial_ev) = eval_kernel(ds, &trial) else {
            continue;
        };
        if trial_ev.ell1 <= BARRIER_TOL {
            continue;
        }
        let trial_loss = loss_from_eval(ds, hp, &trial, &trial_ev).total;
        if trial_loss.is_finite() && trial_loss <= current_loss + 1e-12 {
            return Ok(AcceptedStep {
                x: trial,
                loss: trial_loss,
                damping: lambda,
            });
        }
    }
    Err(Error::SingularHessian { damping: lambda })
}

pub fn solve(
    ds: &Dataset,
    hp: &Hyperparameters,
    x0: &DenseVector,
    cfg: &NewtonConfig,
    mode: SolveMode,
) -> Result<SolveReport> {
    cfg.validate()?;
    hp.validate()?;
    let start = Instant::now();
    let ev0 = eval_kernel(ds, x0)?;
    guard(&ev0)?;
    if hp.w.len() != ds.n() {
        return Err(crate::error::dim_err(
            "solve",
            format!("w of length {}", ds.n()),
            hp.w.len(),
        ));
    }

    let threshold = cfg.stop_threshold();
    let mut report = SolveReport {
        iterates: vec![x0.clone()],
        grad_norms: vec![gradient_from_eval(ds, hp, x0, &ev0).norm()],
        losses: vec![loss_from_eval(ds, hp, x0, &ev0).total],
        shrink_ratios: Vec::new(),
        dampings: Vec::new(),
        converged: false,
        iters_used: 0,
        wall_time: Duration::ZERO,
        stop_threshold: threshold,
        eps: cfg.eps,
        delta: cfg.delta,
        abort_reason: None,
    };

    let mut x = x0.clone();
    let mut current_loss = report.losses[0];
    for iter in 0..cfg.max_iters {
        if report.final_grad_norm() <= threshold {
            break;
        }
        let step = match damped_step(ds, hp, &x, current_loss, cfg, mode, iter) {
            Ok(step) => step,
            Err(e) => {
                report.abort_reason = Some(e.to_string());
                break;
            }
        };
        x = step.x;
        current_loss = step.loss;
        let ev = match eval_kernel(ds, &x) {
            Ok(ev) => ev,
            Err(e) => {
                report.abort_reason = Some(e.to_string());
                break;
            }
        };
        let gnorm = gradient_from_eval(ds, hp, &x, &ev).norm();
        let prev = report.final_grad_norm();
        report
            .shrink_ratios
            .push(if prev > 0.0 { gnorm / prev } else { 0.0 });
        report.grad_norms.push(gnorm);
        report.losses.push(current_loss);
        report.dampings.push(step.damping);
        report.iterates.push(x.clone());
        report.iters_used += 1;
    }
    report.converged = report.final_grad_norm() <= threshold;
    report.wall_time = start.elapsed();
    Ok(report)
}
