//! Independent oracles and certificate audits.
//!
//! Nothing in here feeds back into the solver; these functions only check
//! what the other modules compute.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{build_b, curvature_matrix, eval_kernel, Dataset};
use crate::numerics::{
    singular_value_min, spectral_norm, sym_eig_extremes, DenseMatrix, DenseVector,
};
use crate::objective::{self, lipschitz_bound, psd_weight_bound_from_sigma, Hyperparameters};
use crate::solver::SolveReport;

pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_FD_HESSIAN_STEP: f64 = 1e-4;
/// Default near-optimality slack for the barrier subproblem.
pub const DEFAULT_EPS1: f64 = 0.01;
/// Largest `n` for which the `n × n` curvature spectra are audited.
pub const MAX_SPECTRUM_ROWS: usize = 2048;

fn fd_steps(x: &DenseVector, h: f64) -> Result<DenseVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    Ok(x.map(|v| h * (1.0 + v.abs())))
}

/// Central differences of the loss, component step `h · (1 + |x_i|)`.
pub fn fd_gradient(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    h: f64,
) -> Result<DenseVector> {
    let steps = fd_steps(x, h)?;
    let mut out = DenseVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + steps[i];
        let up = objective::loss(ds, hp, &probe)?.total;
        probe[i] = x[i] - steps[i];
        let down = objective::loss(ds, hp, &probe)?.total;
        probe[i] = x[i];
        out[i] = (up - down) / (2.0 * steps[i]);
    }
    Ok(out)
}

/// Central differences of the analytic gradient; column `j` is the
/// difference quotient along `e_j`. Not symmetrized.
pub fn fd_hessian(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    h: f64,
) -> Result<DenseMatrix> {
    let steps = fd_steps(x, h)?;
    let d = x.len();
    let mut out = DenseMatrix::zeros(d, d);
    let mut probe = x.clone();
    for j in 0..d {
        probe[j] = x[j] + steps[j];
        let up = objective::gradient(ds, hp, &probe)?;
        probe[j] = x[j] - steps[j];
        let down = objective::gradient(ds, hp, &probe)?;
        probe[j] = x[j];
        out.set_column(j, &((up - down) / (2.0 * steps[j])));
    }
    Ok(out)
}

/// `‖got − reference‖ / ‖reference‖`, falling back to the absolute error
/// when the reference is zero. Frobenius norm for matrices.
pub fn relative_error(got: &DenseMatrix, reference: &DenseMatrix) -> f64 {
    let diff = (got - reference).norm();
    let scale = reference.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Vector form of [`relative_error`].
pub fn relative_error_vec(got: &DenseVector, reference: &DenseVector) -> f64 {
    let diff = (got - reference).norm();
    let scale = reference.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Minimizer of `s ↦ 0.5 s + γ_c / s` over `s > 0`, i.e. `√(2 γ_c)`.
pub fn scalar_barrier_optimum(gamma_c: f64) -> Result<f64> {
    if !(gamma_c > 0.0 && gamma_c.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma_c must be positive, got {gamma_c}"
        )));
    }
    Ok((2.0 * gamma_c).sqrt())
}

/// Upper end of the `ℓ₁` band implied by an `ε₁`-optimal barrier subproblem:
/// `(√(2γ_c) + ε₁) + √(ε₁² + 2 ε₁ √(2γ_c))`.
pub fn barrier_upper_band(gamma_c: f64, eps1: f64) -> Result<f64> {
    let s = scalar_barrier_optimum(gamma_c)?;
    Ok(s + eps1 + (eps1 * eps1 + 2.0 * eps1 * s).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionAudit {
    pub ell1: f64,
    /// `ℓ − ℓ₁` as stored by the kernel.
    pub ell2: f64,
    pub n1: usize,
    pub n2: usize,
    pub ell1_per_row: f64,
    pub ell2_per_row: f64,
    /// `√(2γ_c)/n₁ − ε₂/n₂`.
    pub tau_c: f64,
    /// `max(ℓ₂, 0)`.
    pub eps2: f64,
    /// `0.5 ℓ₁ + γ_c/ℓ₁ − √(2γ_c)`: how far the barrier subproblem is from
    /// its scalar optimum.
    pub eps1: f64,
    /// `√(2γ_c)`.
    pub barrier_floor: f64,
    pub satisfied: bool,
}

impl ProtectionAudit {
    pub fn barrier_near_optimal(&self, eps1_tol: f64) -> bool {
        self.eps1 <= eps1_tol
    }
}

pub fn protection_audit(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
) -> Result<ProtectionAudit> {
    let ev = eval_kernel(ds, x)?;
    if ev.ell1.is_nan() || ev.ell1 <= 0.0 {
        return Err(Error::DegenerateFit {
            ell1: ev.ell1,
            tol: 0.0,
        });
    }
    audit_from_losses(hp.gamma_c, ev.ell1, ev.ell2, ds.n1(), ds.n2())
}

/// The audit arithmetic on already-measured losses.
pub fn audit_from_losses(
    gamma_c: f64,
    ell1: f64,
    ell2: f64,
    n1: usize,
    n2: usize,
) -> Result<ProtectionAudit> {
    let floor = scalar_barrier_optimum(gamma_c)?;
    if n1 == 0 || n2 == 0 {
        return Err(Error::Domain("both splits must be non-empty".into()));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let eps2 = ell2.max(0.0);
    let tau_c = floor / n1f - eps2 / n2f;
    let ell1_per_row = ell1 / n1f;
    let ell2_per_row = ell2 / n2f;
    Ok(ProtectionAudit {
        ell1,
        ell2,
        n1,
        n2,
        ell1_per_row,
        ell2_per_row,
        tau_c,
        eps2,
        eps1: 0.5 * ell1 + gamma_c / ell1 - floor,
        barrier_floor: floor,
        satisfied: ell1_per_row >= tau_c + ell2_per_row - 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateItem {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

/// Pass/fail per bound with the measured margin (positive means slack).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertificateReport {
    pub items: Vec<CertificateItem>,
}

impl CertificateReport {
    fn push(&mut self, name: &str, margin: f64) {
        self.items.push(CertificateItem {
            name: name.to_string(),
            pass: margin >= 0.0,
            margin,
        });
    }

    fn fail(&mut self, name: &str) {
        self.items.push(CertificateItem {
            name: name.to_string(),
            pass: false,
            margin: f64::NEG_INFINITY,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CertificateItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            let verdict = if item.pass { "PASS" } else { "FAIL" };
            writeln!(f, "ITEM {} {} margin={:e}", item.name, verdict, item.margin)?;
        }
        Ok(())
    }
}

impl FromStr for CertificateReport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |line: &str| Error::Domain(format!("malformed certificate line: {line:?}"));
        let mut items = Vec::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            if parts.next() != Some("ITEM") {
                return Err(bad(line));
            }
            let name = parts.next().ok_or_else(|| bad(line))?;
            let pass = match parts.next() {
                Some("PASS") => true,
                Some("FAIL") => false,
                _ => return Err(bad(line)),
            };
            let margin = parts
                .next()
                .and_then(|m| m.strip_prefix("margin="))
                .and_then(|m| m.parse::<f64>().ok())
                .ok_or_else(|| bad(line))?;
            if parts.next().is_some() {
                return Err(bad(line));
            }
            items.push(CertificateItem {
                name: name.to_string(),
                pass,
                margin,
            });
        }
        Ok(Self { items })
    }
}

fn spectrum_margin(m: &DenseMatrix, lo_bound: f64, hi_bound: f64) -> Result<f64> {
    let (lo, hi) = sym_eig_extremes(m)?;
    Ok((lo - lo_bound).min(hi_bound - hi) + 1e-9)
}

/// Evaluates the norm, spectral and convexity bounds at `x`.
///
/// Items: `ell_le_4`, `fc_inner_range`, `b_spectrum`, `b_norm_le_11`,
/// `bc_spectrum`, `curvature_spectrum`, `ell1_ge_gamma`, `ell_ge_gamma`,
/// `x_norm_le_r`, `a_norm_le_r`, `weight_certificate`, `hessian_ge_l`,
/// `lipschitz_log_bound`. The `n × n` spectra are skipped above
/// [`MAX_SPECTRUM_ROWS`] rows.
pub fn certificate_suite(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
) -> Result<CertificateReport> {
    hp.validate()?;
    let ev = eval_kernel(ds, x)?;
    let mut report = CertificateReport::default();

    report.push("ell_le_4", 4.0 - ev.ell);
    let fc = ev.f.dot(&ev.c);
    report.push(
        "fc_inner_range",
        (2.0 - fc).min(fc + 0.25 * ds.b().norm_squared()),
    );

    if ds.n() <= MAX_SPECTRUM_ROWS {
        let b = build_b(&ev.f, ds.b())?;
        report.push("b_spectrum", spectrum_margin(&b, -4.0, 8.0)?);
        report.push("b_norm_le_11", 11.0 + 1e-9 - spectral_norm(&b)?);
        let b1 = ds.b1().clone_owned();
        report.push(
            "bc_spectrum",
            spectrum_margin(&build_b(&ev.f1, &b1)?, -4.0, 8.0)?,
        );
        report.push(
            "curvature_spectrum",
            spectrum_margin(&curvature_matrix(&ev.f, ds.b())?, -4.0, 8.0)?,
        );
    }

    report.push("ell1_ge_gamma", ev.ell1 - hp.gamma);
    report.push("ell_ge_gamma", ev.ell - hp.gamma);
    report.push("x_norm_le_r", hp.r - x.norm());
    report.push("a_norm_le_r", hp.r - spectral_norm(ds.a())?);

    let sigma_min = singular_value_min(ds.a())?;
    match psd_weight_bound_from_sigma(hp.gamma_c, hp.gamma, hp.l, sigma_min) {
        Ok(theta) => {
            let wmin_sq = hp.w.iter().map(|w| w * w).fold(f64::INFINITY, f64::min);
            report.push("weight_certificate", wmin_sq - theta);
        }
        Err(_) => report.fail("weight_certificate"),
    }

    match objective::hessian(ds, hp, x) {
        Ok(h) => {
            let (lo, _) = sym_eig_extremes(&h)?;
            report.push("hessian_ge_l", lo - hp.l * (1.0 - 1e-6));
        }
        Err(_) => report.fail("hessian_ge_l"),
    }

    let lip = lipschitz_bound(ds, hp)?;
    report.push("lipschitz_log_bound", lip.log_bound);
    Ok(report)
}

/// Outcome of checking `r_{t+1} ≤ 2 (ε₀ + r̄_t / (l − r̄_t)) r_t` along a run,
/// with `r_t = ‖x_t − x̂‖` and `r̄_t = M r_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkAudit {
    /// No iterate satisfied the premise `M r_t ≤ 0.1 l`.
    Vacuous,
    Checked {
        steps: usize,
        violations: usize,
    },
}

pub fn shrinking_audit(report: &SolveReport, log_m: f64, l: f64, eps0: f64) -> ShrinkAudit {
    let r = report.distances_to_final();
    let mut steps = 0;
    let mut violations = 0;
    for t in 0..r.len().saturating_sub(2) {
        if r[t] <= 0.0 {
            continue;
        }
        let log_rbar = log_m + r[t].ln();
        if log_rbar > (0.1 * l).ln() {
            continue;
        }
        let rbar = log_rbar.exp();
        let bound = 2.0 * (eps0 + rbar / (l - rbar)) + 1e-6;
        steps += 1;
        if r[t + 1] / r[t] > bound {
            violations += 1;
        }
    }
    if steps == 0 {
        ShrinkAudit::Vacuous
    } else {
        ShrinkAudit::Checked { steps, violations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_optimum_closed_forms() {
        assert!((scalar_barrier_optimum(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((scalar_barrier_optimum(0.2).unwrap() - 0.4f64.sqrt()).abs() < 1e-15);
        assert!((scalar_barrier_optimum(0.2).unwrap() - 0.6325).abs() < 1e-4);
        assert!(scalar_barrier_optimum(0.0).is_err());
        assert!(scalar_barrier_optimum(-1.0).is_err());
    }

    #[test]
    fn barrier_optimum_matches_grid_search() {
        for gamma_c in [0.1, 0.2, 0.5] {
            let objective = |s: f64| 0.5 * s + gamma_c / s;
            let (mut best_s, mut best) = (0.0, f64::INFINITY);
            for k in 1..=4_000_000 {
                let s = k as f64 * 1e-6;
                let v = objective(s);
                if v < best {
                    (best_s, best) = (s, v);
                }
            }
            let got = scalar_barrier_optimum(gamma_c).unwrap();
            assert!((got - best_s).abs() < 1e-5, "{gamma_c}: {got} vs {best_s}");
        }
    }

    #[test]
    fn barrier_optimum_squares_back() {
        for g in [0.1, 0.15, 0.2, 0.225, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5] {
            let s = scalar_barrier_optimum(g).unwrap();
            assert!((s * s - 2.0 * g).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn upper_band_collapses_at_zero_slack() {
        assert_eq!(barrier_upper_band(0.2, 0.0).unwrap(), 0.4f64.sqrt());
        assert!(barrier_upper_band(0.2, 0.01).unwrap() > 0.4f64.sqrt());
    }

    #[test]
    fn tau_by_substitution() {
        // ℓ₂ = ε₂ = 0.05 with n₁ = 2000, n₂ = 8000.
        let a = audit_from_losses(0.2, 1.0, 0.05, 2000, 8000).unwrap();
        let expected = 0.4f64.sqrt() / 2000.0 - 0.05 / 8000.0;
        assert!((a.tau_c - expected).abs() < 1e-18);
        assert!((a.tau_c - 3.0998e-4).abs() < 1e-8);
        assert_eq!(a.eps2, 0.05);
    }

    #[test]
    fn tau_without_slack() {
        let a = audit_from_losses(0.3, 0.9, -0.2, 500, 500).unwrap();
        assert_eq!(a.eps2, 0.0);
        assert_eq!(a.tau_c, 0.6f64.sqrt() / 500.0);
    }

    #[test]
    fn tau_scales_inversely_with_split_size() {
        let base = audit_from_losses(0.2, 0.8, 0.03, 100, 400).unwrap();
        for k in [2usize, 5, 10] {
            let scaled = audit_from_losses(0.2, 0.8, 0.03, 100 * k, 400 * k).unwrap();
            let first = scaled.tau_c + scaled.eps2 / scaled.n2 as f64;
            let base_first = base.tau_c + base.eps2 / base.n2 as f64;
            assert!((first - base_first / k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn satisfied_flag_tracks_definition() {
        let a = audit_from_losses(0.2, 0.7, 0.01, 200, 800).unwrap();
        assert_eq!(
            a.satisfied,
            a.ell1_per_row >= a.tau_c + a.ell2_per_row - 1e-12
        );
        assert!(a.satisfied);
        let b = audit_from_losses(0.2, 0.1, 0.01, 200, 800).unwrap();
        assert!(!b.satisfied);
    }

    #[test]
    fn barrier_slack_is_zero_at_scalar_optimum() {
        let s = scalar_barrier_optimum(0.2).unwrap();
        let a = audit_from_losses(0.2, s, 0.0, 10, 10).unwrap();
        assert!(a.eps1.abs() < 1e-15);
        assert!(a.barrier_near_optimal(DEFAULT_EPS1));
    }

    #[test]
    fn report_text_round_trip() {
        let report = CertificateReport {
            items: vec![
                CertificateItem {
                    name: "ell_le_4".into(),
                    pass: true,
                    margin: 3.25,
                },
                CertificateItem {
                    name: "weight_certificate".into(),
                    pass: false,
                    margin: f64::NEG_INFINITY,
                },
            ],
        };
        let text = report.to_string();
        assert_eq!(
            text,
            "ITEM ell_le_4 PASS margin=3.25e0\nITEM weight_certificate FAIL margin=-inf\n"
        );
        assert_eq!(text.parse::<CertificateReport>().unwrap(), report);
        assert!("ITEM x MAYBE margin=1"
            .parse::<CertificateReport>()
            .is_err());
        assert!("ITEM x PASS".parse::<CertificateReport>().is_err());
    }

    #[test]
    fn fd_rejects_bad_step() {
        let ds = Dataset::new(
            DenseMatrix::zeros(4, 2),
            DenseVector::from_element(4, 0.25),
            2,
        )
        .unwrap();
        let hp = Hyperparameters::uniform(0.2, 4, 1.0).unwrap();
        assert!(fd_gradient(&ds, &hp, &DenseVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn fd_on_zero_matrix_is_zero() {
        let ds = Dataset::new(
            DenseMatrix::zeros(4, 2),
            DenseVector::from_element(4, 0.25),
            2,
        )
        .unwrap();
        let hp = Hyperparameters::uniform(0.2, 4, 1.0).unwrap();
        let x = DenseVector::from_row_slice(&[0.4, -0.2]);
        assert_eq!(
            fd_gradient(&ds, &hp, &x, DEFAULT_FD_STEP).unwrap(),
            DenseVector::zeros(2)
        );
        assert_eq!(
            fd_hessian(&ds, &hp, &x, DEFAULT_FD_HESSIAN_STEP).unwrap(),
            DenseMatrix::zeros(2, 2)
        );
    }
}
