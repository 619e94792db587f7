//! Training objective, its analytic derivatives, and bound calculators.

use crate::error::{dim_err, Error, Result};
use crate::kernel::{curvature_sandwich, eval_kernel, residual_direction, Dataset, KernelEval};
use crate::numerics::{singular_value_min, weighted_gram, DenseMatrix, DenseVector};

/// Below this value of `ℓ₁` the barrier `γ_c / ℓ₁` is treated as undefined.
pub const BARRIER_TOL: f64 = 1e-12;

/// Objective weights and the scalars the certificates are stated in.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Copyright weight `γ_c`.
    pub gamma_c: f64,
    /// Regularization weights, `W = diag(w)`.
    pub w: DenseVector,
    /// Target strong-convexity level.
    pub l: f64,
    /// Assumed lower bound on `ℓ₁(x)` used by the weight certificate.
    pub gamma: f64,
    /// Norm budget on `‖A‖` and `‖x‖₂`.
    pub r: f64,
    /// Hessian approximation tolerance `ε₀`.
    pub eps0: f64,
}

impl Hyperparameters {
    pub fn new(
        gamma_c: f64,
        w: DenseVector,
        l: f64,
        gamma: f64,
        r: f64,
        eps0: f64,
    ) -> Result<Self> {
        let hp = Self {
            gamma_c,
            w,
            l,
            gamma,
            r,
            eps0,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// Uniform weights `w_i = weight` and defaults `l = 1`, `γ = 0.5`,
    /// `R = 4`, `ε₀ = 0.01`.
    pub fn uniform(gamma_c: f64, n: usize, weight: f64) -> Result<Self> {
        Self::new(
            gamma_c,
            DenseVector::from_element(n, weight),
            1.0,
            0.5,
            4.0,
            0.01,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperparameter(msg));
        if !(self.gamma_c > 0.0 && self.gamma_c.is_finite()) {
            return bad(format!("gamma_c must be positive, got {}", self.gamma_c));
        }
        if self.w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("regularization weights must be positive".into());
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad(format!("l must be positive, got {}", self.l));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.r >= 4.0 && self.r.is_finite()) {
            return bad(format!("R must be at least 4, got {}", self.r));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.1) {
            return bad(format!("eps0 must lie in (0, 0.1), got {}", self.eps0));
        }
        Ok(())
    }

    fn check_against(&self, ds: &Dataset) -> Result<()> {
        if self.w.len() != ds.n() {
            return Err(dim_err(
                "Hyperparameters",
                format!("w of length {}", ds.n()),
                self.w.len(),
            ));
        }
        Ok(())
    }

    fn w_squared(&self) -> DenseVector {
        self.w.map(|v| v * v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub ell: f64,
    pub ell1: f64,
    pub ell2: f64,
    /// `γ_c / ℓ₁`.
    pub copyright_term: f64,
    /// `0.5 ‖W A x‖²`.
    pub reg: f64,
    pub total: f64,
}

fn barrier_guard(ev: &KernelEval) -> Result<()> {
    if ev.ell1 <= BARRIER_TOL {
        return Err(Error::DegenerateFit {
            ell1: ev.ell1,
            tol: BARRIER_TOL,
        });
    }
    Ok(())
}

fn prepare(ds: &Dataset, hp: &Hyperparameters, x: &DenseVector) -> Result<KernelEval> {
    hp.validate()?;
    hp.check_against(ds)?;
    let ev = eval_kernel(ds, x)?;
    barrier_guard(&ev)?;
    Ok(ev)
}

pub fn loss(ds: &Dataset, hp: &Hyperparameters, x: &DenseVector) -> Result<LossBreakdown> {
    let ev = prepare(ds, hp, x)?;
    Ok(loss_from_eval(ds, hp, x, &ev))
}

pub(crate) fn loss_from_eval(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    ev: &KernelEval,
) -> LossBreakdown {
    let wax = (ds.a() * x).component_mul(&hp.w);
    let reg = 0.5 * wax.norm_squared();
    let copyright_term = hp.gamma_c / ev.ell1;
    LossBreakdown {
        ell: ev.ell,
        ell1: ev.ell1,
        ell2: ev.ell2,
        copyright_term,
        reg,
        total: 0.5 * ev.ell1 + copyright_term + 0.5 * ev.ell2 + reg,
    }
}

/// Gradient of `0.5 ℓ` over the full dataset: `Aᵀ(f ∘ c − ⟨f, c⟩ f)`.
pub fn residual_gradient(ds: &Dataset, ev: &KernelEval) -> DenseVector {
    ds.a().transpose() * residual_direction(&ev.f, &ev.c)
}

/// `g₁ = A₁ᵀ(f₁ ∘ c₁ − ⟨f₁, c₁⟩ f₁)`, half the gradient of `ℓ₁`.
pub fn copyright_half_gradient(ds: &Dataset, ev: &KernelEval) -> DenseVector {
    ds.a1().transpose() * residual_direction(&ev.f1, &ev.c1)
}

/// Gradient of `γ_c / ℓ₁`: `−2 γ_c ℓ₁⁻² g₁`.
pub fn barrier_gradient(ds: &Dataset, ev: &KernelEval, gamma_c: f64) -> DenseVector {
    copyright_half_gradient(ds, ev) * (-2.0 * gamma_c / (ev.ell1 * ev.ell1))
}

/// Gradient of `0.5 ‖W A x‖²`: `Aᵀ W² A x`.
pub fn reg_gradient(ds: &Dataset, w: &DenseVector, x: &DenseVector) -> DenseVector {
    let wsq = w.map(|v| v * v);
    ds.a().transpose() * (ds.a() * x).component_mul(&wsq)
}

pub fn gradient(ds: &Dataset, hp: &Hyperparameters, x: &DenseVector) -> Result<DenseVector> {
    let ev = prepare(ds, hp, x)?;
    Ok(gradient_from_eval(ds, hp, x, &ev))
}

pub(crate) fn gradient_from_eval(
    ds: &Dataset,
    hp: &Hyperparameters,
    x: &DenseVector,
    ev: &KernelEval,
) -> DenseVector {
    residual_gradient(ds, ev) + barrier_gradient(ds, ev, hp.gamma_c) + reg_gradient(ds, &hp.w, x)
}

/// `H = H₁ + H₂ + H₃` with
/// `H₁ = ∇²(γ_c ℓ₁⁻¹)`, `H₂ = ∇²(0.5 ℓ₁ + L_reg)`, `H₃ = ∇²(0.5 ℓ₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianSplit {
    pub barrier: DenseMatrix,
    pub copyright_fit_and_reg: DenseMatrix,
    pub other_fit: DenseMatrix,
}

impl HessianSplit {
    pub fn total(&self) -> DenseMatrix {
        &self.barrier + &self.copyright_fit_and_reg + &self.other_fit
    }
}

pub fn hessian_split(ds: &Dataset, hp: &Hyperparameters, x: &DenseVector) -> Result<HessianSplit> {
    let ev = prepare(ds, hp, x)?;
    let b1 = ds.b1().clone_owned();
    let full_fit = curvature_sandwich(ds.a().rows(0, ds.n()), &ev.f, ds.b());
    let split_fit = curvature_sandwich(ds.a1(), &ev.f1, &b1);
    let reg = weighted_gram(ds.a().rows(0, ds.n()), &hp.w_squared());
    let barrier = barrier_hessian(ds, &ev, hp.gamma_c, &split_fit);
    Ok(HessianSplit {
        barrier,
        copyright_fit_and_reg: &split_fit + reg,
        other_fit: full_fit - split_fit,
    })
}

/// `γ_c (8 ℓ₁⁻³ g₁g₁ᵀ − 2 ℓ₁⁻² A₁ᵀ C₁ A₁)`, from the chain rule on `s ↦ γ_c/s`
/// with `∇ℓ₁ = 2 g₁` and `∇²ℓ₁ = 2 A₁ᵀ C₁ A₁`.
fn barrier_hessian(
    ds: &Dataset,
    ev: &KernelEval,
    gamma_c: f64,
    split_fit: &DenseMatrix,
) -> DenseMatrix {
    let g1 = copyright_half_gradient(ds, ev);
    let l1 = ev.ell1;
    &g1 * g1.transpose() * (8.0 * gamma_c / (l1 * l1 * l1))
        - split_fit * (2.0 * gamma_c / (l1 * l1))
}

pub fn hessian(ds: &Dataset, hp: &Hyperparameters, x: &DenseVector) -> Result<DenseMatrix> {
    let ev = prepare(ds, hp, x)?;
    Ok(hessian_from_eval(ds, hp, &ev))
}

pub(crate) fn hessian_from_eval(
    ds: &Dataset,
    hp: &Hyperparameters,
    ev: &KernelEval,
) -> DenseMatrix {
    let b1 = ds.b1().clone_owned();
    let all_rows = ds.a().rows(0, ds.n());
    let split_fit = curvature_sandwich(ds.a1(), &ev.f1, &b1);
    let mut h = curvature_sandwich(all_rows, &ev.f, ds.b());
    h += weighted_gram(all_rows, &hp.w_squared());
    h += barrier_hessian(ds, ev, hp.gamma_c, &split_fit);
    crate::numerics::symmetrize(&h)
}

/// `8 + 200 γ_c γ⁻³ + l / σ_min²`; weights with `min_i w_i² ≥` this value
/// make the Hessian dominate `l·I` wherever `ℓ₁(x) ≥ γ`.
pub fn psd_weight_bound(ds: &Dataset, hp: &Hyperparameters) -> Result<f64> {
    hp.validate()?;
    let sigma_min = singular_value_min(ds.a())?;
    psd_weight_bound_from_sigma(hp.gamma_c, hp.gamma, hp.l, sigma_min)
}

pub fn psd_weight_bound_from_sigma(
    gamma_c: f64,
    gamma: f64,
    l: f64,
    sigma_min: f64,
) -> Result<f64> {
    if sigma_min.is_nan() || sigma_min <= 0.0 {
        return Err(Error::RankDeficient { sigma_min });
    }
    Ok(8.0 + 200.0 * gamma_c / gamma.powi(3) + l / (sigma_min * sigma_min))
}

/// Natural-log factors of `(13344 γ_c + 2) γ⁻⁴ β⁻² n^1.5 exp(40R²)` with
/// `β = exp(−R²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzComponents {
    /// `ln(13344 γ_c + 2)`
    pub gamma_c: f64,
    /// `−4 ln γ`
    pub gamma: f64,
    /// `−2 ln β = 2R²`
    pub beta: f64,
    /// `1.5 ln n`
    pub n: f64,
    /// `40 R²`
    pub radius: f64,
}

impl LipschitzComponents {
    pub fn sum(&self) -> f64 {
        self.gamma_c + self.gamma + self.beta + self.n + self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    pub log_bound: f64,
    pub components: LipschitzComponents,
    /// `ln R_f = −2 ln β + 1.5 ln n + 3R²`.
    pub log_r_f: f64,
}

pub fn lipschitz_bound(ds: &Dataset, hp: &Hyperparameters) -> Result<LipschitzBound> {
    hp.validate()?;
    Ok(lipschitz_bound_for(hp.gamma_c, hp.gamma, hp.r, ds.n()))
}

pub fn lipschitz_bound_for(gamma_c: f64, gamma: f64, r: f64, n: usize) -> LipschitzBound {
    let r2 = r * r;
    let log_n = (n as f64).ln();
    let components = LipschitzComponents {
        gamma_c: (13344.0 * gamma_c + 2.0).ln(),
        gamma: -4.0 * gamma.ln(),
        beta: 2.0 * r2,
        n: 1.5 * log_n,
        radius: 40.0 * r2,
    };
    LipschitzBound {
        log_bound: components.sum(),
        components,
        log_r_f: 2.0 * r2 + 1.5 * log_n + 3.0 * r2,
    }
}

/// `ln ⟨exp(Ax), 1⟩` at `x`: the quantity `β` lower-bounds. Diagnostic only;
/// the bound calculators always use `β = exp(−R²)`.
pub fn measured_log_beta(ds: &Dataset, x: &DenseVector) -> Result<f64> {
    ds.check_param("measured_log_beta", x)?;
    let u = ds.a() * x;
    let m = u.max();
    Ok(m + u.map(|v| (v - m).exp()).sum().ln())
}
