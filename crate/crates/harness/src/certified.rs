//! Instances whose weights meet the PSD weight bound.
//!
//! The bound needs a floor `γ` on `ℓ` and `ℓ₁`. Here it is measured as the
//! smallest value over a cloud of probe points, and the certificate is then
//! only claimed at points where that floor still holds.

use copyreg::kernel::eval_kernel;
use copyreg::objective::psd_weight_bound;
use copyreg::{Dataset, DenseVector, Hyperparameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::generate_dataset;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct CertifiedInstance {
    pub ds: Dataset,
    pub hp: Hyperparameters,
    pub probes: Vec<DenseVector>,
    /// The weight bound `θ`; every `w_i² ≥ θ`.
    pub theta: f64,
}

impl CertifiedInstance {
    /// Whether the certificate's premises hold at `x`.
    pub fn covers(&self, x: &DenseVector) -> Result<bool> {
        let ev = eval_kernel(&self.ds, x)?;
        Ok(ev.ell1 >= self.hp.gamma && ev.ell >= self.hp.gamma && x.norm() <= self.hp.r)
    }
}

/// `count` points uniform in the `d`-ball of the given radius.
pub fn ball_probes(d: usize, count: usize, radius: f64, seed: u64) -> Vec<DenseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir =
                DenseVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            dir * (radius * rng.random_range(0.0f64..1.0).powf(1.0 / d as f64))
        })
        .collect()
}

/// Sets `γ` to the probe floor of `min(ℓ, ℓ₁)` and every weight to `√θ`.
pub fn certify(
    ds: Dataset,
    gamma_c: f64,
    probes: Vec<DenseVector>,
    l: f64,
    r: f64,
) -> Result<CertifiedInstance> {
    let mut floor = f64::INFINITY;
    for x in &probes {
        let ev = eval_kernel(&ds, x)?;
        floor = floor.min(ev.ell1.min(ev.ell));
    }
    let n = ds.n();
    let mut hp = Hyperparameters::new(
        gamma_c,
        DenseVector::from_element(n, 1.0),
        l,
        floor,
        r,
        0.01,
    )?;
    let theta = psd_weight_bound(&ds, &hp)?;
    hp.w = DenseVector::from_element(n, theta.sqrt() * (1.0 + 1e-12));
    Ok(CertifiedInstance {
        ds,
        hp,
        probes,
        theta,
    })
}

/// Small random family: `d ∈ [2, 8]`, `n ∈ [max(5, d + 2), 40]`,
/// `γ_c ∈ [0.1, 0.5]`, twenty probes in the radius-4 ball, `l = 1`.
pub fn random_certified(seed: u64) -> Result<CertifiedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=8);
    let n = rng.random_range((d + 2).max(5)..=40);
    let n1 = rng.random_range(1..n);
    let gamma_c = rng.random_range(0.1..=0.5);
    let ds = generate_dataset(n, d, n1, rng.random())?;
    let probes = ball_probes(d, 20, 4.0, rng.random());
    certify(ds, gamma_c, probes, 1.0, 4.0)
}

/// `n = 200`, `d = 16`, `n₁ = 40`, `γ_c = 0.2`, with the floor measured over
/// fifty probes in the unit ball (where a solve from `‖x₀‖ = 1` stays).
pub fn convergence_instance(seed: u64) -> Result<CertifiedInstance> {
    let ds = generate_dataset(200, 16, 40, seed)?;
    let mut probes = ball_probes(16, 50, 1.0, seed ^ 0xB0B);
    probes.push(DenseVector::zeros(16));
    certify(ds, 0.2, probes, 1.0, 4.0)
}
