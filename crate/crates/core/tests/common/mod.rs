#![allow(dead_code)]

use copyreg::numerics::stable_softmax;
use copyreg::{Dataset, DenseMatrix, DenseVector, Hyperparameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DenseVector {
    DenseVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn normal_mat(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(n, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub struct Instance {
    pub ds: Dataset,
    pub hp: Hyperparameters,
    pub x: DenseVector,
}

/// Small random instance: n in [5, 40], d in [2, 8], γ_c in [0.1, 0.5],
/// redrawn until ℓ₁(x) ≥ 0.01.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(5..=40);
        let d = rng.random_range(2..=8);
        let n1 = rng.random_range(1..n);
        let a = normal_mat(&mut rng, n, d, 1.0);
        let b = stable_softmax(&normal_vec(&mut rng, n, 1.0)).unwrap();
        let ds = Dataset::new(a, b, n1).unwrap();
        let gamma_c = rng.random_range(0.1..=0.5);
        let w = DenseVector::from_fn(n, |_, _| rng.random_range(0.1..1.0));
        let hp = Hyperparameters::new(gamma_c, w, 1.0, 0.5, 4.0, 0.01).unwrap();
        let x = normal_vec(&mut rng, d, 0.5);
        let ev = copyreg::kernel::eval_kernel(&ds, &x).unwrap();
        if ev.ell1 >= 0.01 {
            return Instance { ds, hp, x };
        }
    }
}
