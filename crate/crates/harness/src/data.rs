//! Seeded Gaussian datasets.

use copyreg::numerics::stable_softmax;
use copyreg::{Dataset, DenseMatrix, DenseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{HarnessError, Result};

/// `A` with i.i.d. standard normal entries (filled row by row) and
/// `b = softmax(u)` for standard normal `u`, both from one ChaCha8 stream.
pub fn generate_dataset(n: usize, d: usize, n1: usize, seed: u64) -> Result<Dataset> {
    if d == 0 {
        return Err(HarnessError::Config("d must be positive".into()));
    }
    if n1 == 0 || n1 >= n {
        return Err(HarnessError::Config(format!(
            "n1 = {n1} must lie in (0, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        entries.push(rng.sample::<f64, _>(StandardNormal));
    }
    let a = DenseMatrix::from_row_slice(n, d, &entries);
    let u = DenseVector::from_fn(n, |_, _| rng.sample(StandardNormal));
    let b = stable_softmax(&u)?;
    Ok(Dataset::new(a, b, n1)?)
}

/// `x ~ N(0, I_d)`.
pub fn gaussian_vector(d: usize, seed: u64) -> DenseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}
