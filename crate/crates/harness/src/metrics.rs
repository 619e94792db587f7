//! Per-split error metrics and the untrained baseline.

use copyreg::kernel::eval_kernel;
use copyreg::{Dataset, DenseVector};

use crate::data::gaussian_vector;
use crate::error::Result;

/// Errors of one parameter vector on the two splits. Copyright rows are
/// scored with the split softmax `f₁`, the rest with `f₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    pub mae_copyright: f64,
    pub mae_other: f64,
    pub mse_copyright: f64,
    pub mse_other: f64,
    pub tau_mae: f64,
    pub tau_mse: f64,
}

impl SplitMetrics {
    fn from_residuals(c1: &DenseVector, c2: &DenseVector) -> Self {
        let mae = |c: &DenseVector| c.iter().map(|v| v.abs()).sum::<f64>() / c.len() as f64;
        let mse = |c: &DenseVector| c.norm_squared() / c.len() as f64;
        let (mae_copyright, mae_other) = (mae(c1), mae(c2));
        let (mse_copyright, mse_other) = (mse(c1), mse(c2));
        Self {
            mae_copyright,
            mae_other,
            mse_copyright,
            mse_other,
            tau_mae: mae_copyright - mae_other,
            tau_mse: mse_copyright - mse_other,
        }
    }

    fn mean_of(items: &[Self]) -> Self {
        let k = items.len() as f64;
        let mean = |get: fn(&Self) -> f64| items.iter().map(get).sum::<f64>() / k;
        let mse_copyright = mean(|m| m.mse_copyright);
        let mse_other = mean(|m| m.mse_other);
        let mae_copyright = mean(|m| m.mae_copyright);
        let mae_other = mean(|m| m.mae_other);
        Self {
            mae_copyright,
            mae_other,
            mse_copyright,
            mse_other,
            tau_mae: mae_copyright - mae_other,
            tau_mse: mse_copyright - mse_other,
        }
    }
}

pub fn metrics(ds: &Dataset, x: &DenseVector) -> Result<SplitMetrics> {
    let ev = eval_kernel(ds, x)?;
    Ok(SplitMetrics::from_residuals(&ev.c1, &ev.c2))
}

/// Metrics at a single `x ~ N(0, I_d)`.
pub fn random_baseline(ds: &Dataset, seed: u64) -> Result<SplitMetrics> {
    metrics(ds, &gaussian_vector(ds.d(), seed))
}

/// Mean of [`random_baseline`] over `draws` consecutive seeds.
pub fn random_baseline_mean(ds: &Dataset, seed: u64, draws: usize) -> Result<SplitMetrics> {
    let items = (0..draws.max(1) as u64)
        .map(|k| random_baseline(ds, seed.wrapping_add(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitMetrics::mean_of(&items))
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0 + 1.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    sxy / (sxx * syy).sqrt()
}
