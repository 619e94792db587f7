//! Softmax regression primitives over a row-split dataset.
//!
//! Rows `0..n1` of `A` are the copyrighted block `A₁`, the rest are `A₂`.
//! `f₁` is the softmax of `A₁x` taken over the copyright rows alone, so that
//! `c₁ = f₁ − b₁` is well-typed.

use nalgebra::DVectorView;

use crate::error::{dim_err, Error, Result};
use crate::numerics::{row_block, softmax_view, weighted_gram, DenseMatrix, DenseVector, RowBlock};

/// Input matrix, target and copyright split.
///
/// The target is rescaled per split so that `‖b₁‖₂ ≤ 1` and `‖b₂‖₂ ≤ 1`;
/// the untouched target is kept in [`Dataset::b_original`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    a: DenseMatrix,
    b: DenseVector,
    b_original: DenseVector,
    n1: usize,
}

impl Dataset {
    pub fn new(a: DenseMatrix, b: DenseVector, n1: usize) -> Result<Self> {
        let n = a.nrows();
        if b.len() != n {
            return Err(dim_err("Dataset::new", format!("b of length {n}"), b.len()));
        }
        if a.ncols() == 0 {
            return Err(Error::InvalidDataset("A has no columns".into()));
        }
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidDataset(format!(
                "split index n1 = {n1} must satisfy 0 < n1 < n = {n}"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Dataset::new"));
        }
        if b.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidDataset("b entries must lie in [0, 1]".into()));
        }
        let mut scaled = b.clone();
        for (start, len) in [(0, n1), (n1, n - n1)] {
            let mut block = scaled.rows_mut(start, len);
            let norm = block.norm();
            if norm > 1.0 {
                block /= norm;
            }
        }
        Ok(Self {
            a,
            b: scaled,
            b_original: b,
            n1,
        })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    /// Split-normalized target.
    pub fn b(&self) -> &DenseVector {
        &self.b
    }

    pub fn b_original(&self) -> &DenseVector {
        &self.b_original
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n() - self.n1
    }

    pub fn a1(&self) -> RowBlock<'_> {
        row_block(&self.a, 0, self.n1)
    }

    pub fn a2(&self) -> RowBlock<'_> {
        row_block(&self.a, self.n1, self.n2())
    }

    pub fn b1(&self) -> DVectorView<'_, f64> {
        self.b.rows(0, self.n1)
    }

    pub fn b2(&self) -> DVectorView<'_, f64> {
        self.b.rows(self.n1, self.n2())
    }

    pub(crate) fn check_param(&self, op: &'static str, x: &DenseVector) -> Result<()> {
        if x.len() != self.d() {
            return Err(dim_err(op, format!("x of length {}", self.d()), x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(op));
        }
        Ok(())
    }
}

/// Softmax fit and residuals at one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEval {
    /// Softmax of `Ax` over all `n` rows.
    pub f: DenseVector,
    pub c: DenseVector,
    pub ell: f64,
    /// Softmax of `A₁x` over the copyright rows.
    pub f1: DenseVector,
    pub c1: DenseVector,
    pub ell1: f64,
    /// `ell − ell1`, stored literally. Can be negative.
    pub ell2: f64,
    /// Softmax of `A₂x` over the non-copyright rows (diagnostic).
    pub f2: DenseVector,
    pub c2: DenseVector,
    /// `⟨c₂, c₂⟩` with `c₂ = f₂ − b₂` (diagnostic).
    pub ell2_direct: f64,
}

pub fn eval_kernel(ds: &Dataset, x: &DenseVector) -> Result<KernelEval> {
    ds.check_param("eval_kernel", x)?;
    let u = ds.a() * x;
    let n1 = ds.n1();
    let n2 = ds.n2();

    let f = softmax_view(u.as_view())?;
    let c = &f - ds.b();
    let ell = c.norm_squared();

    let f1 = softmax_view(u.rows(0, n1))?;
    let c1 = &f1 - ds.b1();
    let ell1 = c1.norm_squared();

    let f2 = softmax_view(u.rows(n1, n2))?;
    let c2 = &f2 - ds.b2();
    let ell2_direct = c2.norm_squared();

    Ok(KernelEval {
        f,
        c,
        ell,
        f1,
        c1,
        ell1,
        ell2: ell - ell1,
        f2,
        c2,
        ell2_direct,
    })
}

/// `f ∘ c − ⟨f, c⟩ f`: the softmax Jacobian applied to the residual.
///
/// `Aᵀ` of this vector is the gradient of `0.5 ⟨c, c⟩`.
pub fn residual_direction(f: &DenseVector, c: &DenseVector) -> DenseVector {
    let fc = f.dot(c);
    f.component_mul(c) - f * fc
}

fn check_pair(op: &'static str, f: &DenseVector, b: &DenseVector) -> Result<()> {
    if f.len() != b.len() {
        return Err(dim_err(op, format!("b of length {}", f.len()), b.len()));
    }
    if f.is_empty() {
        return Err(Error::Empty(op));
    }
    Ok(())
}

/// The five-term closed form
///
/// ```text
/// B = ⟨3f − 2b, f⟩ ffᵀ + ⟨f − b, f⟩ diag(f) + diag((2f − b) ∘ f)
///     + (b ∘ f) fᵀ + f (b ∘ f)ᵀ
/// ```
///
/// This form does not equal the second derivative of `0.5 ⟨c, c⟩` with
/// respect to `Ax`; the objective uses [`curvature_matrix`] for that. It is
/// kept because the spectral bounds `−4I ⪯ B ⪯ 8I` and `‖B‖ ≤ 11` are stated
/// for it.
pub fn build_b(f: &DenseVector, b: &DenseVector) -> Result<DenseMatrix> {
    check_pair("build_b", f, b)?;
    let n = f.len();
    let outer_coef = (f * 3.0 - b * 2.0).dot(f);
    let diag_coef = (f - b).dot(f);
    let bf = b.component_mul(f);
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut v = outer_coef * f[i] * f[j] + bf[i] * f[j] + f[i] * bf[j];
            if i == j {
                v += diag_coef * f[i] + (2.0 * f[i] - b[i]) * f[i];
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// [`build_b`] on the copyright split `(f₁, b₁)`.
pub fn build_bc(eval: &KernelEval, ds: &Dataset) -> Result<DenseMatrix> {
    build_b(&eval.f1, &ds.b1().clone_owned())
}

/// Exact second derivative of `0.5 ‖softmax(u) − b‖²` with respect to `u`:
///
/// ```text
/// ⟨3f − 2b, f⟩ ffᵀ − ⟨f − b, f⟩ diag(f) + diag(q) − q fᵀ − f qᵀ,   q = (2f − b) ∘ f
/// ```
///
/// It shares the `ffᵀ` coefficient with [`build_b`] but differs in the sign
/// of the `diag(f)` term and in the rank-two cross terms.
pub fn curvature_matrix(f: &DenseVector, b: &DenseVector) -> Result<DenseMatrix> {
    check_pair("curvature_matrix", f, b)?;
    let n = f.len();
    let parts = CurvatureParts::new(f, b);
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut v = parts.outer_coef * f[i] * f[j] - parts.q[i] * f[j] - f[i] * parts.q[j];
            if i == j {
                v += parts.diag[i];
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Rank-structured pieces of [`curvature_matrix`].
struct CurvatureParts {
    outer_coef: f64,
    q: DenseVector,
    diag: DenseVector,
}

impl CurvatureParts {
    fn new(f: &DenseVector, b: &DenseVector) -> Self {
        let outer_coef = (f * 3.0 - b * 2.0).dot(f);
        let q = (f * 2.0 - b).component_mul(f);
        let diag = &q - f * (f - b).dot(f);
        Self {
            outer_coef,
            q,
            diag,
        }
    }
}

/// `Aᵀ C A` with `C = curvature_matrix(f, b)`, assembled in `O(n d²)`
/// without forming the `n × n` matrix.
pub fn curvature_sandwich(a: RowBlock<'_>, f: &DenseVector, b: &DenseVector) -> DenseMatrix {
    debug_assert_eq!(a.nrows(), f.len());
    let parts = CurvatureParts::new(f, b);
    let p = a.transpose() * f;
    let aq = a.transpose() * &parts.q;
    let mut out = weighted_gram(a, &parts.diag);
    out += &p * p.transpose() * parts.outer_coef;
    let cross = &aq * p.transpose();
    out -= &cross;
    out -= cross.transpose();
    out
}
