//! Dense linear algebra needed by the rest of the crate.
//!
//! Storage is `nalgebra`'s column-major `DMatrix`/`DVector`; everything here
//! is a pure function of its inputs.

use nalgebra::{DMatrix, DVector, DVectorView, Dyn, MatrixView, U1};

use crate::error::{dim_err, Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Borrowed row block of a [`DenseMatrix`] (e.g. the copyright rows `A₁`).
pub type RowBlock<'a> = MatrixView<'a, f64, Dyn, Dyn, U1, Dyn>;

/// Softmax with max-shift stabilization.
///
/// Output entries are strictly positive and sum to one. Adding a constant to
/// every entry of `v` leaves the result unchanged.
pub fn stable_softmax(v: &DenseVector) -> Result<DenseVector> {
    softmax_view(v.as_view())
}

pub(crate) fn softmax_view(v: DVectorView<'_, f64>) -> Result<DenseVector> {
    if v.is_empty() {
        return Err(Error::Empty("stable_softmax"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("stable_softmax"));
    }
    let shift = v.max();
    let mut out = v.map(|x| (x - shift).exp());
    let total = out.sum();
    out /= total;
    Ok(out)
}

/// Smallest and largest eigenvalue of the symmetric part `(M + Mᵀ)/2`.
pub fn sym_eig_extremes(m: &DenseMatrix) -> Result<(f64, f64)> {
    if !m.is_square() {
        return Err(dim_err(
            "sym_eig_extremes",
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.is_empty() {
        return Err(Error::Empty("sym_eig_extremes"));
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    Ok((eig.min(), eig.max()))
}

/// `σ_min(A)`: square root of the smallest eigenvalue of `AᵀA`, clamped at 0.
///
/// A matrix with more columns than rows has a nontrivial kernel, so its
/// `σ_min` is 0 by this definition.
pub fn singular_value_min(a: &DenseMatrix) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("singular_value_min"));
    }
    if a.ncols() > a.nrows() {
        return Ok(0.0);
    }
    Ok(a.singular_values().min().max(0.0))
}

/// Spectral norm `‖A‖ = sup ‖Ax‖₂ / ‖x‖₂`.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("spectral_norm"));
    }
    Ok(a.singular_values().max())
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    let mut s = m + m.transpose();
    s *= 0.5;
    s
}

/// `Aᵀ diag(weights) A`, computed without forming the diagonal matrix.
pub fn weighted_gram(a: RowBlock<'_>, weights: &DenseVector) -> DenseMatrix {
    debug_assert_eq!(a.nrows(), weights.len());
    let mut scaled = a.clone_owned();
    for (mut row, w) in scaled.row_iter_mut().zip(weights.iter()) {
        row *= *w;
    }
    let g = a.transpose() * scaled;
    symmetrize(&g)
}

/// Returns a borrowed view of rows `start..start + len`.
pub fn row_block(a: &DenseMatrix, start: usize, len: usize) -> RowBlock<'_> {
    a.rows(start, len)
}
