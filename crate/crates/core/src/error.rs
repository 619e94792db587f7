use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    Dimension {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{0}: input is empty")]
    Empty(&'static str),

    #[error("{0}: input contains non-finite values")]
    NonFinite(&'static str),

    /// ℓ₁(x) fell below the barrier tolerance; the copyright split is
    /// reproduced (almost) exactly and `γ_c / ℓ₁` is undefined.
    #[error("degenerate fit: ell1 = {ell1:e} is below the barrier tolerance {tol:e}")]
    DegenerateFit { ell1: f64, tol: f64 },

    #[error("matrix is rank deficient (sigma_min = {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    #[error("Hessian is numerically singular or indefinite (damping = {damping:e})")]
    SingularHessian { damping: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(op: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::Dimension {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
