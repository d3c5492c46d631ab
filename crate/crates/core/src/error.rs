use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("parameter combination is outside every transfer case: {0}")]
    UnsupportedCase(String),

    #[error("outside the domain of the construction: {0}")]
    Domain(String),

    #[error("bound inapplicable: {0}")]
    InapplicableBound(String),

    #[error("phonon cutoff overflow: population {population:e} at n_max exceeds {threshold:e}")]
    CutoffOverflow { population: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
