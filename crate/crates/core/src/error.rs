use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dense budget exceeded: total dimension {dim} > {max}")]
    BudgetExceeded { dim: usize, max: usize },
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("operator is not normalized (trace {0})")]
    NotNormalized(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
