use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("invalid density matrix: not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: trace is {0} (expected 1)")]
    InvalidTrace(f64),

    #[error("invalid density matrix: not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("pixel grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("tomography records are not informationally complete: {0}")]
    Incomplete(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
