use thiserror::Error;

/// Errors raised by geometry kernels, depth computations and I/O.
#[derive(Debug, Error)]
pub enum HoroError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A value left the domain of the manifold (ball boundary, non-PD matrix,
    /// ray parameter past the representable range).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HoroError>;

impl HoroError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HoroError::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HoroError::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(HoroError::DimensionMismatch { expected, found })
        }
    }
}
