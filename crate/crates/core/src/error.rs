use thiserror::Error;

/// Errors raised by the toolkit. Mathematical findings (a violated
/// inequality) are not errors; they are reported through the result types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("negative rate {value} at ({from}, {to})")]
    NegativeRate { from: usize, to: usize, value: f64 },

    #[error("invalid reference measure: {0}")]
    InvalidMeasure(String),

    #[error("stationary distribution is not unique: {0}")]
    NonUniqueStationary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("chain is not reversible: {0}")]
    NotReversible(String),

    #[error("invalid CD-function: {0}")]
    InvalidCdFunction(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("quadrature error too large: {0}")]
    Quadrature(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
