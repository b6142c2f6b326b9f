use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("non-finite density for component {component} at observation {observation}")]
    NonFiniteDensity { component: usize, observation: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("all {attempted} fits failed: {last}")]
    AllRunsFailed { attempted: usize, last: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
