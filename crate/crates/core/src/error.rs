use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("degenerate functional: {0}")]
    DegenerateFunctional(String),

    #[error("rejection envelope violated: density {density} exceeds envelope {envelope}")]
    EnvelopeViolation { density: f64, envelope: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
