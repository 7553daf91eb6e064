use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit-code contract: configuration and usage
/// problems exit with 2, numeric failures with 3.
#[derive(Debug, Error)]
pub enum EqcoError {
    /// An input was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller-side precondition did not hold (empty input, zero count, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A computation produced a NaN or infinity.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// An invalid configuration value.
    #[error("configuration error: {0}")]
    Config(String),
    /// A malformed request, e.g. a chart over a missing column.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl EqcoError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            EqcoError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, EqcoError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(EqcoError::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(EqcoError::Precondition(msg.into()))
}
