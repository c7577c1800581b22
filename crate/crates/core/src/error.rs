//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library.
///
/// The variants map onto the CLI exit codes: configuration and domain
/// problems exit with 1, capacity problems with 2.
#[derive(Debug, Error)]
pub enum StabError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested Hilbert space exceeds the dense capacity.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// A numerical routine failed to converge or lost positivity.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The experiment configuration is malformed.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, StabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(StabError::Domain(msg.into()))
}
