use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GmeaError {
    /// A PLY header or body does not match the expected layout. The payload
    /// names the offending property or construct.
    #[error("format error: {0}")]
    Format(String),
    #[error("format error: missing required property `{0}`")]
    MissingProperty(String),
    #[error("truncated input: expected {expected} vertices, found {found}")]
    Truncation { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("image encoding error: {0}")]
    Image(String),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = GmeaError> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(GmeaError::Argument(msg.into()))
}
