use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ambient group mismatch: {left} vs {right}")]
    AmbientMismatch { left: String, right: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
