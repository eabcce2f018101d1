use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("class violation: {0}")]
    ClassViolation(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("malformed stream: {0}")]
    Malformed(String),

    #[error("size cap exceeded: {size} > {cap}")]
    SizeCap { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
