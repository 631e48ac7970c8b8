use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("undefined function: {0}")]
    Undefined(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("insufficient truncation: {0}")]
    Truncation(String),
    #[error("nonvanishing residue: {0}")]
    NonvanishingResidue(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-simple ramification at z = {0}")]
    NonSimpleRamification(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Cache(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
