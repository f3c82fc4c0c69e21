use thiserror::Error;

/// Errors raised by the library. Variants are grouped so the CLI can map
/// every validation problem to exit status 2.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error in {field}: {msg}")]
    Parse { field: String, msg: String },
    #[error("generator registry exhausted: {0}")]
    RegistryExhausted(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
}

impl Error {
    pub fn parse(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
