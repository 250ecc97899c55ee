use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input data is structurally valid but unusable (zero-norm row,
    /// non-finite entry, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A file could not be parsed; `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// A linear system was too ill-conditioned to solve reliably.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
