use thiserror::Error;

/// Library-wide error type.
///
/// `InvalidInput` covers semantic violations of preconditions (bad dimensions,
/// out-of-domain parameters, empty inputs), `Format` covers unparseable file
/// content, and `Numerical` covers failures that arise during computation
/// (non-finite likelihoods, singular matrices).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
