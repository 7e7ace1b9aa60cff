use thiserror::Error;

/// Failures surfaced by the library.
///
/// `Validation` carries a JSON-pointer style path (`/k`, `/actions/0/probs`)
/// so that the CLI can point at the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value at {path}: {reason}")]
    Validation { path: String, reason: String },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn precondition(reason: impl Into<String>) -> Self {
        Error::Precondition(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
