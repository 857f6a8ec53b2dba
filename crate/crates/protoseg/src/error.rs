//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/mask shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Weight bundle or module configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller-supplied parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A file is not in the expected on-disk format.
    #[error("format error: {0}")]
    Format(String),
    /// A computation produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach frame/stream context while propagating pipeline errors.
    pub fn with_context(self, context: &str) -> Error {
        match self {
            Error::Dimension(m) => Error::Dimension(format!("{context}: {m}")),
            Error::Config(m) => Error::Config(format!("{context}: {m}")),
            Error::Parameter(m) => Error::Parameter(format!("{context}: {m}")),
            Error::Format(m) => Error::Format(format!("{context}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{context}: {m}")),
            Error::Io(e) => Error::Format(format!("{context}: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
