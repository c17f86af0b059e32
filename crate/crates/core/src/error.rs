use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shapes, ranges, call order).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    /// Input data is well-formed but unusable for the requested operation.
    #[error("invalid data: {0}")]
    Data(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch} (parameter norms: {norms})")]
    NonFinite {
        epoch: usize,
        batch: usize,
        norms: String,
    },

    #[error("checksum mismatch: model file is corrupt or truncated")]
    Checksum,

    #[error("unsupported model format version {found} (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
