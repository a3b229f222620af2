use std::io;
use std::path::Path;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Data(String),

    #[error("checkpoint spec mismatch: file digest {found}, expected digest {expected}")]
    SpecMismatch { expected: String, found: String },

    #[error("corrupt checkpoint at byte offset {offset}: {message}")]
    CorruptCheckpoint { offset: u64, message: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Coarse failure class, used to pick the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
    Io,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::DimensionMismatch { .. } | Error::NonFinite(_) => ErrorCategory::Numeric,
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::SpecMismatch { .. }
            | Error::CorruptCheckpoint { .. } => ErrorCategory::Data,
            Error::Io { .. } => ErrorCategory::Io,
        }
    }
}
