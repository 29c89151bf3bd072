use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {label} has {count} samples, at least {required} required")]
    ClassTooSmall {
        label: u8,
        count: usize,
        required: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("{}: line {line}, column `{column}`: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("method `{method}` does not support {what}")]
    Unsupported { method: &'static str, what: String },

    #[error("bootstrap shuffle {index}: {source}")]
    Shuffle {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical contract violated: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI: 3 for numerical-contract
    /// violations, 2 for everything else (bad input, bad flags, I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            Error::Shuffle { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
