use std::path::PathBuf;

use oia_core::error::OiaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] OiaError),
    #[error("{count} property check(s) failed")]
    PropertyFailure { count: usize },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Core(_) => 1,
            HarnessError::PropertyFailure { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
