use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FidError>;

#[derive(Debug, Error)]
pub enum FidError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("numeric invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FidError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FidError::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FidError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            FidError::Config(_) | FidError::Parse(_) | FidError::InvalidArgument(_) => 2,
            FidError::Invariant(_) | FidError::Resource(_) => 3,
            FidError::Io { .. } => 4,
        }
    }
}
