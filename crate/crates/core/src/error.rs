use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("params file error: {0}")]
    ParamsFormat(String),

    #[error("episode terminated: every robot is retired")]
    Terminated,

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptyBatch(_) => 2,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::InvalidScenario(_)
            | Error::ParamsFormat(_) => 3,
            Error::Contract(_) | Error::Terminated => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
