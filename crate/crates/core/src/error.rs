//! Error type shared across the pipeline.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline error, categorised so the CLI can map failures to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (bad hyperparameter, malformed config file, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or inconsistent input data (missing file, bad manifest, shape mismatch, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure during training (non-finite loss or gradient).
    #[error("numeric divergence: {0}")]
    Numeric(String),

    /// I/O failure with the offending path attached.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 1 config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io { .. } => 2,
            Error::Numeric(_) => 3,
        }
    }
}
