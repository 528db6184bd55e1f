use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes that do not fit the operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// API misuse, e.g. a backward pass fed a cache from another forward call.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error("not a checkpoint: bad magic {0:?}")]
    NotCheckpoint([u8; 4]),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checkpoint format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 covers configuration and data problems, 3 checkpoint/dataset
    /// compatibility, 4 corrupt artifacts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Compatibility(_) => 3,
            Error::NotCheckpoint(_) | Error::Version { .. } | Error::Format { .. } => 4,
            _ => 2,
        }
    }
}
