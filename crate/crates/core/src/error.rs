use std::path::PathBuf;

/// Errors raised across the crate.
///
/// Every variant maps onto a short, dotted category string (see
/// [`Error::category`]) which the CLI prints as its one-line failure reason.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    Range(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("training diverged: {0}")]
    Training(String),

    #[error("checkpoint error at {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn checkpoint(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Checkpoint {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Machine-parsable error category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Range(_) => "range",
            Error::Contract(_) => "contract",
            Error::State(_) => "state",
            Error::Capacity(_) => "capacity",
            Error::Format(_) => "format",
            Error::Parse { .. } => "parse",
            Error::Training(_) => "training",
            Error::Checkpoint { .. } => "io.checkpoint",
            Error::Io { .. } => "io",
            Error::Json(_) => "format.json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
