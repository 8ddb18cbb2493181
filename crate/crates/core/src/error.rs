use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("unsupported audio format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("class has no samples: {0}")]
    EmptyClass(String),

    #[error("no ordered pairs to train on")]
    NoOrderedPairs,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { expected: u32, found: u32 },

    #[error("degenerate clusters: inter-class distance is zero")]
    DegenerateClusters,

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty input sequence")]
    EmptyInput,

    #[error("cepstral order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate utterance id: {0}")]
    DuplicateId(String),

    #[error("unknown emotion: {0}")]
    UnknownEmotion(String),

    #[error("missing audio file: {0}")]
    MissingFile(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotFound(_) | Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
