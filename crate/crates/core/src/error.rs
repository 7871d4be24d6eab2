use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate word `{word}` (line {line})")]
    DuplicateWord { word: String, line: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the two vocabularies have no words in common")]
    EmptyIntersection,

    #[error("cannot normalize all-zero vector for `{0}`")]
    ZeroVector(String),

    #[error("unknown words: {}", .0.join(", "))]
    UnknownWords(Vec<String>),

    #[error("missing frequency rank for: {}", .0.join(", "))]
    MissingFrequency(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("landmark set became empty at iteration {iteration}; try a larger r or a different initialisation")]
    EmptyLandmarks { iteration: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Divergence(_) | Error::Numerical(_) | Error::EmptyLandmarks { .. } => 3,
            _ => 2,
        }
    }
}
