use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library. The CLI maps [`Error::Io`] to exit code 2
/// and everything else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("probability `{key}` = {value} is outside [0, 1]")]
    Probability { key: String, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("bucket of {size} words exceeds the matrix cap of {cap}; shard the input into smaller buckets")]
    BucketTooLarge { size: usize, cap: usize },

    #[error("empty profile: {0}")]
    EmptyProfile(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::File { .. })
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
