use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Variants are split between problems with user-supplied input (files,
/// flags, incompatible artifacts) and numerical or internal failures; the
/// CLI maps them to exit codes 2 and 1 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown sentiment label {0:?}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("embedding hash mismatch: checkpoint expects {expected}, embedding is {found}")]
    HashMismatch { expected: String, found: String },

    #[error("stale forward cache: computed for parameter generation {cached}, parameters are at {current}")]
    StaleCache { cached: u64, current: u64 },

    #[error("non-finite gradient at parameter index {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input rather than by the computation.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Shape(_)
                | Error::StaleCache { .. }
                | Error::NonFiniteGradient { .. }
                | Error::NonFiniteLoss { .. }
        )
    }

    /// Process exit code: 2 for input problems, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_user_error() {
            2
        } else {
            1
        }
    }
}
