use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("unsupported bit depth (maxval {maxval}) in {path}")]
    UnsupportedBitDepth { path: PathBuf, maxval: u32 },
    #[error("split impossible: need at least 3 items, got {0}")]
    SplitImpossible(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("non-finite value in {stage} of `{label}`")]
    NonFinite { label: String, stage: &'static str },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("R² undefined: target has zero total variance")]
    R2Undefined,
    #[error("ROC undefined: ground truth contains a single class")]
    RocUndefined,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
