use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] skyaug::Error),
    #[error("missing artifact {path}: run `{stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("artifact {path} changed since `{stage}` wrote it: rerun `{stage}`")]
    StaleArtifact { path: PathBuf, stage: &'static str },
    #[error("run manifest: {0}")]
    Manifest(String),
}

impl CliError {
    /// 1 usage, 2 data, 3 stage order.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Manifest(_) => 2,
            CliError::MissingArtifact { .. } | CliError::StaleArtifact { .. } => 3,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>, e: std::io::Error) -> CliError {
    CliError::Data(skyaug::Error::Io {
        path: path.into(),
        source: e,
    })
}
