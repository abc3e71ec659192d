use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("cannot read config {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("output directory {0} is locked by another run (remove .wavecoh.lock if stale)")]
    Locked(PathBuf),

    #[error(transparent)]
    Core(#[from] wavecoh::Error),

    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wavecoh::Error as E;
        match self {
            CliError::Config(_)
            | CliError::ConfigIo { .. }
            | CliError::ConfigParse { .. }
            | CliError::Locked(_) => 2,
            CliError::Core(E::InvalidParameter(_)) => 2,
            CliError::Core(E::AllDegenerate(_)) | CliError::Degenerate(_) => 4,
            CliError::Core(_) | CliError::Io { .. } | CliError::Artifact { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
