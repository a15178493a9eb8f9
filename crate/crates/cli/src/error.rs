use std::path::PathBuf;

use bitslice_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage, 2 data or format, 3 numerical divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Core(CoreError::Divergence { .. }) => 3,
            Self::Core(CoreError::Config(_) | CoreError::Resolution { .. }) => 1,
            Self::Core(_) | Self::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
