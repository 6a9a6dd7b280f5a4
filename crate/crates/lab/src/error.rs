use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] homeostat_core::Error),

    /// A config key is unknown, unparsable, or out of range.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// A checkpoint file is malformed.
    #[error("{}:{line}: {message}", path.display())]
    Checkpoint { path: PathBuf, line: usize, message: String },
}

impl LabError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration, 3 for files, 4 for training.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::Core(homeostat_core::Error::Config(_)) => 2,
            LabError::Io { .. } | LabError::Checkpoint { .. } => 3,
            LabError::Core(_) => 4,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
