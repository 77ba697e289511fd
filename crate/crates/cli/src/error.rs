use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ddmag_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 usage or configuration, 2 numerical failure, 3 input/output.
    pub fn exit_code(&self) -> u8 {
        use ddmag_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::Io(_) | E::Parse { .. } => 3,
                E::Config(_) | E::Validation(_) => 1,
                _ => 2,
            },
        }
    }
}
