use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{file}:{line}: {message}")]
    ConfigAt { file: String, line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("seed {seed}: {source}")]
    Seeded {
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },

    #[error(transparent)]
    Core(#[from] usv_auv_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for bad input, 3 for faults while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigAt { .. } | HarnessError::Config(_) => 2,
            HarnessError::Core(usv_auv_core::Error::Config(_) | usv_auv_core::Error::Checkpoint(_)) => 2,
            HarnessError::Seeded { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
