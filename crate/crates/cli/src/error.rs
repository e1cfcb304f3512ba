use std::path::PathBuf;

use kickshift_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 numerical abort, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::Io { .. } | CoreError::Format { .. } => 4,
                CoreError::NumericalAbort { .. }
                | CoreError::BoundaryLeak { .. }
                | CoreError::NotConverged { .. }
                | CoreError::PartialScan { .. }
                | CoreError::RankDeficient(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
