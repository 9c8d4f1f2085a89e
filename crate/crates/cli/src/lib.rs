//! Orchestration for `levydiff`: configuration, reproducible output
//! directories, figure recipes and plots.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod recipe;
pub mod report;
pub mod synthetic;

use levydiff_core::ErrorKind;

pub use commands::{Cli, Command};
pub use config::{Config, ExperimentRecipe, RecipeName, Simulator};
pub use output::{Artifact, OutputDir, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] levydiff_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 success, 2 configuration, 3 data quality, 4 numeric failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::DataQuality => 3,
                ErrorKind::Numeric => 4,
                ErrorKind::Other => 1,
            },
            CliError::Usage(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
