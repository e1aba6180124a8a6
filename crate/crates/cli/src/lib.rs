//! Library side of the `harmlab` command: config validation, staged runs
//! with content-addressed manifests, and summary reports.

pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ExperimentConfig, FieldError, Plan};
pub use report::{report, Report, ReportRow};
pub use run::{run, RunManifest};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] harmlab_core::Error),
    #[error("{0}")]
    Stage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            _ => EXIT_STAGE,
        }
    }
}
