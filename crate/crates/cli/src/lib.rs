//! Command-line pipeline around `twolevel-core`: configuration, the
//! `run`/`scan-floquet`/`spectrum`/`wkb-compare`/`validate` commands and
//! their file outputs.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{cmd_run, cmd_scan_floquet, cmd_spectrum, cmd_validate, cmd_wkb_compare, Artifacts};
pub use config::{EpsRange, ParamSpec, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("numerical: {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: twolevel_core::Error,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numerical { .. } | Self::Validation(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a context string to core errors.
pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for twolevel_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|source| CliError::Numerical {
            context: what.to_string(),
            source,
        })
    }
}
