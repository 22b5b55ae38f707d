//! Scenario files, artifact writers and multi-run experiments on top of
//! [`rcs_core`]. The `rcs-sim` binary is a thin shell over this crate.

use std::path::{Path, PathBuf};

pub mod config;
pub mod experiments;
pub mod output;

pub use rcs_core;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(rcs_core::SimError),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration errors, 3 for I/O errors, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Sim(_) => 1,
        }
    }
}
