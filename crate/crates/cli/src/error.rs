use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const PROVENANCE: u8 = 4;
    pub const PARSE: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// The threshold search finished without a feasible answer. Outputs have
    /// been written.
    #[error("no architecture meets the latency threshold of {nu} ms")]
    Infeasible { nu: f64 },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] cosearch::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(_) => exit::CONFIG,
            CliError::Infeasible { .. } => exit::INFEASIBLE,
            CliError::Provenance(_) => exit::PROVENANCE,
            CliError::Parse { .. } | CliError::Io { .. } => exit::PARSE,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn parse(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), msg: msg.into() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}
