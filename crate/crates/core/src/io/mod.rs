//! Run configuration, command execution and CSV/JSON export.
//!
//! Every table is written as a `#`-prefixed metadata block (tool version,
//! then `key = value` lines), a CSV header and data rows with floats at 17
//! significant digits. [`Tabular`] converts result types to and from tables;
//! reading a written file reproduces the original value exactly.

mod config;
mod run;
mod table;

pub use config::{default_cutoff, Command, Resolved, RunConfig};
pub use run::{execute, sample_times, write_artifacts, Artifact, FloquetReport, FourierCoefficient, RunError};
pub use table::{Table, Tabular};

use thiserror::Error;

pub const TOOL: &str = "rabi-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {detail}")]
    File { path: String, detail: String },
    #[error("malformed table: {0}")]
    Format(String),
}

impl IoError {
    pub fn name(&self) -> &'static str {
        match self {
            IoError::Config(_) => "InvalidConfig",
            IoError::File { .. } => "IoFailure",
            IoError::Format(_) => "MalformedTable",
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, IoError::Config(_))
    }

    pub(crate) fn file(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        IoError::File {
            path: path.display().to_string(),
            detail: e.to_string(),
        }
    }
}
