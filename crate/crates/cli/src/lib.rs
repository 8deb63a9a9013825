//! Scenario runner for hypoctl: loads TOML scenarios, runs one experiment
//! and writes a summary, CSV tables and optional binary fields.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod scenarios;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}{}: {field}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        source_name: String,
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("scenario `{scenario}` failed: {source}")]
    Run {
        scenario: String,
        #[source]
        source: hypoctl_core::Error,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
