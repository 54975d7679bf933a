//! Process-level error type: every failure renders as one diagnostic line.

use std::path::Path;

use thiserror::Error;

/// A failure the binary reports as a single `error:` line before exiting
/// nonzero. Messages never contain newlines.
#[derive(Debug, Error)]
pub enum CliError {
    /// A problem tied to a specific input or output file.
    #[error("{path}: {detail}")]
    File { path: String, detail: String },
    /// An unusable configuration (flag values, settings file, spec ranges).
    #[error("{0}")]
    Config(String),
    /// A failure from the estimation or simulation layer.
    #[error("{0}")]
    Run(String),
}

impl CliError {
    /// Tags `detail` with the file it concerns.
    pub fn file(path: &Path, detail: impl std::fmt::Display) -> Self {
        CliError::File {
            path: path.display().to_string(),
            detail: detail.to_string(),
        }
    }
}

/// Attaches `path` to an estimator-layer error, unless the error already
/// names a path of its own.
pub fn in_file(path: &Path, err: fsim_core::Error) -> CliError {
    match err {
        fsim_core::Error::Io { .. } => CliError::Run(err.to_string()),
        other => CliError::file(path, other),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
