//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by curve handling, decomposition, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (ragged rows, empty file, bad structure).
    #[error("format error: {0}")]
    Format(String),

    /// A cell could not be parsed as a number.
    #[error("parse error at row {row}, column {col}: {detail}")]
    Parse {
        row: usize,
        col: usize,
        detail: String,
    },

    /// Array or grid sizes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A caller-facing precondition was violated.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// A requested point lies outside the interpolation range.
    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    /// A linear system was singular or an eigenvalue hit zero.
    #[error("rank error: {0}")]
    Rank(String),

    /// The projected index collapsed to a point.
    #[error("degenerate index: {0}")]
    DegenerateIndex(String),

    /// Invalid configuration value or empty candidate grid.
    #[error("configuration error: {0}")]
    Config(String),

    /// I/O failure while reading or writing files.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Artifact (de)serialization failure.
    #[error("artifact error: {0}")]
    Artifact(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
