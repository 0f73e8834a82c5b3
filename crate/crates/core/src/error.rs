//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Variants are grouped
//! by pipeline stage so CLI callers can map them onto exit codes without
//! string matching.

use std::path::PathBuf;

/// Unified error type for the model crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameter or configuration rejected before any simulation ran.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A stimulus file or dataset directory is malformed or inconsistent.
    #[error("stimulus format error: {0}")]
    StimulusFormat(String),

    /// Network construction failed a structural check.
    #[error("network build error: {0}")]
    NetworkBuild(String),

    /// State left the plausible range during integration (NaN or runaway
    /// membrane potential), which indicates an unstable parameterization.
    #[error("numerical divergence at t={time_ms} ms: {detail}")]
    Divergence { time_ms: f64, detail: String },

    /// Replay re-execution produced output differing from the recorded run.
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    /// Statistical aggregation received data it cannot analyze, e.g. a
    /// degenerate psychometric fit or a zero-variance regressor.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code a CLI should use for this error.
    ///
    /// 2 = rejected input, 3 = numerical divergence, 1 = everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::StimulusFormat(_) | Error::NetworkBuild(_) => 2,
            Error::Divergence { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
