use std::path::PathBuf;

use thiserror::Error;

use crate::config::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem dimension {problem} does not match configured dimension {config}")]
    DimensionMismatch { problem: usize, config: usize },

    /// An engine invariant was broken; the run cannot continue.
    #[error("contract violation at generation {generation}: {message}")]
    Contract { generation: u64, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
