use thiserror::Error;

/// Errors surfaced by ingest, graph building, and matching.
#[derive(Debug, Error)]
pub enum Error {
    /// A required field is missing or malformed; the message names the
    /// offending feature/record and field, e.g. `"S7: name"`.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("branch references unknown bus {0}")]
    DanglingReference(i64),

    #[error("self-loop branch at bus {0}")]
    SelfLoop(i64),

    #[error("invalid branch: {0}")]
    InvalidBranch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
