//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no values")]
    Empty,
    #[error("slot width must be positive and finite, got {0}")]
    BadSlotWidth(f64),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    InvalidParam(String),
    #[error("circulant embedding produced a significantly negative eigenvalue ({0:.3e})")]
    EmbeddingFailed(f64),
}

#[derive(Debug, Error)]
pub enum EstimError {
    #[error("window of {len} slots is shorter than the {min}-slot minimum")]
    WindowTooShort { len: usize, min: usize },
    #[error("window is degenerate (constant values)")]
    DegenerateWindow,
    #[error("coefficient of variation is undefined for a zero-mean window")]
    ZeroMean,
    #[error("invalid estimator configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid topology:\n{}", format_list(.0))]
    InvalidTopology(Vec<String>),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("channel '{channel}': no admissible path from {src} to {dst} within {hop_limit} hops")]
    NoAdmissiblePath {
        channel: String,
        src: String,
        dst: String,
        hop_limit: usize,
    },
    #[error("channel '{channel}': {reason}")]
    BadChannel { channel: String, reason: String },
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error("channel '{0}' is already released")]
    AlreadyReleased(String),
    #[error("release slot {released} must come after admission slot {admitted}")]
    BadReleaseSlot { admitted: u64, released: u64 },
}

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("path has no links")]
    EmptyPath,
    #[error("unknown link id {0}")]
    UnknownLink(usize),
    #[error("no estimate supplied for registered path {0}")]
    MissingEstimate(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario:\n{}", format_list(.0))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

fn format_list(items: &[String]) -> String {
    items
        .iter()
        .map(|s| format!("  - {s}"))
        .collect::<Vec<_>>()
        .join("\n")
}
