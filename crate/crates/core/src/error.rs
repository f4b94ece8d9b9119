//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node index {node} out of range for graph with {num_nodes} nodes")]
    IndexOutOfRange { node: usize, num_nodes: usize },

    #[error("self-loop on node {node} is not allowed")]
    SelfLoop { node: usize },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed file {path}, line {line}: {reason}")]
    MalformedFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {reason} (meta declares a different shape)")]
    ChecksumMismatch { path: PathBuf, reason: String },

    #[error("edge probability {value} out of [0, 1] for {which}; average degree too large for the class sizes")]
    ProbabilityOutOfRange { which: &'static str, value: f64 },

    #[error("feature dimension {got} too small, need at least {needed}")]
    DimensionTooSmall { needed: usize, got: usize },

    #[error("split counts {requested} exceed {available} nodes")]
    CountsExceedNodes { requested: usize, available: usize },

    #[error("too few nodes: the {bucket} pair bucket is empty")]
    TooFewNodes { bucket: &'static str },

    #[error("mask selects no nodes")]
    EmptyMask,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("backward requires a cache from a training-mode forward pass")]
    CacheMissing,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}
