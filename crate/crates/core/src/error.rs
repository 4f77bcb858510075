use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("clique {clique} references node {node} but the model has {num_nodes} nodes")]
    NodeIndexOutOfRange {
        clique: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("clique {clique} lists node {node} more than once")]
    DuplicateNodeInClique { clique: usize, node: usize },
    #[error("non-finite potential value in clique {clique} at entry {entry}")]
    NonFiniteValue { clique: usize, entry: usize },
    #[error("clique {clique} has {entries} tensor entries, above the cap of {cap}")]
    TensorTooLarge { clique: usize, entries: usize, cap: usize },
    #[error("mode {0} appears more than once")]
    RepeatedMode(usize),
    #[error("mode {mode} out of range for a rank-{rank} tensor")]
    ModeOutOfRange { mode: usize, rank: usize },
    #[error("line-search probe system is singular")]
    SingularProbeSystem,
    #[error("model is not pairwise (degree {0})")]
    NotPairwise(usize),
    #[error("search space of {0} labelings exceeds the enumeration cap of {1}")]
    SearchSpaceTooLarge(u128, u128),
    #[error("bad preamble: {0}")]
    BadPreamble(String),
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("factor {factor} has non-positive entry {value} at position {entry}")]
    NonPositiveFactorValue { factor: usize, entry: usize, value: f64 },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("run record schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
