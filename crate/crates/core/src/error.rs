use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding set is empty ({rows} x {cols})")]
    EmptyEmbeddings { rows: usize, cols: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("row {0} has zero norm; angle-based kernels are undefined")]
    ZeroNormRow(usize),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("duplicate kernel in bank: {0}")]
    DuplicateKernel(String),

    #[error("kernel bank is empty")]
    EmptyBank,

    #[error("kernel matrix has zero Frobenius norm")]
    DegenerateKernel,

    #[error("number of neighbors must be at least 1")]
    InvalidNeighbors,

    #[error("nothing to fuse")]
    EmptyFusion,

    #[error("fused graph has no edges")]
    DisconnectedGraph,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigendecomposition failed to converge (n = {n})")]
    EigenNoConvergence { n: usize },

    #[error("invalid cluster count {k} for {n} points")]
    InvalidClusterCount { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("malformed embedding file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{embeddings} embeddings but {segments} segments")]
    Alignment { embeddings: usize, segments: usize },

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("no reference speech in evaluation region{}", recording.as_ref().map(|r| format!(" for {r}")).unwrap_or_default())]
    EmptyReference { recording: Option<String> },

    #[error("missing value for config '{config}' on split '{split}'")]
    MissingCell { config: String, split: String },

    #[error("center sampling failed after {attempts} attempts (k = {k}, d = {d})")]
    CenterSampling { k: usize, d: usize, attempts: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
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
