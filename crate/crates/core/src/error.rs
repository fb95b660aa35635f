use std::path::PathBuf;

use thiserror::Error;

use crate::model::LossBreakdown;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid hyperparameter: {0}")]
    HyperParam(String),

    #[error("invalid dataset:\n{0}")]
    InvalidDataset(crate::model::ValidationReport),

    #[error("negative edge weight {weight} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, weight: f64 },

    #[error("adjacency is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("entry ({row}, {col}) = {value} is not -1 or +1")]
    NotBinary { row: usize, col: usize, value: f64 },

    #[error("non-finite similarity between rows {row} and {col}")]
    NonFiniteSimilarity { row: usize, col: usize },

    #[error("row {row} has zero norm; cosine gradient is undefined")]
    ZeroNormRow { row: usize },

    #[error(
        "view weight base -L_C/(eta*gamma) = {base} is not positive; \
         the closed-form update needs gamma < 0 (with eta > 0 and L_C > 0)"
    )]
    ViewWeightBase { base: f64 },

    #[error("code width mismatch: {left} vs {right} bits")]
    WidthMismatch { left: usize, right: usize },

    #[error("need at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("no labels available")]
    NoLabels,

    #[error("labels count mismatch: expected {expected}, got {got}")]
    LabelCount { expected: usize, got: usize },

    #[error("objective diverged at epoch {epoch} (last finite epoch: {})",
        last_finite.as_ref().map_or("none".to_string(), |(e, _)| e.to_string()))]
    Diverged {
        epoch: usize,
        last_finite: Option<(usize, LossBreakdown)>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: bad magic bytes (expected {expected:?})")]
    BadMagic { path: PathBuf, expected: String },

    #[error("{path}: unsupported format version {found} (expected {expected})")]
    BadVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: unexpected end of file")]
    Truncated { path: PathBuf },

    /// The I/O error is part of the message rather than a separate source.
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated { path }
        } else {
            Error::Io { path, err: source }
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
