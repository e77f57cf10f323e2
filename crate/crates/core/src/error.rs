use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("row {row} is not on the probability simplex: {reason}")]
    SimplexViolation { row: usize, reason: String },

    #[error("label {label} at instance {index} is outside [0, {classes})")]
    LabelOutOfRange {
        index: usize,
        label: i64,
        classes: usize,
    },

    #[error("non-finite value at instance {row}")]
    NonFinite { row: usize },

    #[error("row {row}: probabilities disagree with softmax(logits) by {deviation:e}")]
    LogitProbMismatch { row: usize, deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown score kind '{0}'")]
    UnknownKind(String),

    #[error("unknown sorter '{0}'")]
    UnknownSorter(String),

    #[error("unknown merit '{0}'")]
    UnknownMerit(String),

    #[error("unknown metric '{0}'")]
    UnknownMetric(String),

    #[error("class {class} does not exist (K = {classes})")]
    UnknownClass { class: usize, classes: usize },

    #[error("reliability curve has mode {found}, expected {expected}")]
    WrongMode {
        expected: &'static str,
        found: &'static str,
    },

    #[error("reliability curve has no populated bins")]
    NoData,

    #[error("distribution is degenerate (zero variance or fewer than two values)")]
    DegenerateDistribution,

    #[error("merit evaluated on an empty subset")]
    EmptySubset,

    #[error("IoU merit requires a class id")]
    MissingClass,

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("distortion factor must be positive, got {0}")]
    NonPositiveFactor(f64),

    #[error("temperature grid is empty")]
    EmptyGrid,

    #[error("ensemble members are misaligned: {0}")]
    EnsembleMisaligned(String),

    #[error("bad magic bytes in tensor file")]
    BadMagic,

    #[error("tensor header: {0}")]
    HeaderParse(String),

    #[error("payload has {actual} bytes, header implies {expected}")]
    PayloadSizeMismatch { expected: usize, actual: usize },

    #[error("csv line {line}: expected {expected} fields, found {found}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("csv line {line}: cell '{cell}' is not numeric")]
    NonNumericCell { line: usize, cell: String },

    #[error("unrecognized csv header: {0}")]
    UnknownHeader(String),

    #[error("cannot read {path}: {source}")]
    UnreadablePath {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    UnwritablePath {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
