//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("label {label} at row {row} is outside the declared class count {num_classes}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("environment {env} at row {row} is outside the declared environment count {num_envs}")]
    EnvOutOfRange {
        row: usize,
        env: usize,
        num_envs: usize,
    },

    #[error("{what} index {value} is out of range (must be < {bound})")]
    IndexOutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("probability row {row} is not normalized: sum = {sum}")]
    RowNotNormalized { row: usize, sum: f64 },

    #[error("negative probability {value} at row {row}")]
    NegativeProbability { row: usize, value: f64 },

    #[error("{kind} embedding at row {row} has zero norm; cosine similarity is undefined")]
    ZeroNormEmbedding { kind: &'static str, row: usize },

    #[error("environment annotations are required: {context}")]
    MissingEnv { context: &'static str },

    #[error("environment class {env} has no samples in the labeled subset")]
    MissingEnvironmentClass { env: usize },

    #[error("validation group {group} is empty; worst-group model selection is undefined")]
    EmptyValidationGroup { group: usize },

    #[error("group {group} has {size} rows, fewer than the {needed} splits")]
    GroupTooSmall {
        group: usize,
        size: usize,
        needed: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing required column `{column}` in {path}")]
    MissingColumn { column: String, path: String },

    #[error("cannot parse cell at data row {row}, column `{column}`: {value:?}")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
