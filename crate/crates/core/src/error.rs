use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sentence has no words")]
    EmptySentence,
    #[error("sentence needs at least 2 words, got {0}")]
    SentenceTooShort(usize),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("class `{class}` has {count} example(s); at least 2 are needed to split")]
    TooFewExamples { class: String, count: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("logits must be finite")]
    NonFiniteLogits,
    #[error("score set is empty")]
    EmptySet,
    #[error("model has no differentiable embedding path")]
    NotDifferentiable,
    #[error("training diverged at epoch {epoch}: non-finite parameter")]
    Diverged { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary hash mismatch: checkpoint {expected}, vocabulary {got}")]
    VocabularyMismatch { expected: String, got: String },
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
