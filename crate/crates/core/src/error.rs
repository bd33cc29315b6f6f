use thiserror::Error;

use crate::corpus::CategoryLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A structured input (embedding table, model file, place table, ...) is malformed.
    #[error("{what}: {reason} at line {line}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("{what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("category {0} outside the modeled range 1-4")]
    CategoryOutOfRange(i64),

    #[error("invalid geo point: {0}")]
    InvalidGeoPoint(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("training data contains only class \"{0}\"")]
    SingleClass(CategoryLabel),

    #[error("negative feature value {value} at row {row}, column {col}; multinomial naive Bayes needs counts")]
    NegativeFeature { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{algorithm}: non-finite value at iteration {iteration}")]
    NonFinite {
        algorithm: &'static str,
        iteration: usize,
    },

    #[error("class \"{label}\" has {count} examples, fewer than k = {k}")]
    TooFewExamples {
        label: CategoryLabel,
        count: usize,
        k: usize,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
