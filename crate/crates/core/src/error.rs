use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid response for {family} family: {detail}")]
    InvalidResponse { family: &'static str, detail: String },

    #[error("linear predictor left the representable range: {0}")]
    NumericalRange(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("fit diverged: {0}")]
    Divergence(String),

    #[error("non-positive-definite matrix while evaluating {0}")]
    Evaluation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("non-numeric value `{value}` in column `{column}` at line {line}")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },

    #[error("missing value in column `{column}` at line {line}")]
    MissingValue { line: u64, column: String },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
