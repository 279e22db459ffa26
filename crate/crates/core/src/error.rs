use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid ingestion config: {0}")]
    Config(String),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("non-numeric value `{value}` in column `{column}` at data row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("missing value in column `{column}` at data row {row}")]
    MissingValue { column: String, row: usize },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("bootstrap produced an empty out-of-bag set {attempts} times in a row")]
    EmptyOutOfBag { attempts: usize },
    #[error("fold count {k} out of range for {m} rows")]
    BadFoldCount { k: usize, m: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("impure leaf reached: unsplittable node holds differing responses")]
    ImpureLeaf,
    #[error("empty value sequence")]
    EmptyValues,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("too few rows ({layer}): {detail}")]
    TooFewRows { layer: String, detail: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn too_few(layer: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::TooFewRows {
            layer: layer.into(),
            detail: detail.into(),
        }
    }
}
