use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: usize },

    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("response column {0:?} not found in header")]
    MissingResponse(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("non-finite {what} at observation {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("degenerate base-learner (zero norm)")]
    DegenerateBaseLearner,

    #[error("invalid step-length scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column count mismatch: model has {expected} covariates, data has {found}")]
    ColumnMismatch { expected: usize, found: usize },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scheme {scheme}, replicate {replicate}: {source}")]
    Replicate {
        scheme: String,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
