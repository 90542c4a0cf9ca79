use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("row {row}: expected {expected} columns, found {found}")]
    Arity {
        row: u64,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse {value:?} as {expected}")]
    Field {
        row: u64,
        column: usize,
        value: String,
        expected: &'static str,
    },

    #[error("row {row}, column {column}: code {code} is outside 0..{limit}")]
    UnknownCode {
        row: u64,
        column: usize,
        code: u64,
        limit: usize,
    },

    #[error("encoding: column {column} has more than {limit} distinct values")]
    TooManyValues { column: usize, limit: usize },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("attribute {0} is not numeric")]
    NotNumeric(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
