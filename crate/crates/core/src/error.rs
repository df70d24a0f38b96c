use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("unsupported image format: {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt image: {path}: {reason}")]
    CorruptImage { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dimensions {width}x{height} for {len} values")]
    Dimensions { width: usize, height: usize, len: usize },

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("value {value} at pixel {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("duplicate item id: {0}")]
    DuplicateId(String),

    #[error("too few items: {items} items for {k} folds (need at least {needed})")]
    TooFewItems { items: usize, k: usize, needed: usize },

    #[error("NaN score at position {0}")]
    NanScore(usize),

    #[error("incomplete grid, missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),

    #[error("comparison {a} vs {b}: {source}")]
    Pair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
