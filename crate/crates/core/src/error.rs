use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("matrix must have at least one row and one column")]
    Empty,

    #[error("expected {expected} values for a {rows}x{cols} matrix, got {actual}")]
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },

    #[error("entry ({row}, {col}) is not finite: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeCost { row: usize, col: usize, value: f64 },

    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("exhaustive enumeration refused for order {order} (cap is {cap})")]
    OracleCap { order: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not a permutation of 0..{len}: {reason}")]
    NotPermutation { len: usize, reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("sweep cell (n={n}, scale={scale}, trial={trial}) failed: {source}")]
    Cell {
        n: usize,
        scale: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
