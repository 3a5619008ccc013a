use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by who is at fault: malformed or inconsistent input,
/// violated algorithm preconditions, and internal invariant failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },

    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("invalid size bounds: {0}")]
    InvalidBounds(String),

    #[error("bounds admit no clustering: {0}")]
    InfeasibleBounds(String),

    #[error("shape {shape:?} violates bounds [{lower:?}, {upper:?}]")]
    ShapeOutOfBounds {
        shape: Vec<usize>,
        lower: Vec<usize>,
        upper: Vec<usize>,
    },

    #[error("sites {first} and {second} coincide")]
    CoincidentSites { first: usize, second: usize },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("current vertex is already optimal")]
    AlreadyOptimal,

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("enumeration budget exceeded: {needed} assignments > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Whether the error is the caller's fault (bad input) rather than ours.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
