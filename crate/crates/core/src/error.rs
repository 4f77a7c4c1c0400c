use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite or negative entry at ({i}, {j})")]
    BadEntry { i: usize, j: usize },
    #[error("nonzero diagonal at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("asymmetry: d({i},{j}) != d({j},{i})")]
    Asymmetry { i: usize, j: usize },
    #[error("distinct points {i} and {j} at distance zero")]
    ZeroDistance { i: usize, j: usize },
    #[error("triangle inequality violated at ({i}, {j}, {k}): d(i,j) > d(i,k) + d(k,j)")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("empty metric space")]
    EmptySpace,
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty subset")]
    EmptySubset,
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("instance too large: {what} is {size}, limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("outside validity window: {0}")]
    OutsideWindow(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("metric comparability fails at pair ({i}, {j}): ratio {ratio}")]
    Incomparable { i: usize, j: usize, ratio: f64 },
    #[error("graph is disconnected: point {0} unreachable from point 0")]
    Disconnected(usize),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable kebab-case name of the variant, for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not-square",
            Error::BadEntry { .. } => "bad-entry",
            Error::NonzeroDiagonal { .. } => "nonzero-diagonal",
            Error::Asymmetry { .. } => "asymmetry",
            Error::ZeroDistance { .. } => "zero-distance",
            Error::TriangleViolation { .. } => "triangle-violation",
            Error::EmptySpace => "empty-space",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::EmptySubset => "empty-subset",
            Error::BadRadius(_) => "bad-radius",
            Error::TooLarge { .. } => "too-large",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Degenerate(_) => "degenerate",
            Error::OutsideWindow(_) => "outside-window",
            Error::Precondition(_) => "precondition",
            Error::Incomparable { .. } => "incomparable",
            Error::Disconnected(_) => "disconnected",
            Error::Inconsistent(_) => "inconsistent",
            Error::Parse(_) => "parse",
        }
    }
}
