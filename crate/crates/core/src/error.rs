use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The weighted monomial matrix is numerically rank deficient at the
    /// working precision.
    #[error("precision insufficient at column {column} (multi-index {index:?}): relative pivot {ratio:e} with {bits} bits")]
    PrecisionInsufficient {
        column: usize,
        index: Vec<u32>,
        ratio: f64,
        bits: u32,
    },

    #[error("degree {degree} exceeds target degree {n}")]
    DegreeExceeded { degree: usize, n: usize },

    #[error("angular count {m} too small for degree {n}: need at least {needed}")]
    Exactness { m: usize, n: usize, needed: usize },

    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),

    #[error("root finding did not converge: max relative residual {max_residual:e}")]
    RootsNotConverged { max_residual: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
