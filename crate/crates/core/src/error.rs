use thiserror::Error;

/// Errors raised by the evaluation, counting and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("genus {g} outside supported range {min}..={max}")]
    GenusOutOfRange { g: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid period matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("requested precision {requested:e} unachievable; best certified bound {best:e}")]
    PrecisionUnachievable { requested: f64, best: f64 },

    #[error("budget exceeded: {needed} points requested, limit {limit}")]
    BudgetExceeded { needed: u64, limit: u64 },

    #[error("ambiguous vanishing verdict: {0}")]
    Ambiguous(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("unreliable numerical rank {rank}: gap ratio {gap_ratio:e} below {required:e}")]
    UnreliableRank {
        rank: usize,
        gap_ratio: f64,
        required: f64,
    },

    #[error("singular value decomposition failed to converge")]
    Decomposition,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by numerics (ambiguity, insufficient gap,
    /// unreachable precision) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PrecisionUnachievable { .. }
                | Error::BudgetExceeded { .. }
                | Error::Ambiguous(_)
                | Error::BoundViolation(_)
                | Error::UnreliableRank { .. }
                | Error::Decomposition
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
