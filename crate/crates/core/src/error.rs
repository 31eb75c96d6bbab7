use thiserror::Error;

/// Errors reported by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("block length {0} is not a power of two in 2..=1024")]
    InvalidBlockLength(usize),

    #[error("information length {k} is outside 1..={n}")]
    InvalidInfoLength { k: usize, n: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("map of length {len} is not a bijection (duplicate entry {dup})")]
    NotBijection { len: usize, dup: usize },

    #[error("selection contains duplicate entry {0}")]
    DuplicateSelection(usize),

    #[error("flip probability {0} is outside [0, 0.5]")]
    InvalidFlipProbability(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("correlation matrix is not symmetric")]
    NotSymmetric,

    #[error("pilot formula collapses below {v} distinct positions for N={n}")]
    PilotCollapse { n: usize, v: usize },

    #[error("{count} candidate evaluations exceed the budget of {max}")]
    BudgetExceeded { count: u64, max: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
