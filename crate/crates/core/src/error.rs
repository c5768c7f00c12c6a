use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bounds in dimension {dim}: [{lower}, {upper}]")]
    InvalidBounds { dim: usize, lower: f64, upper: f64 },

    #[error("non-finite value in dimension {dim}")]
    NonFinite { dim: usize },

    #[error("empty input")]
    Empty,

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("degenerate kernel: zero variance in dimension {dim}")]
    DegenerateKernel { dim: usize },

    #[error("kernel covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("simulation budget exhausted ({used} of {limit} simulations)")]
    BudgetExhausted { limit: u64, used: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("statistic channel `{name}` has zero spread over the pilot sample")]
    ZeroSpread { name: String },

    #[error("no move accepted for {rounds} consecutive rounds")]
    Stagnation { rounds: usize },

    #[error("value {value} in dimension {dim} lies outside the grid")]
    OutsideGrid { dim: usize, value: f64 },

    #[error("every particle lost its weight")]
    WeightCollapse,
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
