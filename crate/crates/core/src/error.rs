use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("ket is not normalized (norm squared = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("kets are linearly dependent (residual norm {residual:.3e} at ket {index})")]
    DegenerateSpan { index: usize, residual: f64 },

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("index {index} out of range for {len} branches")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("postselection cannot succeed through this measurement (denominator {denominator:.3e})")]
    ImpossiblePostselection { denominator: f64 },

    #[error("state is orthogonal to the projected subspace")]
    ZeroProjection,

    #[error("final branch {branch} has weight {weight:.3e} but an undefined conditional probability")]
    UndefinedTerm { branch: usize, weight: f64 },

    #[error("{count} branches exceeds the coarse-graining limit of {max}")]
    TooManyBranches { count: usize, max: usize },

    #[error("no counterexample found in {tries} tries")]
    NotFound { tries: u64 },

    #[error("none of {trials} trials passed postselection")]
    NoPostselectedTrials { trials: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
