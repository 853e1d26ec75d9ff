use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("component index {index} out of range for a sum of {n} components")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "instance is not strongly convex: smallest mean-Hessian eigenvalue {min_eigenvalue:e}"
    )]
    NotStronglyConvex { min_eigenvalue: f64 },

    #[error("instance is not centered: |sum of linear terms| = {residual:e}")]
    NotCentered { residual: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("epochs must be queried in order: expected epoch {expected}, got {got}")]
    EpochOutOfOrder { expected: usize, got: usize },

    #[error("FlipFlop requires an even number of epochs, got {0}")]
    OddFlipFlopEpochs(usize),

    #[error("step size {alpha:e} exceeds 1/L = {limit:e}")]
    StepTooLarge { alpha: f64, limit: f64 },

    #[error("search budget exceeded: about {estimated} sequences, budget allows {allowed}")]
    BudgetExceeded { estimated: u128, allowed: u128 },

    #[error("{0}")]
    Unsupported(String),

    #[error("fit needs at least {needed} usable points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },

    #[error("instance format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
