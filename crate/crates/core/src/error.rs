use alloc::string::String;

/// Errors raised by the simulation, policy and trainer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("zero effective leg length")]
    ZeroLegLength,
    #[error("no collision course")]
    NoCollisionCourse,
    #[error("numerical divergence at t = {time} s")]
    NumericalDivergence { time: f64 },
    #[error("swing without contact")]
    SwingWithoutContact,
    #[error("step called in phase {0:?}")]
    WrongPhase(crate::sim::Phase),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("backprop requires a cached forward pass")]
    MissingCache,
    #[error("training diverged at episode {episode}: {detail}")]
    Divergence { episode: usize, detail: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
