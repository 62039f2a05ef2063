use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("representation mismatch: expected {expected}, found {found}")]
    Representation { expected: &'static str, found: &'static str },
    #[error("point {0:?} lies outside the box")]
    OutsideBox(Vec<f64>),
    #[error("dense matrix of order {order} exceeds the cap {cap}")]
    DenseCap { order: usize, cap: usize },
    #[error("non-finite value at t = {time} (step {step})")]
    NonFinite { time: f64, step: usize },
    #[error("smallest singular value solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error("empty frequency set")]
    EmptySpectralSet,
    #[error("too few samples in fit window: {found} < {needed}")]
    ShortWindow { found: usize, needed: usize },
    #[error("nonpositive energy {value} at t = {time}")]
    NonPositiveEnergy { time: f64, value: f64 },
    #[error("missing ledger inputs: {}", .0.join(", "))]
    MissingInputs(Vec<String>),
    #[error("contradictory facts: {0}")]
    Contradiction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
