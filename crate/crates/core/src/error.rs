use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("density is not positive at {at:?} (value {value:e})")]
    Positivity { at: Vec<f64>, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("mode truncation {modes} is too large for a grid of {nodes} nodes per axis (need modes < nodes/2)")]
    ModesTooLarge { modes: usize, nodes: usize },

    #[error("Fourier tail mass {tail:e} beyond truncation {modes} exceeds {limit:e}")]
    TruncationTail { modes: usize, tail: f64, limit: f64 },

    #[error("quadrature budget exceeded: {nodes}^{dim} = {total} nodes > budget {budget}")]
    Budget {
        nodes: usize,
        dim: usize,
        total: u128,
        budget: u128,
    },

    #[error("dimension {dim} outside supported range {min}..={max}")]
    DimensionOutOfRange { dim: usize, min: usize, max: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("ill-conditioned fit (condition number {cond:e}); try a different epsilon window")]
    IllConditioned { cond: f64 },

    #[error("ratio undefined at eps = {eps} (Q = 0)")]
    RatioUndefined { eps: f64 },
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
