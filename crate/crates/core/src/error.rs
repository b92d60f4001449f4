use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("indeterminate sum (+inf) + (-inf)")]
    IndeterminateSum,

    #[error("scale factor must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("negative cycle {cycle:?} with total weight {weight}")]
    NegativeCycle { cycle: Vec<usize>, weight: f64 },

    #[error("every cycle uses an infinite-cost edge")]
    NoFiniteCycle,

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("primal transfer value is +inf")]
    PrimalInfinite,

    #[error("target measure is not absolutely continuous w.r.t. reference at index {0}")]
    AbsoluteContinuityViolated(usize),

    #[error("dead states violate the in/out-degree assumption: {0:?}")]
    DeadState(Vec<Vec<usize>>),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
