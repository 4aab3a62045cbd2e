use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state became non-finite at step {step}")]
    Divergence { step: usize },

    #[error("non-finite derivative block `{block}` at step {step}")]
    NonFiniteDerivative { step: usize, block: &'static str },

    #[error("Q_uu is not positive definite at step {step} (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { step: usize, min_eig: f64 },

    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),

    #[error("invalid solver config: {0}")]
    InvalidConfig(String),

    #[error("trajectory is not stationary (max |Q_u| = {residual:e}, tolerance {tolerance:e})")]
    NotStationary { residual: f64, tolerance: f64 },

    #[error("feedback matrix is singular at step {step}")]
    SingularGain { step: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("finite-difference stencil produced a non-finite value at coordinate {coordinate}")]
    FiniteDifference { coordinate: usize },

    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
