use thiserror::Error;

use crate::oracle::VerificationRow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model `{model}` failed validation: {}", failed.join("; "))]
    Validation { model: String, failed: Vec<String> },

    #[error("R(c) = 1 has no negative solution (quasi-mean-reversion is zero)")]
    NoRoot,

    #[error("B left the effective domain of F or R at x = {x} (B = {b})")]
    DomainEscape { x: f64, b: f64 },

    #[error("non-finite value in the Riccati right-hand side at x = {x}")]
    NonFinite { x: f64 },

    #[error("step size fell below the minimum {min_step:e} at x = {x}")]
    StepSizeUnderflow { x: f64, min_step: f64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("quadrature did not converge within {intervals} subintervals (error estimate {estimate:e})")]
    QuadratureFailure { intervals: usize, estimate: f64 },

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(&'static str),

    #[error("threshold ordering violated: {0}")]
    OrderingViolation(String),

    #[error("short rate {r} is outside the state space {state_space}")]
    OutOfStateSpace { r: f64, state_space: &'static str },

    #[error("every sample lies inside the dead zone")]
    AllDead,

    #[error("no admissible model after {attempts} draws (seed {seed})")]
    GenerationExhausted { seed: u64, attempts: u32 },

    #[error("theorem and oracle disagree: {0:?}")]
    Disagreement(Box<VerificationRow>),

    #[error("model specification: {0}")]
    Spec(String),
}
