use crate::expressions::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("phase point has non-finite components")]
    NonFinitePoint,
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state after t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("mass is not positive at t = {t}")]
    NonPositiveMass { t: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
}
