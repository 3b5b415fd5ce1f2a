use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised by the geometry kernel, the set-valued map layer, the
/// checkers and the solution sampler.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("no piece of the set-valued map matches x = {point:?}")]
    NoPieceMatches { point: Vec<f64> },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("unsupported smoothness: {0}")]
    UnsupportedSmoothness(String),

    #[error("degenerate gradient |grad B| = {norm:e} at {point:?}")]
    DegenerateGradient { point: Vec<f64>, norm: f64 },

    #[error("all {samples} gradient samples around {point:?} fall on the singular set")]
    AllSamplesSingular { point: Vec<f64>, samples: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("root bracket exhausted while computing {what} at a = {at}")]
    BracketExhausted { what: &'static str, at: f64 },

    #[error("velocity {velocity:?} is not admissible at step {step} (state {state:?})")]
    VelocityNotAdmissible {
        step: usize,
        state: Vec<f64>,
        velocity: Vec<f64>,
    },

    #[error("state {state:?} left the domain box at step {step}")]
    LeftDomain { step: usize, state: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
