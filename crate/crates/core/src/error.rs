use thiserror::Error;

use crate::params::Constraint;

/// Errors raised while building, mutating or evaluating a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem family '{0}'")]
    UnknownFamily(String),
    #[error("unknown preset '{preset}' for family '{family}'")]
    UnknownPreset { family: String, preset: String },
    #[error("unknown field '{0}'")]
    UnknownField(String),
    #[error("missing field '{0}'")]
    MissingField(String),
    /// The message text is a stable contract: `The field {name} does not satisfy {constraint}`.
    #[error("The field {field} does not satisfy {constraint}")]
    Validation { field: String, constraint: Constraint },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid time span [{0}, {1}]: need finite t0 < tf")]
    InvalidTimeSpan(f64, f64),
    #[error("index {index} out of range for {len} state variables")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("event on a vertical wall at x = {0}")]
    EventOnVerticalWall(f64),
    #[error("mass operator is singular")]
    SingularMass,
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Errors raised by the reference integrators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxStepsExceeded(usize),
    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),
    #[error("Newton iteration diverged at t = {t} (h = {h:e})")]
    NewtonDivergence { t: f64, h: f64 },
    #[error("two events within {gap:e} time units near t = {t}")]
    EventStall { t: f64, gap: f64 },
    #[error("problem defines no event function")]
    NoEvent,
    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),
}

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("problem provides no Jacobian")]
    NoJacobian,
    #[error("problem provides no exact solution")]
    NoExactSolution,
    #[error("R factor has a zero diagonal entry at t = {0}")]
    DegenerateR(f64),
    #[error("error {error:e} at {steps} steps is below the round-off floor {floor:e}")]
    ErrorFloorReached { steps: usize, error: f64, floor: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
