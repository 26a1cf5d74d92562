//! Reference time integrators.
//!
//! * [`integrate_adaptive`]: Dormand–Prince 5(4) with PI step control;
//! * [`integrate_fixed`]: classical RK4 or forward Euler on a uniform grid;
//! * [`integrate_implicit`]: L-stable SDIRK4 or TR-BDF2 using modified
//!   Newton iterations with the problem's Jacobian (or a forward-difference
//!   approximation when none is provided);
//! * [`integrate_with_events`]: Dormand–Prince stepping with event detection,
//!   bisection of the crossing, state transforms and restarts.

mod dopri5;
mod events;
mod fixed;
mod implicit;
mod trajectory;

pub use dopri5::{integrate_adaptive, Dopri5};
pub use events::integrate_with_events;
pub use fixed::{integrate_fixed, integrate_fixed_with, FixedMethod};
pub use implicit::integrate_implicit;
pub use trajectory::{EventRecord, Stats, Status, Trajectory};

use crate::error::IntegrationError;

/// Which rows an integration run stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    /// Every accepted step.
    Steps,
    /// Only the initial and final states.
    Endpoints,
}

/// Where the implicit integrator takes its Jacobian from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianSource {
    /// The problem's analytic Jacobian, falling back to finite differences.
    Analytic,
    /// Always forward finite differences.
    FiniteDifference,
}

/// Stepper used by [`integrate_implicit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitMethod {
    /// Five-stage, stiffly accurate SDIRK of order 4 with an embedded order-3 estimate.
    Sdirk4,
    /// Trapezoidal rule followed by BDF2, order 2.
    TrBdf2,
}

impl ImplicitMethod {
    pub const NAMES: [&'static str; 2] = ["sdirk4", "trbdf2"];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sdirk4 => "sdirk4",
            Self::TrBdf2 => "trbdf2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sdirk4" => Some(Self::Sdirk4),
            "trbdf2" => Some(Self::TrBdf2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: Option<f64>,
    pub initial_step: Option<f64>,
    /// Limit on attempted steps.
    pub max_steps: usize,
    pub jacobian: JacobianSource,
    pub implicit_method: ImplicitMethod,
    pub record: Record,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-6,
            rel_tol: 1e-3,
            max_step: None,
            initial_step: None,
            max_steps: 10_000_000,
            jacobian: JacobianSource::Analytic,
            implicit_method: ImplicitMethod::Sdirk4,
            record: Record::Steps,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return Err(IntegrationError::InvalidOptions("tolerances must be positive and finite".into()));
        }
        if self.max_step.is_some_and(|h| !positive(h)) || self.initial_step.is_some_and(|h| !positive(h)) {
            return Err(IntegrationError::InvalidOptions("step sizes must be positive and finite".into()));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::InvalidOptions("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Error weight `abs_tol + rel_tol max(|a|, |b|)`.
    pub(crate) fn weight(&self, a: f64, b: f64) -> f64 {
        self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }
}

pub(crate) fn check_finite(t: f64, y: &[f64]) -> Result<(), IntegrationError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegrationError::NonFiniteState(t))
    }
}
