//! A named initial value problem: parameters, time span, initial state and
//! the right-hand-side bundle built from the parameters.

use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{validate, ParamValue, Parameters};
use crate::registry::Family;
use crate::rhs::RhsBundle;

#[derive(Clone, Debug)]
pub struct Problem {
    family: &'static Family,
    preset: String,
    params: Parameters,
    time_span: (f64, f64),
    y0: Vec<f64>,
    rhs: RhsBundle,
}

pub(crate) fn check_time_span(t0: f64, tf: f64) -> Result<(), ProblemError> {
    if t0.is_finite() && tf.is_finite() && t0 < tf {
        Ok(())
    } else {
        Err(ProblemError::InvalidTimeSpan(t0, tf))
    }
}

impl Problem {
    pub(crate) fn assemble(
        family: &'static Family,
        preset: &str,
        params: Parameters,
        time_span: (f64, f64),
        y0: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        validate(&params, &(family.schema)())?;
        check_time_span(time_span.0, time_span.1)?;
        let rhs = (family.build)(&params)?;
        if y0.len() != rhs.num_vars() {
            return Err(ProblemError::DimensionMismatch { expected: rhs.num_vars(), actual: y0.len() });
        }
        Ok(Self { family, preset: preset.to_string(), params, time_span, y0, rhs })
    }

    /// Family identifier, e.g. `lorenz63`.
    pub fn name(&self) -> &'static str {
        self.family.name
    }

    pub fn family(&self) -> &'static Family {
        self.family
    }

    pub fn preset(&self) -> &str {
        &self.preset
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn time_span(&self) -> (f64, f64) {
        self.time_span
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn num_vars(&self) -> usize {
        self.rhs.num_vars()
    }

    pub fn rhs(&self) -> &RhsBundle {
        &self.rhs
    }

    /// `f(t, y)`.
    pub fn f(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.rhs.eval(t, y)
    }

    /// Replaces one parameter. The new value is validated against the
    /// family schema and the right-hand side (including any cached
    /// factorizations) is rebuilt. On error the problem is left unchanged.
    pub fn set_parameter(&mut self, name: &str, value: ParamValue) -> Result<(), ProblemError> {
        let schema = (self.family.schema)();
        schema.check_field(name, &value)?;
        let mut params = self.params.clone();
        params.insert(name, value);
        let rhs = (self.family.build)(&params)?;
        if rhs.num_vars() != self.y0.len() {
            return Err(ProblemError::DimensionMismatch { expected: self.y0.len(), actual: rhs.num_vars() });
        }
        self.params = params;
        self.rhs = rhs;
        Ok(())
    }

    pub fn set_y0(&mut self, y0: Vec<f64>) -> Result<(), ProblemError> {
        if y0.len() != self.num_vars() {
            return Err(ProblemError::DimensionMismatch { expected: self.num_vars(), actual: y0.len() });
        }
        self.y0 = y0;
        Ok(())
    }

    pub fn set_time_span(&mut self, t0: f64, tf: f64) -> Result<(), ProblemError> {
        check_time_span(t0, tf)?;
        self.time_span = (t0, tf);
        Ok(())
    }

    pub fn has_exact_solution(&self) -> bool {
        self.rhs.exact().is_some()
    }

    /// Exact solution at `t` from `(t0, y0)`, where the family provides one.
    pub fn exact_solution(&self, t: f64) -> Result<Vec<f64>, ProblemError> {
        let exact = self
            .rhs
            .exact()
            .ok_or_else(|| ProblemError::Unsupported(format!("{} has no exact solution", self.name())))?;
        exact(self.time_span.0, &self.y0, t)
    }

    /// A random state from the family's documented sampling box.
    pub fn sample_state(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.family.sample_state)(self, rng)
    }
}
