//! The right-hand-side bundle: `f` plus whatever derivative, splitting and
//! event information a problem provides.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::ProblemError;

pub type RhsFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<(), ProblemError> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(f64, &[f64]) -> Result<DMatrix<f64>, ProblemError> + Send + Sync>;
/// `(t, y, v, out)`: writes a Jacobian(-adjoint)-vector product into `out`.
pub type ProductFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) -> Result<(), ProblemError> + Send + Sync>;
pub type EventValueFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type EventTransformFn = Arc<dyn Fn(f64, &[f64]) -> Result<EventOutcome, ProblemError> + Send + Sync>;
/// `(t0, y0, t)`: exact solution at `t` of the problem started from `y0` at `t0`.
pub type ExactFn = Arc<dyn Fn(f64, &[f64], f64) -> Result<Vec<f64>, ProblemError> + Send + Sync>;
pub type ApproxJacobianFn =
    Arc<dyn Fn(f64, &[f64]) -> Result<Arc<dyn LinearOperator>, ProblemError> + Send + Sync>;

/// A matrix-free linear operator.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<(), ProblemError>;
    fn apply_transpose(&self, v: &[f64], out: &mut [f64]) -> Result<(), ProblemError>;
}

/// State after an event fires.
#[derive(Clone, Debug, PartialEq)]
pub struct EventOutcome {
    pub state: Vec<f64>,
    /// Stop integrating after this event.
    pub terminal: bool,
}

/// Which sign changes of the event value count as an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventDirection {
    Rising,
    Falling,
    Either,
}

impl EventDirection {
    /// True if going from `before` to `after` is a crossing in this direction.
    pub fn crosses(self, before: f64, after: f64) -> bool {
        match self {
            EventDirection::Falling => before > 0.0 && after <= 0.0,
            EventDirection::Rising => before < 0.0 && after >= 0.0,
            EventDirection::Either => (before > 0.0 && after <= 0.0) || (before < 0.0 && after >= 0.0),
        }
    }
}

#[derive(Clone)]
pub struct Event {
    pub value: EventValueFn,
    pub direction: EventDirection,
    pub transform: EventTransformFn,
}

#[derive(Clone)]
pub struct RhsBundle {
    num_vars: usize,
    f: RhsFn,
    jacobian: Option<JacobianFn>,
    jvp: Option<ProductFn>,
    javp: Option<ProductFn>,
    jacobian_approx: Option<ApproxJacobianFn>,
    partitions: Vec<(String, RhsBundle)>,
    event: Option<Event>,
    exact: Option<ExactFn>,
}

impl fmt::Debug for RhsBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsBundle")
            .field("num_vars", &self.num_vars)
            .field("jacobian", &self.jacobian.is_some())
            .field("jvp", &self.jvp.is_some())
            .field("javp", &self.javp.is_some())
            .field("partitions", &self.partitions.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>())
            .field("event", &self.event.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl RhsBundle {
    pub fn new(
        num_vars: usize,
        f: impl Fn(f64, &[f64], &mut [f64]) -> Result<(), ProblemError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            num_vars,
            f: Arc::new(f),
            jacobian: None,
            jvp: None,
            javp: None,
            jacobian_approx: None,
            partitions: Vec::new(),
            event: None,
            exact: None,
        }
    }

    /// Convenience constructor for right-hand sides that cannot fail.
    pub fn infallible(num_vars: usize, f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self::new(num_vars, move |t, y, dy| {
            f(t, y, dy);
            Ok(())
        })
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(f64, &[f64]) -> Result<DMatrix<f64>, ProblemError> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_jvp(
        mut self,
        jvp: impl Fn(f64, &[f64], &[f64], &mut [f64]) -> Result<(), ProblemError> + Send + Sync + 'static,
    ) -> Self {
        self.jvp = Some(Arc::new(jvp));
        self
    }

    pub fn with_javp(
        mut self,
        javp: impl Fn(f64, &[f64], &[f64], &mut [f64]) -> Result<(), ProblemError> + Send + Sync + 'static,
    ) -> Self {
        self.javp = Some(Arc::new(javp));
        self
    }

    /// Fills in missing Jacobian-vector products from the dense Jacobian.
    pub fn with_products_from_jacobian(mut self) -> Self {
        if let Some(jac) = self.jacobian.clone() {
            if self.jvp.is_none() {
                let jac = jac.clone();
                self.jvp = Some(Arc::new(move |t, y, v, out| {
                    let prod = jac(t, y)? * DVector::from_column_slice(v);
                    out.copy_from_slice(prod.as_slice());
                    Ok(())
                }));
            }
            if self.javp.is_none() {
                self.javp = Some(Arc::new(move |t, y, v, out| {
                    let prod = jac(t, y)?.tr_mul(&DVector::from_column_slice(v));
                    out.copy_from_slice(prod.as_slice());
                    Ok(())
                }));
            }
        }
        self
    }

    pub fn with_jacobian_approx(
        mut self,
        approx: impl Fn(f64, &[f64]) -> Result<Arc<dyn LinearOperator>, ProblemError> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian_approx = Some(Arc::new(approx));
        self
    }

    pub fn with_partition(mut self, name: &str, part: RhsBundle) -> Self {
        self.partitions.push((name.to_string(), part));
        self
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.event = Some(event);
        self
    }

    pub fn with_exact(
        mut self,
        exact: impl Fn(f64, &[f64], f64) -> Result<Vec<f64>, ProblemError> + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn check_len(&self, len: usize) -> Result<(), ProblemError> {
        if len != self.num_vars {
            return Err(ProblemError::DimensionMismatch { expected: self.num_vars, actual: len });
        }
        Ok(())
    }

    /// Evaluates `f(t, y)` into `dy`.
    pub fn eval_into(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ProblemError> {
        self.check_len(y.len())?;
        self.check_len(dy.len())?;
        (self.f)(t, y, dy)
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let mut dy = vec![0.0; self.num_vars];
        self.eval_into(t, y, &mut dy)?;
        Ok(dy)
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// The analytic Jacobian, or `None` if the problem does not provide one.
    pub fn jacobian(&self, t: f64, y: &[f64]) -> Option<Result<DMatrix<f64>, ProblemError>> {
        let jac = self.jacobian.as_ref()?;
        Some(self.check_len(y.len()).and_then(|_| jac(t, y)))
    }

    pub fn has_jvp(&self) -> bool {
        self.jvp.is_some()
    }

    pub fn has_javp(&self) -> bool {
        self.javp.is_some()
    }

    pub fn jvp(&self, t: f64, y: &[f64], v: &[f64]) -> Option<Result<Vec<f64>, ProblemError>> {
        let jvp = self.jvp.as_ref()?;
        Some(self.product(jvp, t, y, v))
    }

    pub fn javp(&self, t: f64, y: &[f64], v: &[f64]) -> Option<Result<Vec<f64>, ProblemError>> {
        let javp = self.javp.as_ref()?;
        Some(self.product(javp, t, y, v))
    }

    fn product(&self, op: &ProductFn, t: f64, y: &[f64], v: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_len(y.len())?;
        self.check_len(v.len())?;
        let mut out = vec![0.0; self.num_vars];
        op(t, y, v, &mut out)?;
        Ok(out)
    }

    /// An approximate (linear-terms-only) Jacobian operator, where provided.
    pub fn jacobian_approx(&self, t: f64, y: &[f64]) -> Option<Result<Arc<dyn LinearOperator>, ProblemError>> {
        let approx = self.jacobian_approx.as_ref()?;
        Some(self.check_len(y.len()).and_then(|_| approx(t, y)))
    }

    pub fn partitions(&self) -> &[(String, RhsBundle)] {
        &self.partitions
    }

    pub fn partition(&self, name: &str) -> Option<&RhsBundle> {
        self.partitions.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn event(&self) -> Option<&Event> {
        self.event.as_ref()
    }

    pub fn exact(&self) -> Option<&ExactFn> {
        self.exact.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation() -> RhsBundle {
        RhsBundle::infallible(2, |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        })
        .with_jacobian(|_, _| Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])))
        .with_products_from_jacobian()
    }

    #[test]
    fn dimension_is_checked() {
        let rhs = rotation();
        assert_eq!(rhs.eval(0.0, &[1.0]).unwrap_err(), ProblemError::DimensionMismatch { expected: 2, actual: 1 });
        assert!(matches!(rhs.jvp(0.0, &[1.0, 2.0], &[1.0]), Some(Err(ProblemError::DimensionMismatch { .. }))));
    }

    #[test]
    fn derived_products_match_jacobian() {
        let rhs = rotation();
        assert_eq!(rhs.jvp(0.0, &[0.0, 0.0], &[1.0, 2.0]).unwrap().unwrap(), vec![2.0, -1.0]);
        assert_eq!(rhs.javp(0.0, &[0.0, 0.0], &[1.0, 2.0]).unwrap().unwrap(), vec![-2.0, 1.0]);
    }

    #[test]
    fn event_directions() {
        assert!(EventDirection::Falling.crosses(1.0, 0.0));
        assert!(!EventDirection::Falling.crosses(0.0, 1.0));
        assert!(!EventDirection::Falling.crosses(-1e-15, 1.0));
        assert!(EventDirection::Rising.crosses(-1.0, 1.0));
        assert!(EventDirection::Either.crosses(-1.0, 1.0) && EventDirection::Either.crosses(1.0, -1.0));
    }
}
