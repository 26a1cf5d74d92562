//! Fixed-step explicit methods on a uniform grid.

use super::check_finite;
use super::trajectory::Trajectory;
use crate::error::IntegrationError;
use crate::problem::Problem;
use crate::rhs::RhsBundle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedMethod {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Forward Euler.
    Euler,
}

impl FixedMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::Euler => "euler",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Self::Rk4),
            "euler" => Some(Self::Euler),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Rk4 => 4,
            Self::Euler => 1,
        }
    }
}

/// Scratch buffers for one method step.
pub(crate) struct FixedStepper<'a> {
    rhs: &'a RhsBundle,
    method: FixedMethod,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> FixedStepper<'a> {
    pub(crate) fn new(rhs: &'a RhsBundle, method: FixedMethod) -> Self {
        let n = rhs.num_vars();
        Self { rhs, method, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    /// Advances `y` from `t` by `h` in place.
    pub(crate) fn step(&mut self, t: f64, y: &mut [f64], h: f64) -> Result<(), IntegrationError> {
        let n = y.len();
        match self.method {
            FixedMethod::Euler => {
                self.rhs.eval_into(t, y, &mut self.k[0])?;
                for (yi, ki) in y.iter_mut().zip(&self.k[0]) {
                    *yi += h * ki;
                }
            }
            FixedMethod::Rk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                let tmp = &mut self.tmp;
                self.rhs.eval_into(t, y, k1)?;
                for i in 0..n {
                    tmp[i] = y[i] + 0.5 * h * k1[i];
                }
                self.rhs.eval_into(t + 0.5 * h, tmp, k2)?;
                for i in 0..n {
                    tmp[i] = y[i] + 0.5 * h * k2[i];
                }
                self.rhs.eval_into(t + 0.5 * h, tmp, k3)?;
                for i in 0..n {
                    tmp[i] = y[i] + h * k3[i];
                }
                self.rhs.eval_into(t + h, tmp, k4)?;
                for i in 0..n {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        Ok(())
    }

    pub(crate) fn evals_per_step(&self) -> usize {
        match self.method {
            FixedMethod::Euler => 1,
            FixedMethod::Rk4 => 4,
        }
    }
}

/// Integrates over the problem's time span in `steps` equal steps. Time
/// points are computed as `t0 + k h` so the last one is exactly `tf`.
pub fn integrate_fixed(problem: &Problem, steps: usize, method: FixedMethod) -> Result<Trajectory, IntegrationError> {
    integrate_fixed_with(problem, steps, method, true)
}

/// As [`integrate_fixed`] but optionally storing only the endpoints.
pub fn integrate_fixed_with(
    problem: &Problem,
    steps: usize,
    method: FixedMethod,
    record_steps: bool,
) -> Result<Trajectory, IntegrationError> {
    if steps == 0 {
        return Err(IntegrationError::InvalidOptions("number of steps must be at least 1".into()));
    }
    let (t0, tf) = problem.time_span();
    let h = (tf - t0) / steps as f64;
    let mut y = problem.y0().to_vec();
    check_finite(t0, &y)?;
    let mut traj = Trajectory::start(t0, &y);
    let mut stepper = FixedStepper::new(problem.rhs(), method);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        stepper.step(t, &mut y, h)?;
        let tn = if k + 1 == steps { tf } else { t0 + (k + 1) as f64 * h };
        check_finite(tn, &y)?;
        if record_steps || k + 1 == steps {
            traj.push(tn, &y);
        }
    }
    traj.stats.accepted = steps;
    traj.stats.f_evals = steps * stepper.evals_per_step();
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::build_preset;
    use crate::params::Parameters;

    fn dahlquist() -> Problem {
        build_preset("linear", "Canonical", &Parameters::new()).unwrap()
    }

    #[test]
    fn euler_matches_closed_form() {
        let n = 10;
        let traj = integrate_fixed(&dahlquist(), n, FixedMethod::Euler).unwrap();
        let expected = (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((traj.last_state()[0] - expected).abs() < 1e-15);
        assert_eq!(traj.len(), n + 1);
        assert_eq!(traj.last_time(), 1.0);
    }

    #[test]
    fn rk4_matches_stability_polynomial() {
        let n = 8;
        let z: f64 = -1.0 / n as f64;
        let r = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        let traj = integrate_fixed(&dahlquist(), n, FixedMethod::Rk4).unwrap();
        assert!((traj.last_state()[0] - r.powi(n as i32)).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(matches!(integrate_fixed(&dahlquist(), 0, FixedMethod::Rk4), Err(IntegrationError::InvalidOptions(_))));
    }

    #[test]
    fn blowup_reports_non_finite_state() {
        let o = Parameters::new().with("A", crate::params::ParamValue::Matrix(nalgebra::DMatrix::from_element(1, 1, 1e40)));
        let mut p = build_preset("linear", "Canonical", &o).unwrap();
        p.set_time_span(0.0, 1e3).unwrap();
        let err = integrate_fixed(&p, 10, FixedMethod::Euler).unwrap_err();
        assert!(matches!(err, IntegrationError::NonFiniteState(_)));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [FixedMethod::Rk4, FixedMethod::Euler] {
            assert_eq!(FixedMethod::parse(m.name()), Some(m));
        }
        assert_eq!(FixedMethod::parse("rk2"), None);
    }
}
