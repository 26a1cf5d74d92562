//! Dormand–Prince 5(4) with FSAL and a PI step-size controller.

use super::trajectory::{Stats, Trajectory};
use super::{check_finite, IntegratorOptions, Record};
use crate::error::IntegrationError;
use crate::problem::Problem;
use crate::rhs::RhsBundle;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const ALPHA: f64 = 0.17;
const BETA: f64 = 0.04;

/// A single-step Dormand–Prince attempt.
pub(crate) struct Attempt {
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    /// Scaled max-norm error estimate; infinite if the step produced non-finite values.
    pub err: f64,
}

/// One trial step of size `h` from `(t, y)` with `f = f(t, y)`.
pub(crate) fn attempt(
    rhs: &RhsBundle,
    opts: &IntegratorOptions,
    t: f64,
    y: &[f64],
    f: &[f64],
    h: f64,
    stats: &mut Stats,
) -> Result<Attempt, IntegrationError> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f.to_vec());
    let mut stage = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += A[s][j] * kj[i];
            }
            stage[i] = y[i] + h * acc;
        }
        let mut ks = vec![0.0; n];
        rhs.eval_into(t + C[s] * h, &stage, &mut ks)?;
        stats.f_evals += 1;
        k.push(ks);
    }
    // the seventh stage point is the fifth-order solution (FSAL)
    let ynew = stage;
    let mut err: f64 = 0.0;
    for i in 0..n {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += E[j] * kj[i];
        }
        let scaled = (h * e).abs() / opts.weight(y[i], ynew[i]);
        err = if scaled.is_nan() { f64::INFINITY } else { err.max(scaled) };
    }
    if !ynew.iter().all(|v| v.is_finite()) {
        err = f64::INFINITY;
    }
    Ok(Attempt { y: ynew, f: k.pop().unwrap(), err })
}

/// Initial step after Hairer, Nørsett & Wanner for a method of the given
/// order. If `f` and its variation both vanish the whole span is taken.
#[allow(clippy::too_many_arguments)]
pub(crate) fn initial_step(
    order: i32,
    rhs: &RhsBundle,
    opts: &IntegratorOptions,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    stats: &mut Stats,
) -> Result<f64, IntegrationError> {
    let n = y0.len().max(1) as f64;
    let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() / n).sqrt();
    let sc: Vec<f64> = y0.iter().map(|&y| opts.weight(y, y)).collect();
    let d0 = rms(&mut y0.iter().zip(&sc).map(|(y, s)| y / s));
    let d1 = rms(&mut f0.iter().zip(&sc).map(|(f, s)| f / s));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let f1 = rhs.eval(t0 + h0, &y1)?;
    stats.f_evals += 1;
    let d2 = rms(&mut f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| (a - b) / s)) / h0;
    if d1 <= 1e-15 && d2 <= 1e-15 {
        return Ok(span);
    }
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / (order + 1) as f64) };
    Ok((100.0 * h0).min(h1).min(span))
}

/// A resumable Dormand–Prince integration from `t0` to `tf` that yields one
/// accepted step at a time.
pub struct Dopri5<'a> {
    rhs: &'a RhsBundle,
    opts: IntegratorOptions,
    t: f64,
    tf: f64,
    y: Vec<f64>,
    f: Vec<f64>,
    h: f64,
    err_prev: f64,
    attempts: usize,
    stats: Stats,
}

impl<'a> Dopri5<'a> {
    pub fn new(rhs: &'a RhsBundle, t0: f64, y0: &[f64], tf: f64, opts: &IntegratorOptions) -> Result<Self, IntegrationError> {
        opts.validate()?;
        crate::problem::check_time_span(t0, tf)?;
        if y0.len() != rhs.num_vars() {
            return Err(crate::error::ProblemError::DimensionMismatch { expected: rhs.num_vars(), actual: y0.len() }.into());
        }
        check_finite(t0, y0)?;
        let mut stats = Stats::default();
        let f = rhs.eval(t0, y0)?;
        stats.f_evals += 1;
        let span = tf - t0;
        let mut h = match opts.initial_step {
            Some(h) => h.min(span),
            None => initial_step(5, rhs, opts, t0, y0, &f, span, &mut stats)?,
        };
        if let Some(hmax) = opts.max_step {
            h = h.min(hmax);
        }
        Ok(Self { rhs, opts: opts.clone(), t: t0, tf, y: y0.to_vec(), f, h, err_prev: 1e-4, attempts: 0, stats })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `f(t, y)` at the current point.
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.tf
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    /// Fifth-order solution of a trial step of size `h` from the current
    /// point, without changing the integrator state.
    pub fn trial(&mut self, h: f64) -> Result<Vec<f64>, IntegrationError> {
        let a = attempt(self.rhs, &self.opts, self.t, &self.y, &self.f, h, &mut self.stats)?;
        Ok(a.y)
    }

    /// Fifth-order solution of a step of size `h` from an arbitrary point
    /// `(t, y)` with `f = f(t, y)`.
    pub fn trial_from(&mut self, t: f64, y: &[f64], f: &[f64], h: f64) -> Result<Vec<f64>, IntegrationError> {
        let a = attempt(self.rhs, &self.opts, t, y, f, h, &mut self.stats)?;
        Ok(a.y)
    }

    /// Advances by one accepted step and returns the new time, or `None`
    /// once `tf` has been reached.
    pub fn step(&mut self) -> Result<Option<f64>, IntegrationError> {
        if self.is_done() {
            return Ok(None);
        }
        let mut reject = false;
        loop {
            if self.attempts >= self.opts.max_steps {
                return Err(IntegrationError::MaxStepsExceeded(self.opts.max_steps));
            }
            self.attempts += 1;
            let remaining = self.tf - self.t;
            // stretch the last step by up to 1% rather than leave a sliver
            let last = self.h >= remaining * 0.99;
            let h = if last { remaining } else { self.h };
            if h <= 16.0 * f64::EPSILON * self.t.abs() || h <= 0.0 {
                return Err(IntegrationError::StepUnderflow { t: self.t, h });
            }
            let a = attempt(self.rhs, &self.opts, self.t, &self.y, &self.f, h, &mut self.stats)?;
            if a.err <= 1.0 {
                let err = a.err.max(1e-4);
                let mut fac = SAFETY * err.powf(-ALPHA) * self.err_prev.powf(BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if reject {
                    fac = fac.min(1.0);
                }
                self.err_prev = err;
                self.t = if last { self.tf } else { self.t + h };
                self.y = a.y;
                self.f = a.f;
                self.h = h * fac;
                if let Some(hmax) = self.opts.max_step {
                    self.h = self.h.min(hmax);
                }
                self.stats.accepted += 1;
                return Ok(Some(self.t));
            }
            self.stats.rejected += 1;
            reject = true;
            let fac = if a.err.is_finite() { (SAFETY * a.err.powf(-ALPHA)).max(FAC_MIN) } else { FAC_MIN };
            self.h = h * fac;
        }
    }
}

/// Integrates the problem over its time span with Dormand–Prince 5(4).
pub fn integrate_adaptive(problem: &Problem, opts: &IntegratorOptions) -> Result<Trajectory, IntegrationError> {
    let (t0, tf) = problem.time_span();
    let mut stepper = Dopri5::new(problem.rhs(), t0, problem.y0(), tf, opts)?;
    let mut traj = Trajectory::start(t0, problem.y0());
    while let Some(t) = stepper.step()? {
        if opts.record == Record::Steps || stepper.is_done() {
            traj.push(t, stepper.y());
        }
    }
    traj.stats = *stepper.stats();
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ParamValue, Parameters};
    use crate::registry::{build_preset, canonical};
    use nalgebra::DMatrix;

    fn dahlquist(lambda: f64) -> Problem {
        let o = Parameters::new().with("A", ParamValue::Matrix(DMatrix::from_element(1, 1, lambda)));
        build_preset("linear", "Canonical", &o).unwrap()
    }

    #[test]
    fn dahlquist_accuracy() {
        let traj = integrate_adaptive(&dahlquist(-1.0), &IntegratorOptions::with_tolerances(1e-10, 1e-10)).unwrap();
        assert_eq!(traj.last_time(), 1.0);
        assert!((traj.last_state()[0] - (-1.0f64).exp()).abs() <= 1e-8);
    }

    #[test]
    fn zero_rhs_takes_one_step() {
        let o = Parameters::new().with("A", ParamValue::Matrix(DMatrix::zeros(2, 2)));
        let p = build_preset("linear", "Diagonal", &o).unwrap();
        let traj = integrate_adaptive(&p, &IntegratorOptions::default()).unwrap();
        assert_eq!(traj.times, vec![0.0, 1.0]);
        assert_eq!(traj.last_state(), p.y0());
    }

    #[test]
    fn lorenz63_stays_in_trapping_region() {
        let p = canonical("lorenz63").unwrap();
        let traj = integrate_adaptive(&p, &IntegratorOptions::default()).unwrap();
        assert_eq!(traj.last_time(), 60.0);
        assert!(traj.states.iter().all(|y| y.iter().all(|v| v.abs() <= 100.0)));
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn endpoints_only_recording() {
        let p = canonical("lorenz63").unwrap();
        let opts = IntegratorOptions { record: Record::Endpoints, ..IntegratorOptions::default() };
        let full = integrate_adaptive(&p, &IntegratorOptions::default()).unwrap();
        let ends = integrate_adaptive(&p, &opts).unwrap();
        assert_eq!(ends.times, vec![0.0, 60.0]);
        assert_eq!(ends.last_state(), full.last_state());
    }

    #[test]
    fn max_step_is_respected() {
        let opts = IntegratorOptions { max_step: Some(0.01), ..IntegratorOptions::default() };
        let traj = integrate_adaptive(&dahlquist(-1.0), &opts).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-15));
    }

    #[test]
    fn step_limit_and_bad_options() {
        let opts = IntegratorOptions { max_steps: 3, ..IntegratorOptions::with_tolerances(1e-12, 1e-12) };
        assert!(matches!(integrate_adaptive(&dahlquist(-1.0), &opts), Err(IntegrationError::MaxStepsExceeded(3))));
        let bad = IntegratorOptions { rel_tol: -1.0, ..IntegratorOptions::default() };
        assert!(matches!(integrate_adaptive(&dahlquist(-1.0), &bad), Err(IntegrationError::InvalidOptions(_))));
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y^2 from y = 1 blows up at t = 1
        let rhs = RhsBundle::infallible(1, |_, y, dy| dy[0] = y[0] * y[0]);
        let mut s = Dopri5::new(&rhs, 0.0, &[1.0], 2.0, &IntegratorOptions::default()).unwrap();
        let err = loop {
            match s.step() {
                Ok(Some(_)) => continue,
                Ok(None) => panic!("integrated through a singularity"),
                Err(e) => break e,
            }
        };
        assert!(matches!(err, IntegrationError::StepUnderflow { .. }), "{err:?}");
    }
}
