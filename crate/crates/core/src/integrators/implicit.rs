//! Implicit one-step methods sharing a modified Newton solver: an L-stable
//! fourth-order SDIRK (default) and TR-BDF2. Every stage solves
//! `z − d h f(t, z) = b` with the same iteration matrix `W = I − d h J`.

use nalgebra::{DMatrix, DVector, LU};

use super::dopri5::initial_step;
use super::trajectory::{Stats, Trajectory};
use super::{check_finite, ImplicitMethod, IntegratorOptions, JacobianSource, Record};
use crate::error::{IntegrationError, ProblemError};
use crate::problem::Problem;
use crate::rhs::RhsBundle;

/// TR-BDF2 stage fraction.
const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
/// SDIRK4 diagonal coefficient.
const SD_GAMMA: f64 = 0.25;
const SD_C: [f64; 5] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
const SD_A: [[f64; 4]; 5] = [
    [0.0; 4],
    [0.5, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0],
];
/// Fourth-order weights minus the embedded third-order ones.
const SD_E: [f64; 5] = [25.0 / 24.0 - 59.0 / 48.0, -49.0 / 48.0 + 17.0 / 96.0, 125.0 / 16.0 - 225.0 / 32.0, 0.0, 0.25];
const NEWTON_TOL: f64 = 0.01;
const NEWTON_MAX_ITER: usize = 10;
const NEWTON_MAX_RATE: f64 = 0.9;
const NEWTON_SHRINK: f64 = 0.25;
const MAX_NEWTON_FAILURES: usize = 10;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Forward-difference Jacobian.
pub(crate) fn finite_difference_jacobian(
    rhs: &RhsBundle,
    t: f64,
    y: &[f64],
    f: &[f64],
) -> Result<DMatrix<f64>, ProblemError> {
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for j in 0..n {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        yp[j] = y[j] + delta;
        let delta = yp[j] - y[j];
        rhs.eval_into(t, &yp, &mut fp)?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - f[i]) / delta;
        }
        yp[j] = y[j];
    }
    Ok(jac)
}

struct Newton {
    iterations: usize,
}

struct StepResult {
    y: Vec<f64>,
    f: Vec<f64>,
    /// Unfiltered local error estimate.
    est: DVector<f64>,
    max_iterations: usize,
    total_iterations: usize,
}

impl ImplicitMethod {
    /// Diagonal coefficient `d` of `W = I − d h J`.
    fn diagonal(self) -> f64 {
        match self {
            Self::Sdirk4 => SD_GAMMA,
            Self::TrBdf2 => 0.5 * GAMMA,
        }
    }

    /// Order of the local error estimate minus one.
    fn estimate_order(self) -> i32 {
        match self {
            Self::Sdirk4 => 3,
            Self::TrBdf2 => 2,
        }
    }
}

/// Solves `z − d h f(t, z) = rhs` by modified Newton from the guess in `z`.
/// Returns `None` when the iteration diverges or leaves the finite range.
#[allow(clippy::too_many_arguments)]
fn solve_stage(
    rhs_fn: &RhsBundle,
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    opts: &IntegratorOptions,
    t: f64,
    dh: f64,
    b: &[f64],
    z: &mut [f64],
    fz: &mut [f64],
    stats: &mut Stats,
) -> Result<Option<Newton>, IntegrationError> {
    let n = z.len();
    let mut prev_norm = f64::INFINITY;
    let mut residual = DVector::zeros(n);
    for k in 0..=NEWTON_MAX_ITER {
        rhs_fn.eval_into(t, z, fz)?;
        stats.f_evals += 1;
        for i in 0..n {
            residual[i] = b[i] - z[i] + dh * fz[i];
        }
        let Some(delta) = lu.solve(&residual) else {
            return Ok(None);
        };
        let norm = (0..n).map(|i| delta[i].abs() / opts.weight(z[i], z[i])).fold(0.0, f64::max);
        if !norm.is_finite() {
            return Ok(None);
        }
        for i in 0..n {
            z[i] += delta[i];
        }
        if norm <= NEWTON_TOL {
            // the final pass only verifies convergence
            if norm > 0.0 {
                rhs_fn.eval_into(t, z, fz)?;
                stats.f_evals += 1;
            }
            return Ok(Some(Newton { iterations: k }));
        }
        if k > 0 && norm / prev_norm > NEWTON_MAX_RATE {
            return Ok(None);
        }
        prev_norm = norm;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn attempt_trbdf2(
    rhs: &RhsBundle,
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    opts: &IntegratorOptions,
    t: f64,
    y: &[f64],
    f: &[f64],
    h: f64,
    stats: &mut Stats,
) -> Result<Option<StepResult>, IntegrationError> {
    let n = y.len();
    let dh = 0.5 * GAMMA * h;
    let c2 = 1.0 / (GAMMA * (2.0 - GAMMA));
    let c1 = (1.0 - GAMMA).powi(2) / (GAMMA * (2.0 - GAMMA));
    let k_err = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));
    // trapezoidal stage
    let mut b: Vec<f64> = (0..n).map(|i| y[i] + dh * f[i]).collect();
    let mut z: Vec<f64> = (0..n).map(|i| y[i] + GAMMA * h * f[i]).collect();
    let mut fz = vec![0.0; n];
    let Some(n1) = solve_stage(rhs, lu, opts, t + GAMMA * h, dh, &b, &mut z, &mut fz, stats)? else {
        return Ok(None);
    };
    // BDF2 stage
    for i in 0..n {
        b[i] = c2 * z[i] - c1 * y[i];
    }
    let mut y1: Vec<f64> = (0..n).map(|i| y[i] + h * ((1.0 - GAMMA) * f[i] + GAMMA * fz[i])).collect();
    let mut f1 = vec![0.0; n];
    let Some(n2) = solve_stage(rhs, lu, opts, t + h, dh, &b, &mut y1, &mut f1, stats)? else {
        return Ok(None);
    };
    let est = DVector::from_fn(n, |i, _| {
        2.0 * k_err * h * (f[i] / GAMMA - fz[i] / (GAMMA * (1.0 - GAMMA)) + f1[i] / (1.0 - GAMMA))
    });
    Ok(Some(StepResult {
        y: y1,
        f: f1,
        est,
        max_iterations: n1.iterations.max(n2.iterations),
        total_iterations: n1.iterations + n2.iterations,
    }))
}

#[allow(clippy::too_many_arguments)]
fn attempt_sdirk4(
    rhs: &RhsBundle,
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    opts: &IntegratorOptions,
    t: f64,
    y: &[f64],
    f: &[f64],
    h: f64,
    stats: &mut Stats,
) -> Result<Option<StepResult>, IntegrationError> {
    let n = y.len();
    let dh = SD_GAMMA * h;
    let mut stage_f: Vec<Vec<f64>> = Vec::with_capacity(5);
    let mut z = vec![0.0; n];
    let (mut max_it, mut total_it) = (0, 0);
    for s in 0..5 {
        let mut b = y.to_vec();
        for (j, fj) in stage_f.iter().enumerate() {
            for i in 0..n {
                b[i] += h * SD_A[s][j] * fj[i];
            }
        }
        let prev = stage_f.last().map_or(f, |v| v.as_slice());
        for i in 0..n {
            z[i] = b[i] + dh * prev[i];
        }
        let mut fz = vec![0.0; n];
        let Some(it) = solve_stage(rhs, lu, opts, t + SD_C[s] * h, dh, &b, &mut z, &mut fz, stats)? else {
            return Ok(None);
        };
        max_it = max_it.max(it.iterations);
        total_it += it.iterations;
        stage_f.push(fz);
    }
    let est = DVector::from_fn(n, |i, _| h * (0..5).map(|j| SD_E[j] * stage_f[j][i]).sum::<f64>());
    // stiffly accurate: the last stage is the solution
    Ok(Some(StepResult { y: z, f: stage_f.pop().unwrap(), est, max_iterations: max_it, total_iterations: total_it }))
}

/// Integrates the problem over its time span with the implicit method
/// selected in the options.
pub fn integrate_implicit(problem: &Problem, opts: &IntegratorOptions) -> Result<Trajectory, IntegrationError> {
    opts.validate()?;
    let rhs = problem.rhs();
    let method = opts.implicit_method;
    let (t0, tf) = problem.time_span();
    let n = problem.num_vars();
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = problem.y0().to_vec();
    check_finite(t, &y)?;
    let mut f = rhs.eval(t, &y)?;
    stats.f_evals += 1;
    let mut traj = Trajectory::start(t0, &y);

    let span = tf - t0;
    let mut h = match opts.initial_step {
        Some(h) => h.min(span),
        None => initial_step(method.estimate_order(), rhs, opts, t0, &y, &f, span, &mut stats)?,
    };
    if let Some(hmax) = opts.max_step {
        h = h.min(hmax);
    }
    let exponent = -1.0 / (method.estimate_order() + 1) as f64;

    let mut attempts = 0usize;
    while t < tf {
        let jac = match (opts.jacobian, rhs.jacobian(t, &y)) {
            (JacobianSource::Analytic, Some(j)) => j?,
            _ => {
                stats.f_evals += n;
                finite_difference_jacobian(rhs, t, &y, &f)?
            }
        };
        stats.jacobian_evals += 1;
        let mut reject = false;
        let mut newton_failures = 0usize;
        loop {
            if attempts >= opts.max_steps {
                return Err(IntegrationError::MaxStepsExceeded(opts.max_steps));
            }
            attempts += 1;
            let remaining = tf - t;
            let last = h >= remaining * 0.99;
            let hs = if last { remaining } else { h };
            if hs <= 16.0 * f64::EPSILON * t.abs() || hs <= 0.0 {
                return Err(IntegrationError::StepUnderflow { t, h: hs });
            }
            let w = DMatrix::identity(n, n) - &jac * (method.diagonal() * hs);
            let lu = w.lu();
            stats.factorizations += 1;
            let attempt = match method {
                ImplicitMethod::Sdirk4 => attempt_sdirk4(rhs, &lu, opts, t, &y, &f, hs, &mut stats)?,
                ImplicitMethod::TrBdf2 => attempt_trbdf2(rhs, &lu, opts, t, &y, &f, hs, &mut stats)?,
            };
            let Some(step) = attempt else {
                newton_failures += 1;
                if newton_failures > MAX_NEWTON_FAILURES {
                    return Err(IntegrationError::NewtonDivergence { t, h: hs });
                }
                stats.rejected += 1;
                reject = true;
                h = hs * NEWTON_SHRINK;
                continue;
            };
            stats.newton_iterations += step.total_iterations;
            stats.max_stage_newton_iterations = stats.max_stage_newton_iterations.max(step.max_iterations);

            let est = lu.solve(&step.est).unwrap_or(step.est);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = est[i].abs() / opts.weight(y[i], step.y[i]);
                err = if e.is_nan() { f64::INFINITY } else { err.max(e) };
            }
            if !step.y.iter().all(|v| v.is_finite()) {
                err = f64::INFINITY;
            }
            if err <= 1.0 {
                let mut fac = (SAFETY * err.max(1e-10).powf(exponent)).clamp(FAC_MIN, FAC_MAX);
                if reject {
                    fac = fac.min(1.0);
                }
                t = if last { tf } else { t + hs };
                y = step.y;
                f = step.f;
                h = hs * fac;
                if let Some(hmax) = opts.max_step {
                    h = h.min(hmax);
                }
                stats.accepted += 1;
                if opts.record == Record::Steps || t >= tf {
                    traj.push(t, &y);
                }
                break;
            }
            stats.rejected += 1;
            reject = true;
            let fac = if err.is_finite() { (SAFETY * err.powf(exponent)).max(FAC_MIN) } else { FAC_MIN };
            h = hs * fac;
        }
    }
    traj.stats = stats;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ParamValue, Parameters};
    use crate::registry::{build_preset, canonical};
    use nalgebra::DMatrix;

    fn linear(a: DMatrix<f64>, preset: &str) -> Problem {
        build_preset("linear", preset, &Parameters::new().with("A", ParamValue::Matrix(a))).unwrap()
    }

    fn dahlquist(lambda: f64) -> Problem {
        linear(DMatrix::from_element(1, 1, lambda), "Canonical")
    }

    fn with_method(method: ImplicitMethod, tol: f64) -> IntegratorOptions {
        IntegratorOptions { implicit_method: method, ..IntegratorOptions::with_tolerances(tol, tol) }
    }

    const METHODS: [ImplicitMethod; 2] = [ImplicitMethod::Sdirk4, ImplicitMethod::TrBdf2];

    #[test]
    fn dahlquist_accuracy_and_linear_newton() {
        for m in METHODS {
            let traj = integrate_implicit(&dahlquist(-1.0), &with_method(m, 1e-9)).unwrap();
            assert_eq!(traj.last_time(), 1.0);
            // global error accumulates roughly one tolerance per step
            let err = (traj.last_state()[0] - (-1.0f64).exp()).abs();
            assert!(err < 1e-9 * traj.stats.accepted as f64, "{m:?}: {err:e} after {} steps", traj.stats.accepted);
            assert_eq!(traj.stats.max_stage_newton_iterations, 1, "{m:?}");
        }
    }

    #[test]
    fn fixed_step_orders() {
        let p = dahlquist(-1.0);
        for (m, order) in [(ImplicitMethod::Sdirk4, 4.0), (ImplicitMethod::TrBdf2, 2.0)] {
            let err = |h: f64| {
                let opts = IntegratorOptions { initial_step: Some(h), max_step: Some(h), ..with_method(m, 1.0) };
                let traj = integrate_implicit(&p, &opts).unwrap();
                (traj.last_state()[0] - (-1.0f64).exp()).abs()
            };
            let ratio = err(0.1) / err(0.05);
            assert!((ratio.log2() - order).abs() < 0.15, "{m:?}: ratio {ratio}");
        }
    }

    #[test]
    fn trbdf2_error_estimate_tracks_local_error() {
        let h: f64 = 0.01;
        let mut p = dahlquist(-1.0);
        p.set_time_span(0.0, h).unwrap();
        let opts = IntegratorOptions { initial_step: Some(h), ..with_method(ImplicitMethod::TrBdf2, 1.0) };
        let y = integrate_implicit(&p, &opts).unwrap().last_state()[0];
        let local = (y - (-h).exp()).abs();
        let d = 0.5 * GAMMA;
        let z = (1.0 - d * h) / (1.0 + d * h);
        let (f0, fz, f1) = (-1.0, -z, -y);
        let k = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));
        let est = (2.0 * k * h * (f0 / GAMMA - fz / (GAMMA * (1.0 - GAMMA)) + f1 / (1.0 - GAMMA))).abs() / (1.0 + d * h);
        assert!(est / local > 0.5 && est / local < 2.0, "est {est:e} local {local:e}");
    }

    #[test]
    fn sdirk4_tableau_order_conditions() {
        let b: Vec<f64> = SD_A[4].iter().copied().chain([SD_GAMMA]).collect();
        let a = |i: usize, j: usize| if i == j { SD_GAMMA } else if j < i { SD_A[i][j] } else { 0.0 };
        for (i, &c) in SD_C.iter().enumerate() {
            let row: f64 = (0..5).map(|j| a(i, j)).sum();
            assert!((row - c).abs() < 1e-15);
        }
        let ac: Vec<f64> = (0..5).map(|i| (0..5).map(|j| a(i, j) * SD_C[j]).sum()).collect();
        let ac2: Vec<f64> = (0..5).map(|i| (0..5).map(|j| a(i, j) * SD_C[j] * SD_C[j]).sum()).collect();
        let aac: Vec<f64> = (0..5).map(|i| (0..5).map(|j| a(i, j) * ac[j]).sum()).collect();
        let dot = |v: &dyn Fn(usize) -> f64| (0..5).map(|i| b[i] * v(i)).sum::<f64>();
        let conditions = [
            (dot(&|_| 1.0), 1.0),
            (dot(&|i| SD_C[i]), 0.5),
            (dot(&|i| SD_C[i] * SD_C[i]), 1.0 / 3.0),
            (dot(&|i| ac[i]), 1.0 / 6.0),
            (dot(&|i| SD_C[i].powi(3)), 0.25),
            (dot(&|i| SD_C[i] * ac[i]), 0.125),
            (dot(&|i| ac2[i]), 1.0 / 12.0),
            (dot(&|i| aac[i]), 1.0 / 24.0),
        ];
        for (got, want) in conditions {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
        assert!(SD_E.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn stiff_dahlquist_takes_few_steps() {
        for m in METHODS {
            let traj = integrate_implicit(&dahlquist(-1e6), &IntegratorOptions { implicit_method: m, ..IntegratorOptions::default() }).unwrap();
            assert!(traj.stats.accepted <= 200, "{m:?}: {} steps", traj.stats.accepted);
            assert!(traj.last_state()[0].abs() < 1e-6);
        }
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        let p = canonical("hires").unwrap();
        let y = p.y0().to_vec();
        let f = p.f(0.0, &y).unwrap();
        let fd = finite_difference_jacobian(p.rhs(), 0.0, &y, &f).unwrap();
        let an = p.rhs().jacobian(0.0, &y).unwrap().unwrap();
        assert!((fd - an).amax() < 1e-5);
    }

    #[test]
    fn analytic_and_finite_difference_runs_agree() {
        let p = canonical("brusselator").unwrap();
        for m in METHODS {
            let opts = with_method(m, 1e-8);
            let a = integrate_implicit(&p, &opts).unwrap();
            let b = integrate_implicit(&p, &IntegratorOptions { jacobian: JacobianSource::FiniteDifference, ..opts }).unwrap();
            let diff = a.last_state().iter().zip(b.last_state()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-5, "{m:?}: {diff}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in METHODS {
            assert_eq!(ImplicitMethod::parse(m.name()), Some(m));
        }
        assert_eq!(ImplicitMethod::NAMES, [ImplicitMethod::Sdirk4.name(), ImplicitMethod::TrBdf2.name()]);
    }
}
