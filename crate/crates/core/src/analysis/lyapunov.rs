//! Lyapunov spectrum by repeated QR re-orthonormalization of a tangent frame.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, ProblemError};
use crate::integrators::{integrate_adaptive, Dopri5, IntegratorOptions, Record};
use crate::problem::Problem;
use crate::rhs::RhsBundle;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LyapunovScheme {
    /// Propagate the frame by `Q + dt/2 (J_i Q + J_{i+1} Q)` between
    /// consecutive output points of an adaptive run, followed by QR. Each
    /// accepted step contributes `refine` equally spaced output points.
    Trapezoidal { refine: usize },
    /// Integrate `Y' = J(y) Y` alongside the state and re-orthonormalize
    /// every `interval` time units.
    Variational { interval: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovOptions {
    /// Spin-up span; `None` uses the problem's own time span.
    pub spinup: Option<(f64, f64)>,
    /// Length of the averaging span, which starts where the spin-up ends.
    pub averaging_length: f64,
    /// Tolerances of the spin-up run.
    pub spinup_tolerances: (f64, f64),
    /// Absolute and relative tolerance of the averaging run.
    pub tolerance: f64,
    pub scheme: LyapunovScheme,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        Self {
            spinup: None,
            averaging_length: 500.0,
            spinup_tolerances: (d.abs_tol, d.rel_tol),
            tolerance: 100.0 * f64::EPSILON,
            scheme: LyapunovScheme::Trapezoidal { refine: 4 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// Exponents per unit time, sorted descending.
    pub exponents: Vec<f64>,
    /// Kaplan–Yorke dimension of the spectrum.
    pub fractal_dimension: f64,
    pub averaging_span: (f64, f64),
    /// Number of frame updates.
    pub steps: usize,
}

/// Kaplan–Yorke dimension `k + (λ_1 + … + λ_k) / |λ_{k+1}|` of a spectrum
/// sorted descending, with `k` the largest index whose prefix sum is
/// non-negative.
pub fn kaplan_yorke(exponents: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    for (i, &l) in exponents.iter().enumerate() {
        if sum + l < 0.0 {
            break;
        }
        sum += l;
        k = i + 1;
    }
    if k == 0 {
        0.0
    } else if k == exponents.len() {
        k as f64
    } else {
        k as f64 + sum / exponents[k].abs()
    }
}

/// QR with the sign fix `D = diag(sign(diag R))` so that `R` has a positive
/// diagonal. Returns `Q D` and `log(diag(D R))`.
fn signed_qr(m: DMatrix<f64>, t: f64) -> Result<(DMatrix<f64>, Vec<f64>), AnalysisError> {
    let qr = m.qr();
    let (mut q, r) = qr.unpack();
    let mut logs = Vec::with_capacity(r.nrows());
    for i in 0..r.nrows() {
        let d = r[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(AnalysisError::DegenerateR(t));
        }
        if d < 0.0 {
            q.column_mut(i).neg_mut();
        }
        logs.push(d.abs().ln());
    }
    Ok((q, logs))
}

fn jacobian(rhs: &RhsBundle, t: f64, y: &[f64]) -> Result<DMatrix<f64>, AnalysisError> {
    rhs.jacobian(t, y).ok_or(AnalysisError::NoJacobian)?.map_err(AnalysisError::from)
}

/// Lyapunov spectrum: a spin-up run lands on the attractor, then the
/// exponents are averaged over `[t_spin, t_spin + averaging_length]`.
pub fn lyapunov_spectrum(problem: &Problem, opts: &LyapunovOptions) -> Result<LyapunovResult, AnalysisError> {
    let rhs = problem.rhs();
    if !rhs.has_jacobian() {
        return Err(AnalysisError::NoJacobian);
    }
    if !(opts.averaging_length.is_finite() && opts.averaging_length > 0.0) {
        return Err(AnalysisError::InvalidArgument("averaging length must be positive and finite".into()));
    }
    if !(opts.tolerance.is_finite() && opts.tolerance > 0.0) {
        return Err(AnalysisError::InvalidArgument("tolerance must be positive and finite".into()));
    }
    let mut spin = problem.clone();
    if let Some((a, b)) = opts.spinup {
        spin.set_time_span(a, b)?;
    }
    let spin_opts = IntegratorOptions {
        record: Record::Endpoints,
        ..IntegratorOptions::with_tolerances(opts.spinup_tolerances.0, opts.spinup_tolerances.1)
    };
    let spun = integrate_adaptive(&spin, &spin_opts)?;
    let t0 = spun.last_time();
    let t1 = t0 + opts.averaging_length;
    let y0 = spun.last_state().to_vec();
    let avg_opts = IntegratorOptions {
        record: Record::Endpoints,
        ..IntegratorOptions::with_tolerances(opts.tolerance, opts.tolerance)
    };
    let (mut sums, steps) = match opts.scheme {
        LyapunovScheme::Trapezoidal { refine } => {
            if refine == 0 {
                return Err(AnalysisError::InvalidArgument("refine must be at least 1".into()));
            }
            trapezoidal(rhs, t0, &y0, t1, refine, &avg_opts)?
        }
        LyapunovScheme::Variational { interval } => {
            if !(interval.is_finite() && interval > 0.0) {
                return Err(AnalysisError::InvalidArgument("re-orthonormalization interval must be positive".into()));
            }
            variational(rhs, t0, &y0, t1, interval, &avg_opts)?
        }
    };
    for s in &mut sums {
        *s /= t1 - t0;
    }
    sums.sort_by(|a, b| b.total_cmp(a));
    let fractal_dimension = kaplan_yorke(&sums);
    Ok(LyapunovResult { exponents: sums, fractal_dimension, averaging_span: (t0, t1), steps })
}

/// Frame propagation over the output points of an adaptive run. Points
/// inside a step are fifth-order solutions of shortened steps from its
/// start. As in the reference listing, the final interval is not used.
fn trapezoidal(
    rhs: &RhsBundle,
    t0: f64,
    y0: &[f64],
    t1: f64,
    refine: usize,
    opts: &IntegratorOptions,
) -> Result<(Vec<f64>, usize), AnalysisError> {
    let n = y0.len();
    let mut stepper = Dopri5::new(rhs, t0, y0, t1, opts)?;
    let mut q = DMatrix::identity(n, n);
    let mut sums = vec![0.0; n];
    let mut t_prev = t0;
    let mut jac_prev = jacobian(rhs, t0, y0)?;
    let mut steps = 0;
    loop {
        let (ts, ys, fs) = (stepper.t(), stepper.y().to_vec(), stepper.f().to_vec());
        let Some(te) = stepper.step()? else { break };
        let h = te - ts;
        let y_end = stepper.y().to_vec();
        for k in 1..=refine {
            if k == refine && stepper.is_done() {
                break;
            }
            let (t, y) = if k == refine {
                (te, y_end.clone())
            } else {
                let theta = k as f64 / refine as f64;
                (ts + theta * h, stepper.trial_from(ts, &ys, &fs, theta * h)?)
            };
            let dt = t - t_prev;
            let jac = jacobian(rhs, t, &y)?;
            let w = (&jac_prev * &q + &jac * &q) * (0.5 * dt);
            let (q_new, logs) = signed_qr(&q + w, t)?;
            for (s, l) in sums.iter_mut().zip(&logs) {
                *s += l;
            }
            q = q_new;
            jac_prev = jac;
            t_prev = t;
            steps += 1;
        }
    }
    Ok((sums, steps))
}

/// Integrates the state together with the tangent frame `Y' = J Y`.
fn variational(
    rhs: &RhsBundle,
    t0: f64,
    y0: &[f64],
    t1: f64,
    interval: f64,
    opts: &IntegratorOptions,
) -> Result<(Vec<f64>, usize), AnalysisError> {
    let n = y0.len();
    let inner = rhs.clone();
    let augmented = RhsBundle::new(n + n * n, move |t, z, dz| {
        let (y, frame) = z.split_at(n);
        inner.eval_into(t, y, &mut dz[..n])?;
        let jac = inner.jacobian(t, y).ok_or_else(|| ProblemError::Unsupported("no Jacobian".into()))??;
        let frame = DMatrix::from_column_slice(n, n, frame);
        dz[n..].copy_from_slice((jac * frame).as_slice());
        Ok(())
    });
    let mut z: Vec<f64> = y0.to_vec();
    z.extend(DMatrix::<f64>::identity(n, n).as_slice());
    let mut sums = vec![0.0; n];
    let mut t = t0;
    let mut steps = 0;
    while t < t1 {
        let next = if t1 - t <= interval * (1.0 + 1e-12) { t1 } else { t + interval };
        let mut stepper = Dopri5::new(&augmented, t, &z, next, opts)?;
        while stepper.step()?.is_some() {}
        z = stepper.y().to_vec();
        let (q, logs) = signed_qr(DMatrix::from_column_slice(n, n, &z[n..]), next)?;
        for (s, l) in sums.iter_mut().zip(&logs) {
            *s += l;
        }
        z[n..].copy_from_slice(q.as_slice());
        t = next;
        steps += 1;
    }
    Ok((sums, steps))
}
