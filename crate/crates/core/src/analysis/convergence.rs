//! Observed order of a fixed-step method against an exact solution.

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::integrators::{integrate_fixed_with, FixedMethod};
use crate::problem::Problem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub order: f64,
    pub steps: Vec<usize>,
    pub step_sizes: Vec<f64>,
    /// Max-norm endpoint errors.
    pub errors: Vec<f64>,
}

/// Runs `method` with each step count of `ladder` and fits the order.
pub fn convergence_order(
    problem: &Problem,
    method: FixedMethod,
    ladder: &[usize],
) -> Result<ConvergenceResult, AnalysisError> {
    if !problem.has_exact_solution() {
        return Err(AnalysisError::NoExactSolution);
    }
    if ladder.len() < 3 || ladder.contains(&0) {
        return Err(AnalysisError::InvalidArgument("ladder needs at least 3 positive step counts".into()));
    }
    let ratio = ladder[1] as f64 / ladder[0] as f64;
    let geometric =
        ratio > 1.0 && ladder.windows(2).all(|w| ((w[1] as f64 / w[0] as f64) - ratio).abs() <= 1e-12 * ratio);
    if !geometric {
        return Err(AnalysisError::InvalidArgument("ladder must be an increasing geometric progression".into()));
    }
    let (t0, tf) = problem.time_span();
    let exact = problem.exact_solution(tf)?;
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 100.0 * f64::EPSILON * scale;
    let mut errors = Vec::with_capacity(ladder.len());
    let mut step_sizes = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let traj = integrate_fixed_with(problem, n, method, false)?;
        let error = traj.last_state().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if error <= floor {
            return Err(AnalysisError::ErrorFloorReached { steps: n, error, floor });
        }
        errors.push(error);
        step_sizes.push((tf - t0) / n as f64);
    }
    let xs: Vec<f64> = step_sizes.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ConvergenceResult { order: sxy / sxx, steps: ladder.to_vec(), step_sizes, errors })
}
