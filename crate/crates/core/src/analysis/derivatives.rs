//! Finite-difference oracles for Jacobians and Jacobian products.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::problem::Problem;

/// Random time in the problem's span.
fn sample_time(problem: &Problem, rng: &mut ChaCha8Rng) -> f64 {
    let (t0, tf) = problem.time_span();
    t0 + rng.gen::<f64>() * (tf - t0)
}

/// Jacobian by Ridders' extrapolation of central differences, column by
/// column, starting from the step `0.1 max(|y_j|, 1)` and shrinking by 1.4.
fn central_difference(problem: &Problem, t: f64, y: &[f64]) -> Result<DMatrix<f64>, AnalysisError> {
    const SHRINK: f64 = 1.4;
    const TABLE: usize = 10;
    const SAFE: f64 = 2.0;
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut difference = |j: usize, h: f64| -> Result<Vec<f64>, AnalysisError> {
        yp[j] = y[j] + h;
        let fp = problem.f(t, &yp)?;
        yp[j] = y[j] - h;
        let fm = problem.f(t, &yp)?;
        yp[j] = y[j];
        Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    for j in 0..n {
        let mut h = 0.1 * y[j].abs().max(1.0);
        let mut table: Vec<Vec<Vec<f64>>> = vec![vec![difference(j, h)?]];
        let mut best = table[0][0].clone();
        let mut best_err = f64::INFINITY;
        for i in 1..TABLE {
            h /= SHRINK;
            let mut row = vec![difference(j, h)?];
            let mut fac = SHRINK * SHRINK;
            for k in 1..=i {
                let prev = &table[i - 1][k - 1];
                let next: Vec<f64> = row[k - 1].iter().zip(prev).map(|(a, b)| (a * fac - b) / (fac - 1.0)).collect();
                fac *= SHRINK * SHRINK;
                let err = dist(&next, &row[k - 1]).max(dist(&next, prev));
                if err <= best_err {
                    best_err = err;
                    best = next.clone();
                }
                row.push(next);
            }
            let stalled = dist(&row[i], &table[i - 1][i - 1]) >= SAFE * best_err;
            table.push(row);
            if stalled {
                break;
            }
        }
        for i in 0..n {
            jac[(i, j)] = best[i];
        }
    }
    Ok(jac)
}

/// Largest row-wise relative difference `‖a_i − b_i‖∞ / ‖a_i‖∞`; rows that
/// vanish in both matrices count as exact.
fn worst_row_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        let diff = (a.row(i) - b.row(i)).amax();
        let scale = a.row(i).amax().max(b.row(i).amax());
        let err = if scale == 0.0 { 0.0 } else { diff / scale };
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    worst
}

/// Compares the analytic Jacobian with central differences at
/// `sample_count` seeded states from the family's sampling box and returns
/// the worst relative row error.
pub fn check_jacobian(problem: &Problem, sample_count: usize, seed: u64) -> Result<f64, AnalysisError> {
    if !problem.rhs().has_jacobian() {
        return Err(AnalysisError::NoJacobian);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count {
        let y = problem.sample_state(&mut rng);
        let t = sample_time(problem, &mut rng);
        let analytic = problem.rhs().jacobian(t, &y).ok_or(AnalysisError::NoJacobian)??;
        let numeric = central_difference(problem, t, &y)?;
        worst = worst.max(worst_row_error(&analytic, &numeric));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    /// Worst `‖Jv − (f(y+δv) − f(y−δv))/2δ‖∞ / ‖Jv‖∞`.
    pub jvp_error: f64,
    /// Worst `|⟨w, Jv⟩ − ⟨Jᵀw, v⟩| / (‖w‖ ‖Jv‖ + ‖Jᵀw‖ ‖v‖)`; zero when no
    /// adjoint product is available.
    pub adjoint_error: f64,
}

/// Checks Jacobian–vector products against directional differences and,
/// when available, the adjoint products against the inner-product identity.
pub fn check_products(problem: &Problem, sample_count: usize, seed: u64) -> Result<ProductCheck, AnalysisError> {
    let rhs = problem.rhs();
    if !rhs.has_jvp() {
        return Err(AnalysisError::NoJacobian);
    }
    let n = problem.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut out = ProductCheck { jvp_error: 0.0, adjoint_error: 0.0 };
    for _ in 0..sample_count {
        let y = problem.sample_state(&mut rng);
        let t = sample_time(problem, &mut rng);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jv = rhs.jvp(t, &y, &v).ok_or(AnalysisError::NoJacobian)??;
        let ymax = y.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let delta = f64::EPSILON.cbrt() * ymax / norm(&v).max(f64::MIN_POSITIVE) * (n as f64).sqrt();
        let yp: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + delta * b).collect();
        let ym: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - delta * b).collect();
        let (fp, fm) = (problem.f(t, &yp)?, problem.f(t, &ym)?);
        let scale = jv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = (0..n).fold(0.0f64, |m, i| m.max((jv[i] - (fp[i] - fm[i]) / (2.0 * delta)).abs()));
        if scale > 0.0 {
            out.jvp_error = out.jvp_error.max(diff / scale);
        }
        if let Some(jtw) = rhs.javp(t, &y, &w) {
            let jtw = jtw?;
            let denom = norm(&w) * norm(&jv) + norm(&jtw) * norm(&v);
            if denom > 0.0 {
                out.adjoint_error = out.adjoint_error.max((dot(&w, &jv) - dot(&jtw, &v)).abs() / denom);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ParamValue, Parameters};
    use crate::registry::{build_preset, canonical};

    #[test]
    fn linear_jacobian_is_exact_to_round_off() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 4.0, 0.25, -0.75]);
        let p = build_preset("linear", "Canonical", &Parameters::new().with("A", ParamValue::Matrix(a))).unwrap();
        let mut p = p;
        p.set_y0(vec![1.0; 3]).unwrap();
        assert!(check_jacobian(&p, 20, 7).unwrap() <= 1e-12);
    }

    #[test]
    fn lorenz63_and_brusselator() {
        for name in ["lorenz63", "brusselator"] {
            let err = check_jacobian(&canonical(name).unwrap(), 50, 1).unwrap();
            assert!(err <= 1e-6, "{name}: {err:e}");
        }
    }

    #[test]
    fn wrong_jacobian_is_detected() {
        let p = canonical("lorenz63").unwrap();
        let j = central_difference(&p, 0.0, p.y0()).unwrap();
        let mut bad = j.clone();
        bad[(1, 2)] += 1.0;
        assert!(worst_row_error(&bad, &j) > 1e-3);
        assert_eq!(worst_row_error(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn missing_jacobian() {
        let p = canonical("doublependulum").unwrap();
        assert_eq!(check_jacobian(&p, 1, 0).unwrap_err(), AnalysisError::NoJacobian);
    }

    #[test]
    fn products_of_small_pde_instances() {
        let o = Parameters::new().with("n", ParamValue::Scalar(8.0));
        let gs = build_preset("grayscott", "Canonical", &o).unwrap();
        let c = check_products(&gs, 5, 3).unwrap();
        assert!(c.jvp_error < 1e-6 && c.adjoint_error < 1e-12, "{c:?}");
        let o = Parameters::new().with("n", ParamValue::Scalar(15.0));
        let q = build_preset("qgso", "Canonical", &o).unwrap();
        let c = check_products(&q, 3, 3).unwrap();
        assert!(c.jvp_error < 1e-6 && c.adjoint_error < 1e-10, "{c:?}");
    }
}
