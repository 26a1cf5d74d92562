//! Linear problem `y' = A(t) y`; the scalar constant case is the Dahlquist
//! test equation.
//!
//! The exact solution is `exp(∫ A) y0`. It is offered for constant `A` and
//! for time-dependent `A(t)` that stays diagonal (so that values at different
//! times commute); other cases report `Unsupported`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, FunctionParam, MatrixFn, ParamValue, ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

#[derive(Clone)]
pub enum LinearParams {
    Constant(DMatrix<f64>),
    TimeDependent(MatrixFn),
}

impl LinearParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        match p.value("A")? {
            ParamValue::Matrix(m) => Ok(Self::Constant(m.clone())),
            ParamValue::Function(f) => f
                .matrix_fn()
                .map(Self::TimeDependent)
                .ok_or_else(|| ProblemError::Validation { field: "A".into(), constraint: Constraint::Matrix }),
            _ => Err(ProblemError::Validation { field: "A".into(), constraint: Constraint::Matrix }),
        }
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(a) => a.clone(),
            Self::TimeDependent(f) => f(t),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(a) => a.nrows(),
            Self::TimeDependent(f) => f(0.0).nrows(),
        }
    }
}

pub fn rhs(a: &DMatrix<f64>, y: &[f64], dy: &mut [f64]) {
    let prod = a * DVector::from_column_slice(y);
    dy.copy_from_slice(prod.as_slice());
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] == 0.0))
}

/// Exact solution at `t` from `(t0, y0)`.
pub fn exact(params: &LinearParams, t0: f64, y0: &[f64], t: f64) -> Result<Vec<f64>, ProblemError> {
    let n = params.dim();
    super::check_len(n, y0.len())?;
    match params {
        LinearParams::Constant(a) if is_diagonal(a) => {
            Ok((0..n).map(|i| (a[(i, i)] * (t - t0)).exp() * y0[i]).collect())
        }
        LinearParams::Constant(a) => {
            let propagator = (a * (t - t0)).exp();
            Ok((propagator * DVector::from_column_slice(y0)).as_slice().to_vec())
        }
        LinearParams::TimeDependent(f) => {
            // commutation is only guaranteed when A(t) stays diagonal
            let probes = 9;
            for k in 0..probes {
                let s = t0 + (t - t0) * k as f64 / (probes - 1) as f64;
                if !is_diagonal(&f(s)) {
                    return Err(ProblemError::Unsupported(
                        "exact solution requires pairwise-commuting (diagonal) A(t)".into(),
                    ));
                }
            }
            Ok((0..n)
                .map(|i| {
                    let integral = adaptive_simpson(&|s| f(s)[(i, i)], t0, t, 1e-13);
                    integral.exp() * y0[i]
                })
                .collect())
        }
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new().field("A", &[Matrix, Square, Finite], "coefficient matrix, constant or A(t)")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = LinearParams::from_parameters(params)?;
    let n = p.dim();
    let bundle = match p.clone() {
        LinearParams::Constant(a) => {
            let a_f = a.clone();
            RhsBundle::infallible(n, move |_, y, dy| rhs(&a_f, y, dy)).with_jacobian(move |_, _| Ok(a.clone()))
        }
        LinearParams::TimeDependent(f) => {
            let f_rhs = f.clone();
            RhsBundle::infallible(n, move |t, y, dy| rhs(&f_rhs(t), y, dy)).with_jacobian(move |t, _| Ok(f(t)))
        }
    };
    let p_exact = Arc::new(p);
    Ok(bundle.with_products_from_jacobian().with_exact(move |t0, y0, t| exact(&p_exact, t0, y0, t)))
}

/// Components in [-2, 2].
fn sample(problem: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &vec![(-2.0, 2.0); problem.num_vars()])
}

fn ones(p: &Parameters) -> Result<Vec<f64>, ProblemError> {
    Ok(vec![1.0; LinearParams::from_parameters(p)?.dim()])
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new().with("A", ParamValue::Matrix(DMatrix::from_element(1, 1, -1.0)));
    PresetDefaults::new(params, (0.0, 1.0), ones)
}

fn diagonal() -> PresetDefaults {
    let params = Parameters::new().with("A", ParamValue::Matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]))));
    PresetDefaults::new(params, (0.0, 1.0), ones)
}

fn rotation() -> PresetDefaults {
    let params = Parameters::new().with("A", ParamValue::Matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])));
    PresetDefaults::new(params, (0.0, 2.0 * std::f64::consts::PI), |_| Ok(vec![1.0, 0.0]))
}

fn nonautonomous() -> PresetDefaults {
    let a = FunctionParam::matrix("diag(cos t, -2t)", |t| {
        DMatrix::from_diagonal(&DVector::from_vec(vec![t.cos(), -2.0 * t]))
    });
    let params = Parameters::new().with("A", ParamValue::Function(a));
    PresetDefaults::new(params, (0.0, 2.0), ones)
}

pub(crate) static FAMILY: Family = Family {
    name: "linear",
    title: "Linear",
    size_label: "n (1)",
    description: "linear first-order system y' = A(t) y with exact solution",
    schema,
    build,
    sample_state: sample,
    presets: &[
        Preset { name: "Canonical", description: "Dahlquist y' = -y, y0=1, t in [0,1]", defaults: canonical },
        Preset { name: "Diagonal", description: "A=diag(-1,-2), y0=(1,1), t in [0,1]", defaults: diagonal },
        Preset { name: "Rotation", description: "A=[[0,1],[-1,0]], y0=(1,0), t in [0,2 pi]", defaults: rotation },
        Preset {
            name: "Nonautonomous",
            description: "A(t)=diag(cos t, -2t), y0=(1,1), t in [0,2]",
            defaults: nonautonomous,
        },
    ],
};
