//! Lorenz '96: `x_i' = (x_{i+1} − x_{i−2}) x_{i−1} − x_i + F(t)` with cyclic
//! indices.
//!
//! Canonical: N = 40, F = 8, `x_i = 8` except `x_20 = 8.008` (1-based),
//! `t ∈ [0, 0.05]` (six hours of model time).

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, FunctionParam, ParamValue, ParameterSchema, Parameters, ScalarFn};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

#[derive(Clone)]
pub struct Lorenz96Params {
    pub n: usize,
    pub forcing: ScalarFn,
}

impl Lorenz96Params {
    pub fn constant(n: usize, forcing: f64) -> Self {
        Self { n, forcing: std::sync::Arc::new(move |_| forcing) }
    }

    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        let n = p.usize("N")?;
        let forcing: ScalarFn = match p.value("F")? {
            ParamValue::Scalar(x) => {
                let x = *x;
                std::sync::Arc::new(move |_| x)
            }
            ParamValue::Function(f) => f.scalar_fn().ok_or_else(|| ProblemError::Validation {
                field: "F".into(),
                constraint: Constraint::Function,
            })?,
            _ => return Err(ProblemError::Validation { field: "F".into(), constraint: Constraint::Function }),
        };
        Ok(Self { n, forcing })
    }
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

pub fn rhs(p: &Lorenz96Params, t: f64, x: &[f64], dx: &mut [f64]) {
    let n = x.len();
    let forcing = (p.forcing)(t);
    for i in 0..n {
        let ii = i as isize;
        let xp1 = x[wrap(ii + 1, n)];
        let xm1 = x[wrap(ii - 1, n)];
        let xm2 = x[wrap(ii - 2, n)];
        dx[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
    }
}

pub fn jacobian(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let ii = i as isize;
        let (ip1, im1, im2) = (wrap(ii + 1, n), wrap(ii - 1, n), wrap(ii - 2, n));
        j[(i, ip1)] += x[im1];
        j[(i, im2)] -= x[im1];
        j[(i, im1)] += x[ip1] - x[im2];
        j[(i, i)] -= 1.0;
    }
    j
}

pub fn jvp(x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let ii = i as isize;
        let (ip1, im1, im2) = (wrap(ii + 1, n), wrap(ii - 1, n), wrap(ii - 2, n));
        out[i] = (v[ip1] - v[im2]) * x[im1] + (x[ip1] - x[im2]) * v[im1] - v[i];
    }
}

pub fn javp(x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = x.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        let ii = i as isize;
        let (ip1, im1, im2) = (wrap(ii + 1, n), wrap(ii - 1, n), wrap(ii - 2, n));
        out[ip1] += x[im1] * v[i];
        out[im2] -= x[im1] * v[i];
        out[im1] += (x[ip1] - x[im2]) * v[i];
        out[i] -= v[i];
    }
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("N", &[Scalar, Integer, AtLeast(4.0)], "number of variables")
        .field("F", &[Function, Finite], "forcing F(t); a scalar is a constant forcing")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = Lorenz96Params::from_parameters(params)?;
    let n = p.n;
    let pf = p.clone();
    Ok(RhsBundle::infallible(n, move |t, y, dy| rhs(&pf, t, y, dy))
        .with_jacobian(|_, y| Ok(jacobian(y)))
        .with_jvp(|_, y, v, out| {
            jvp(y, v, out);
            Ok(())
        })
        .with_javp(|_, y, v, out| {
            javp(y, v, out);
            Ok(())
        }))
}

/// Each component drawn from [-10, 15], the typical range on the attractor.
fn sample(problem: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &vec![(-10.0, 15.0); problem.num_vars()])
}

/// All 8, with the component at 1-based index ceil(N/2) raised to 8.008
/// (index 20 for N = 40).
pub fn canonical_y0(n: usize) -> Vec<f64> {
    let mut y = vec![8.0; n];
    y[n.div_ceil(2) - 1] = 8.008;
    y
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new().with("N", ParamValue::Scalar(40.0)).with("F", ParamValue::Scalar(8.0));
    PresetDefaults::new(params, (0.0, 0.05), |p| Ok(canonical_y0(p.usize("N")?)))
}

/// Sinusoidally modulated forcing `F(t) = 8 + sin(2πt/0.2)` (daily cycle).
fn seasonal() -> PresetDefaults {
    let forcing = FunctionParam::scalar("8 + sin(10*pi*t)", |t| 8.0 + (10.0 * std::f64::consts::PI * t).sin());
    let params = Parameters::new().with("N", ParamValue::Scalar(40.0)).with("F", ParamValue::Function(forcing));
    PresetDefaults::new(params, (0.0, 0.05), |p| Ok(canonical_y0(p.usize("N")?)))
}

pub(crate) static FAMILY: Family = Family {
    name: "lorenz96",
    title: "Lorenz '96",
    size_label: "n (40)",
    description: "cyclic N-variable chaotic model of an atmospheric latitude circle",
    schema,
    build,
    sample_state: sample,
    presets: &[
        Preset {
            name: "Canonical",
            description: "N=40, F=8, x_20 perturbed to 8.008, t in [0,0.05]",
            defaults: canonical,
        },
        Preset {
            name: "Seasonal",
            description: "N=40, forcing F(t)=8+sin(10 pi t), t in [0,0.05]",
            defaults: seasonal,
        },
    ],
};
