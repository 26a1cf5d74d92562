//! Lorenz '63: `x' = σ(y − x)`, `y' = x(ρ − z) − y`, `z' = xy − βz`.
//!
//! Canonical: σ = 10, ρ = 28, β = 8/3, `y0 = (0, 1, 0)` (outside the trapping
//! region), `t ∈ [0, 60]`.

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, ParamValue, ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::{check_len, sample_box};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }
}

impl Lorenz63Params {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        Ok(Self { sigma: p.scalar("sigma")?, rho: p.scalar("rho")?, beta: p.scalar("beta")? })
    }

    pub fn to_parameters(self) -> Parameters {
        Parameters::new()
            .with("sigma", ParamValue::Scalar(self.sigma))
            .with("rho", ParamValue::Scalar(self.rho))
            .with("beta", ParamValue::Scalar(self.beta))
    }
}

pub fn rhs(p: &Lorenz63Params, y: &[f64], dy: &mut [f64]) {
    let (x, yy, z) = (y[0], y[1], y[2]);
    dy[0] = p.sigma * (yy - x);
    dy[1] = x * (p.rho - z) - yy;
    dy[2] = x * yy - p.beta * z;
}

pub fn jacobian(p: &Lorenz63Params, y: &[f64]) -> DMatrix<f64> {
    let (x, yy, z) = (y[0], y[1], y[2]);
    DMatrix::from_row_slice(3, 3, &[-p.sigma, p.sigma, 0.0, p.rho - z, -1.0, -x, yy, x, -p.beta])
}

pub fn jvp(p: &Lorenz63Params, y: &[f64], v: &[f64], out: &mut [f64]) {
    let (x, yy, z) = (y[0], y[1], y[2]);
    out[0] = p.sigma * (v[1] - v[0]);
    out[1] = (p.rho - z) * v[0] - v[1] - x * v[2];
    out[2] = yy * v[0] + x * v[1] - p.beta * v[2];
}

pub fn javp(p: &Lorenz63Params, y: &[f64], v: &[f64], out: &mut [f64]) {
    let (x, yy, z) = (y[0], y[1], y[2]);
    out[0] = -p.sigma * v[0] + (p.rho - z) * v[1] + yy * v[2];
    out[1] = p.sigma * v[0] - v[1] + x * v[2];
    out[2] = -x * v[1] - p.beta * v[2];
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("sigma", &[Scalar, Finite, Nonnegative], "Prandtl number")
        .field("rho", &[Scalar, Finite, Nonnegative], "Rayleigh number")
        .field("beta", &[Scalar, Finite, Nonnegative], "geometric factor")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = Lorenz63Params::from_parameters(params)?;
    Ok(RhsBundle::infallible(3, move |_, y, dy| rhs(&p, y, dy))
        .with_jacobian(move |_, y| {
            check_len(3, y.len())?;
            Ok(jacobian(&p, y))
        })
        .with_jvp(move |_, y, v, out| {
            jvp(&p, y, v, out);
            Ok(())
        })
        .with_javp(move |_, y, v, out| {
            javp(&p, y, v, out);
            Ok(())
        }))
}

/// Box enclosing the attractor: x ∈ [-20, 20], y ∈ [-30, 30], z ∈ [0, 50].
fn sample(_: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &[(-20.0, 20.0), (-30.0, 30.0), (0.0, 50.0)])
}

fn canonical() -> PresetDefaults {
    PresetDefaults::new(Lorenz63Params::default().to_parameters(), (0.0, 60.0), |_| Ok(vec![0.0, 1.0, 0.0]))
}

pub(crate) static FAMILY: Family = Family {
    name: "lorenz63",
    title: "Lorenz '63",
    size_label: "3",
    description: "three-variable chaotic convection model",
    schema,
    build,
    sample_state: sample,
    presets: &[Preset {
        name: "Canonical",
        description: "sigma=10, rho=28, beta=8/3, y0=(0,1,0), t in [0,60]",
        defaults: canonical,
    }],
};
