//! Boussinesq paradigm equation `u_tt = Δ[u + β1 u_tt − β2 Δu + α f(u)]`
//! with zero Dirichlet boundaries, in first-order form `y = (u, u_t)`:
//! `u' = u_t`, `u_t' = M⁻¹ Δ(u − β2 Δu + α f(u))` with `M = I − β1 Δ`.
//!
//! The default geometry is a 1D interval `[−L/2, L/2]`; a square 2D variant
//! is selected with `geometry = "2d"`. `M` is factored once with a banded
//! Cholesky decomposition.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, FunctionParam, ParamValue, ParameterSchema, Parameters, ScalarFn};
use crate::pde::operators::{laplacian_1d, laplacian_2d};
use crate::pde::{BandedCholesky, Boundary, CsrMatrix, Grid2D};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

/// Largest state size for which a dense Jacobian is assembled.
pub const DENSE_JACOBIAN_MAX_VARS: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Line,
    Square,
}

pub struct Bpe {
    alpha: f64,
    beta2: f64,
    nonlinearity: ScalarFn,
    derivative: ScalarFn,
    laplacian: CsrMatrix,
    mass: BandedCholesky,
    m: usize,
}

impl Bpe {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        let n = p.usize("n")?;
        let length = p.scalar("length")?;
        let beta1 = p.scalar("beta1")?;
        let laplacian = match geometry(p)? {
            Geometry::Line => laplacian_1d(n, length / (n + 1) as f64, 2, Boundary::Dirichlet),
            Geometry::Square => laplacian_2d(&Grid2D::dirichlet(n, length), 2),
        };
        let m = laplacian.nrows();
        let mass = BandedCholesky::factor(&CsrMatrix::identity(m).add_scaled(1.0, &laplacian, -beta1))?;
        let bad = || ProblemError::Validation { field: "nonlinearity".into(), constraint: Constraint::ConsistentDerivative };
        let ParamValue::Function(f) = p.value("nonlinearity")? else {
            return Err(bad());
        };
        Ok(Self {
            alpha: p.scalar("alpha")?,
            beta2: p.scalar("beta2")?,
            nonlinearity: f.scalar_fn().ok_or_else(bad)?,
            derivative: f.derivative_fn().ok_or_else(bad)?,
            laplacian,
            mass,
            m,
        })
    }

    pub fn field_len(&self) -> usize {
        self.m
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    /// Solves `M x = b`.
    pub fn solve_mass(&self, b: &[f64]) -> Vec<f64> {
        self.mass.solve(b)
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let (u, ut) = y.split_at(self.m);
        let lu = self.laplacian.mul_vec(u);
        let s: Vec<f64> = (0..self.m).map(|i| u[i] - self.beta2 * lu[i] + self.alpha * (self.nonlinearity)(u[i])).collect();
        let mut w = self.laplacian.mul_vec(&s);
        self.mass.solve_in_place(&mut w);
        dy[..self.m].copy_from_slice(ut);
        dy[self.m..].copy_from_slice(&w);
    }

    /// `K v = v − β2 Δv + α f'(u) v`.
    fn k_apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let lv = self.laplacian.mul_vec(v);
        (0..self.m).map(|i| v[i] - self.beta2 * lv[i] + self.alpha * (self.derivative)(u[i]) * v[i]).collect()
    }

    pub fn jvp(&self, y: &[f64], v: &[f64], out: &mut [f64]) {
        let (v1, v2) = v.split_at(self.m);
        let mut w = self.laplacian.mul_vec(&self.k_apply(&y[..self.m], v1));
        self.mass.solve_in_place(&mut w);
        out[..self.m].copy_from_slice(v2);
        out[self.m..].copy_from_slice(&w);
    }

    /// `Jᵀ = [[0, K Δ M⁻¹], [I, 0]]`, using the symmetry of `Δ` and `M`.
    pub fn javp(&self, y: &[f64], w: &[f64], out: &mut [f64]) {
        let (w1, w2) = w.split_at(self.m);
        let z = self.laplacian.mul_vec(&self.mass.solve(w2));
        let top = self.k_apply(&y[..self.m], &z);
        out[..self.m].copy_from_slice(&top);
        out[self.m..].copy_from_slice(w1);
    }

    pub fn dense_jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let n = 2 * self.m;
        let mut j = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.jvp(y, &e, &mut col);
            j.column_mut(c).copy_from_slice(&col);
            e[c] = 0.0;
        }
        j
    }
}

fn geometry(p: &Parameters) -> Result<Geometry, ProblemError> {
    match p.text("geometry")? {
        "1d" => Ok(Geometry::Line),
        "2d" => Ok(Geometry::Square),
        _ => Err(ProblemError::Validation { field: "geometry".into(), constraint: Constraint::OneOf(&["1d", "2d"]) }),
    }
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("alpha", &[Scalar, Finite], "nonlinearity coefficient")
        .field("beta1", &[Scalar, Finite, Positive], "dispersion coefficient of the mass operator I - beta1 Δ")
        .field("beta2", &[Scalar, Finite, Nonnegative], "coefficient of the fourth-order term")
        .field("n", &[Scalar, Integer, AtLeast(3.0)], "interior points per side")
        .field("length", &[Scalar, Finite, Positive], "side length of the domain")
        .field("geometry", &[Text, OneOf(&["1d", "2d"])], "1d interval or 2d square")
        .field("nonlinearity", &[Function, ConsistentDerivative], "f(u) with derivative f'(u)")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let model = Arc::new(Bpe::from_parameters(params)?);
    let n = 2 * model.m;
    let (mf, mj, ma) = (model.clone(), model.clone(), model.clone());
    let mut bundle = RhsBundle::infallible(n, move |_, y, dy| mf.rhs(y, dy))
        .with_jvp(move |_, y, v, out| {
            mj.jvp(y, v, out);
            Ok(())
        })
        .with_javp(move |_, y, w, out| {
            ma.javp(y, w, out);
            Ok(())
        });
    if n <= DENSE_JACOBIAN_MAX_VARS {
        bundle = bundle.with_jacobian(move |_, y| Ok(model.dense_jacobian(y)));
    }
    Ok(bundle)
}

/// Coordinates of the field points, centred on the origin.
pub fn coordinates(p: &Parameters) -> Result<Vec<Vec<f64>>, ProblemError> {
    let n = p.usize("n")?;
    let length = p.scalar("length")?;
    let h = length / (n + 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -0.5 * length + (i + 1) as f64 * h).collect();
    Ok(match geometry(p)? {
        Geometry::Line => axis.iter().map(|&x| vec![x]).collect(),
        Geometry::Square => (0..n * n).map(|i| vec![axis[i % n], axis[i / n]]).collect(),
    })
}

/// Gaussian bump `u = 0.5 exp(−|x|²)` at rest.
fn gaussian_bump(p: &Parameters) -> Result<Vec<f64>, ProblemError> {
    let pts = coordinates(p)?;
    let mut y: Vec<f64> = pts.iter().map(|x| 0.5 * (-x.iter().map(|c| c * c).sum::<f64>()).exp()).collect();
    y.extend(vec![0.0; pts.len()]);
    Ok(y)
}

/// Displacements and velocities in [-1, 1].
fn sample(problem: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &vec![(-1.0, 1.0); problem.num_vars()])
}

pub fn quadratic() -> FunctionParam {
    FunctionParam::differentiable("u^2", |u| u * u, |u| 2.0 * u)
}

fn defaults(geometry: &str, n: usize) -> PresetDefaults {
    let params = Parameters::new()
        .with("alpha", ParamValue::Scalar(3.0))
        .with("beta1", ParamValue::Scalar(1.5))
        .with("beta2", ParamValue::Scalar(0.5))
        .with("n", ParamValue::Scalar(n as f64))
        .with("length", ParamValue::Scalar(40.0))
        .with("geometry", ParamValue::Text(geometry.into()))
        .with("nonlinearity", ParamValue::Function(quadratic()));
    PresetDefaults::new(params, (0.0, 20.0), gaussian_bump)
}

pub(crate) static FAMILY: Family = Family {
    name: "bpe",
    title: "Boussinesq Paradigm Equation",
    size_label: "2n (254)",
    description: "regularized Boussinesq wave equation, Dirichlet finite differences",
    schema,
    build,
    sample_state: sample,
    presets: &[
        Preset {
            name: "Canonical",
            description: "1D, 127 points on [-20,20], alpha=3, beta1=1.5, beta2=0.5, f(u)=u^2, Gaussian bump, t in [0,20]",
            defaults: || defaults("1d", 127),
        },
        Preset {
            name: "Square",
            description: "2D, 31x31 points on [-20,20]^2, otherwise as Canonical",
            defaults: || defaults("2d", 31),
        },
    ],
};
