//! Gray–Scott reaction–diffusion on a periodic square:
//! `u' = ε1 Δu − u v² + f(1 − u)`, `v' = ε2 Δv + u v² − (f + k) v`.
//!
//! The state is `(u, v)` concatenated, each field flattened row-major. The
//! right-hand side is split into `diffusion` and `reaction` partitions and
//! evaluated as their sum. A dense Jacobian is offered only up to
//! [`DENSE_JACOBIAN_MAX_N`] points per side; products are always available.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ProblemError;
use crate::params::{Constraint, ParamValue, ParameterSchema, Parameters};
use crate::pde::operators::laplacian_2d;
use crate::pde::{CsrMatrix, Grid2D};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

pub const DENSE_JACOBIAN_MAX_N: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrayScottParams {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub f: f64,
    pub k: f64,
    pub n: usize,
    pub length: f64,
}

impl GrayScottParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        Ok(Self {
            epsilon1: p.scalar("epsilon1")?,
            epsilon2: p.scalar("epsilon2")?,
            f: p.scalar("f")?,
            k: p.scalar("k")?,
            n: p.usize("n")?,
            length: p.scalar("length")?,
        })
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::periodic(self.n, self.length)
    }
}

pub struct GrayScott {
    p: GrayScottParams,
    laplacian: CsrMatrix,
    m: usize,
}

impl GrayScott {
    pub fn new(p: GrayScottParams) -> Self {
        let grid = p.grid();
        Self { p, laplacian: laplacian_2d(&grid, 2), m: grid.len() }
    }

    pub fn diffusion(&self, y: &[f64], dy: &mut [f64]) {
        let (u, v) = y.split_at(self.m);
        let (du, dv) = dy.split_at_mut(self.m);
        self.laplacian.mul_vec_into(u, du);
        self.laplacian.mul_vec_into(v, dv);
        du.iter_mut().for_each(|x| *x *= self.p.epsilon1);
        dv.iter_mut().for_each(|x| *x *= self.p.epsilon2);
    }

    pub fn reaction(&self, y: &[f64], dy: &mut [f64]) {
        let GrayScottParams { f, k, .. } = self.p;
        let (u, v) = y.split_at(self.m);
        for i in 0..self.m {
            let uvv = u[i] * v[i] * v[i];
            dy[i] = -uvv + f * (1.0 - u[i]);
            dy[self.m + i] = uvv - (f + k) * v[i];
        }
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let mut reac = vec![0.0; 2 * self.m];
        self.diffusion(y, dy);
        self.reaction(y, &mut reac);
        dy.iter_mut().zip(&reac).for_each(|(d, r)| *d += r);
    }

    fn reaction_jvp(&self, y: &[f64], w: &[f64], out: &mut [f64], transpose: bool) {
        let GrayScottParams { f, k, .. } = self.p;
        let m = self.m;
        for i in 0..m {
            let (u, v) = (y[i], y[m + i]);
            // pointwise block [[a, b], [c, d]]
            let (a, b, c, d) = (-v * v - f, -2.0 * u * v, v * v, 2.0 * u * v - (f + k));
            let (wu, wv) = (w[i], w[m + i]);
            if transpose {
                out[i] += a * wu + c * wv;
                out[m + i] += b * wu + d * wv;
            } else {
                out[i] += a * wu + b * wv;
                out[m + i] += c * wu + d * wv;
            }
        }
    }

    /// `J v`; the periodic Laplacian is symmetric, so `transpose` only
    /// affects the pointwise reaction block.
    pub fn product(&self, y: &[f64], v: &[f64], out: &mut [f64], transpose: bool) {
        self.diffusion(v, out);
        self.reaction_jvp(y, v, out, transpose);
    }

    pub fn dense_diffusion_jacobian(&self) -> DMatrix<f64> {
        let m = self.m;
        let lap = self.laplacian.to_dense();
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        j.view_mut((0, 0), (m, m)).copy_from(&(&lap * self.p.epsilon1));
        j.view_mut((m, m), (m, m)).copy_from(&(&lap * self.p.epsilon2));
        j
    }

    pub fn dense_reaction_jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let GrayScottParams { f, k, .. } = self.p;
        let m = self.m;
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            let (u, v) = (y[i], y[m + i]);
            j[(i, i)] = -v * v - f;
            j[(i, m + i)] = -2.0 * u * v;
            j[(m + i, i)] = v * v;
            j[(m + i, m + i)] = 2.0 * u * v - (f + k);
        }
        j
    }
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("epsilon1", &[Scalar, Finite, Nonnegative], "diffusion rate of u")
        .field("epsilon2", &[Scalar, Finite, Nonnegative], "diffusion rate of v")
        .field("f", &[Scalar, Finite, Nonnegative], "feed rate")
        .field("k", &[Scalar, Finite, Nonnegative], "kill rate")
        .field("n", &[Scalar, Integer, AtLeast(3.0)], "grid points per side")
        .field("length", &[Scalar, Finite, Positive], "side length of the periodic square")
        .field("seed", &[Scalar, Integer, Nonnegative], "seed of the initial perturbation")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = GrayScottParams::from_parameters(params)?;
    let model = Arc::new(GrayScott::new(p));
    let n = 2 * model.m;
    let dense = p.n <= DENSE_JACOBIAN_MAX_N;

    let md = model.clone();
    let mut diffusion = RhsBundle::infallible(n, move |_, y, dy| md.diffusion(y, dy));
    let mr = model.clone();
    let mut reaction = RhsBundle::infallible(n, move |_, y, dy| mr.reaction(y, dy));
    if dense {
        let jd = model.dense_diffusion_jacobian();
        diffusion = diffusion.with_jacobian(move |_, _| Ok(jd.clone())).with_products_from_jacobian();
        let mr = model.clone();
        reaction = reaction.with_jacobian(move |_, y| Ok(mr.dense_reaction_jacobian(y))).with_products_from_jacobian();
    }

    let (mf, mj, ma) = (model.clone(), model.clone(), model.clone());
    let mut bundle = RhsBundle::infallible(n, move |_, y, dy| mf.rhs(y, dy))
        .with_jvp(move |_, y, v, out| {
            mj.product(y, v, out, false);
            Ok(())
        })
        .with_javp(move |_, y, v, out| {
            ma.product(y, v, out, true);
            Ok(())
        })
        .with_partition("diffusion", diffusion)
        .with_partition("reaction", reaction);
    if dense {
        let jd = model.dense_diffusion_jacobian();
        bundle = bundle.with_jacobian(move |_, y| Ok(&jd + model.dense_reaction_jacobian(y)));
    }
    Ok(bundle)
}

/// `u = 1, v = 0` except a centred square of side `length / 5` where
/// `u = 0.5, v = 0.25`, all multiplied by seeded noise `1 ± 0.01`.
pub fn initial_condition(p: &GrayScottParams, seed: u64) -> Vec<f64> {
    let grid = p.grid();
    let m = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (0.4 * p.length, 0.6 * p.length);
    let mut y = vec![0.0; 2 * m];
    for i in 0..m {
        let (x, yy) = grid.coords(i).unwrap();
        let inside = (lo..hi).contains(&x) && (lo..hi).contains(&yy);
        let (u, v) = if inside { (0.5, 0.25) } else { (1.0, 0.0) };
        y[i] = u * (1.0 + rng.gen_range(-0.01..0.01));
        y[m + i] = v * (1.0 + rng.gen_range(-0.01..0.01));
    }
    y
}

/// Each concentration in [0, 1].
fn sample(problem: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &vec![(0.0, 1.0); problem.num_vars()])
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new()
        .with("epsilon1", ParamValue::Scalar(2e-5))
        .with("epsilon2", ParamValue::Scalar(1e-5))
        .with("f", ParamValue::Scalar(0.04))
        .with("k", ParamValue::Scalar(0.06))
        .with("n", ParamValue::Scalar(128.0))
        .with("length", ParamValue::Scalar(2.5))
        .with("seed", ParamValue::Scalar(1.0));
    PresetDefaults::new(params, (0.0, 500.0), |p| {
        Ok(initial_condition(&GrayScottParams::from_parameters(p)?, p.usize("seed")? as u64))
    })
}

pub(crate) static FAMILY: Family = Family {
    name: "grayscott",
    title: "Gray-Scott",
    size_label: "2n^2 (32768)",
    description: "two-species reaction-diffusion on a periodic square (second-order finite differences)",
    schema,
    build,
    sample_state: sample,
    presets: &[Preset {
        name: "Canonical",
        description: "128x128 periodic grid on [0,2.5]^2, eps1=2e-5, eps2=1e-5, f=0.04, k=0.06, t in [0,500]",
        defaults: canonical,
    }],
};
