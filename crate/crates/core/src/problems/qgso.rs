//! Quasi-geostrophic single-layer ocean model (QGSO) on the unit square,
//! integrated in the stream function `ψ` with zero Dirichlet boundaries.
//!
//! With `q = Δψ − Fψ`, the potential vorticity tendency is
//! `q' = −ψ_x − ε J(ψ, q) − A Δ³ψ + 2π sin(2πy)` and the state derivative
//! follows from one Helmholtz solve `(Δ − F) ψ' = q'`. `J` is the Arakawa
//! Jacobian; `ψ_x` and `Δ` use central differences of order `p`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ProblemError;
use crate::integrators::{integrate_adaptive, IntegratorOptions, Record};
use crate::params::{Constraint, ParamValue, ParameterSchema, Parameters};
use crate::pde::arakawa;
use crate::pde::helmholtz::{Helmholtz, LinearSolverKind};
use crate::pde::operators::dx_2d;
use crate::pde::{CsrMatrix, Grid2D};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::{LinearOperator, RhsBundle};

use super::sample_box;

/// Amplitude of the random initial stream function.
pub const IC_AMPLITUDE: f64 = 1e-3;
/// Sine modes per direction in the random initial stream function.
pub const IC_MODES: usize = 4;
/// Grid size on which the GC initial states are spun up.
pub const SPINUP_GRID: usize = 63;
/// Length of the spin-up from the random stream function to the GC initial state.
pub const SPINUP_TIME: f64 = 20_000.0;

#[derive(Clone, Debug, PartialEq)]
pub struct QgsoParams {
    pub f: f64,
    pub epsilon: f64,
    pub a: f64,
    pub n: usize,
    pub order: usize,
    pub solver: LinearSolverKind,
    pub tol: f64,
}

impl QgsoParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        let name = p.text("linearsolver")?;
        let solver = LinearSolverKind::parse(name).ok_or_else(|| ProblemError::Validation {
            field: "linearsolver".into(),
            constraint: Constraint::OneOf(LinearSolverKind::NAMES),
        })?;
        Ok(Self {
            f: p.scalar("F")?,
            epsilon: p.scalar("epsilon")?,
            a: p.scalar("A")?,
            n: p.usize("n")?,
            order: p.usize("order")?,
            solver,
            tol: p.scalar("linearsolvertol")?,
        })
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::dirichlet(self.n, 1.0)
    }
}

/// Discrete QGSO operators; built once per parameter set.
pub struct Qgso {
    params: QgsoParams,
    grid: Grid2D,
    helmholtz: Helmholtz,
    dx: CsrMatrix,
    dx_t: CsrMatrix,
    laplacian_cubed: CsrMatrix,
    forcing: Vec<f64>,
}

impl Qgso {
    pub fn new(params: QgsoParams) -> Result<Self, ProblemError> {
        let grid = params.grid();
        let helmholtz = Helmholtz::new(grid, params.f, params.order, params.solver, params.tol)?;
        let lap = helmholtz.laplacian();
        let laplacian_cubed = lap.matmul(lap).matmul(lap);
        let dx = dx_2d(&grid, params.order);
        let dx_t = dx.transpose();
        let two_pi = 2.0 * std::f64::consts::PI;
        let forcing = (0..grid.len()).map(|i| two_pi * (two_pi * grid.coords(i).unwrap().1).sin()).collect();
        Ok(Self { params, grid, helmholtz, dx, dx_t, laplacian_cubed, forcing })
    }

    pub fn params(&self) -> &QgsoParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn helmholtz(&self) -> &Helmholtz {
        &self.helmholtz
    }

    /// Linear part of the tendency, `−Dx v − A Δ³ v`.
    fn linear_tendency(&self, v: &[f64]) -> Vec<f64> {
        let dxv = self.dx.mul_vec(v);
        let l3v = self.laplacian_cubed.mul_vec(v);
        dxv.iter().zip(&l3v).map(|(d, l)| -d - self.params.a * l).collect()
    }

    /// Adjoint of [`Self::linear_tendency`].
    fn linear_tendency_adjoint(&self, u: &[f64]) -> Vec<f64> {
        let dxu = self.dx_t.mul_vec(u);
        let l3u = self.laplacian_cubed.mul_vec(u);
        dxu.iter().zip(&l3u).map(|(d, l)| -d - self.params.a * l).collect()
    }

    /// Potential vorticity tendency `q'` at `ψ`.
    pub fn vorticity_tendency(&self, psi: &[f64]) -> Vec<f64> {
        let q = self.helmholtz.apply(psi);
        let jac = arakawa::jacobian(&self.grid, psi, &q);
        let mut dq = self.linear_tendency(psi);
        for i in 0..dq.len() {
            dq[i] += -self.params.epsilon * jac[i] + self.forcing[i];
        }
        dq
    }

    pub fn rhs(&self, psi: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        let dpsi = self.helmholtz.solve(&self.vorticity_tendency(psi))?;
        out.copy_from_slice(&dpsi);
        Ok(())
    }

    pub fn jvp(&self, psi: &[f64], v: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        let q = self.helmholtz.apply(psi);
        let hv = self.helmholtz.apply(v);
        let j1 = arakawa::jacobian(&self.grid, v, &q);
        let j2 = arakawa::jacobian(&self.grid, psi, &hv);
        let mut g = self.linear_tendency(v);
        for i in 0..g.len() {
            g[i] -= self.params.epsilon * (j1[i] + j2[i]);
        }
        out.copy_from_slice(&self.helmholtz.solve(&g)?);
        Ok(())
    }

    pub fn javp(&self, psi: &[f64], w: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        // H = Δ − F is symmetric, so H^-T w = H^-1 w
        let u = self.helmholtz.solve(w)?;
        let q = self.helmholtz.apply(psi);
        // J(v, q) = −J(q, v); J(ψ, H v) composes with H on the right
        let a1 = arakawa::jacobian_adjoint_second(&self.grid, &q, &u);
        let a2 = self.helmholtz.apply(&arakawa::jacobian_adjoint_second(&self.grid, psi, &u));
        let lin = self.linear_tendency_adjoint(&u);
        for i in 0..out.len() {
            out[i] = lin[i] - self.params.epsilon * (a2[i] - a1[i]);
        }
        Ok(())
    }
}

/// Linear-terms-only Jacobian `v ↦ (Δ − F)⁻¹(−Dx v − A Δ³ v)`; it omits
/// the linearization of the ε-weighted Arakawa term and is approximate.
pub struct QgsoApproxJacobian(Arc<Qgso>);

impl LinearOperator for QgsoApproxJacobian {
    fn dim(&self) -> usize {
        self.0.grid.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        out.copy_from_slice(&self.0.helmholtz.solve(&self.0.linear_tendency(v))?);
        Ok(())
    }

    fn apply_transpose(&self, w: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        let u = self.0.helmholtz.solve(w)?;
        out.copy_from_slice(&self.0.linear_tendency_adjoint(&u));
        Ok(())
    }
}

/// Euclidean distance, in grid-index units, between state indices `i` and `j`
/// on an `n × n` grid.
pub fn distance(n: usize, i: usize, j: usize) -> Result<f64, ProblemError> {
    Grid2D::dirichlet(n, 1.0).distance(i, j)
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("F", &[Scalar, Finite, Nonnegative], "Froude-type constant")
        .field("epsilon", &[Scalar, Finite, Nonnegative], "coefficient of the Jacobian term")
        .field("A", &[Scalar, Finite, Nonnegative], "hyperviscosity")
        .field("n", &[Scalar, Integer, PowerOfTwoMinusOne], "interior points per side")
        .field("order", &[Scalar, Integer, OneOf(&["2", "4"])], "finite-difference order p")
        .field("linearsolver", &[Text, OneOf(LinearSolverKind::NAMES)], "Helmholtz solver")
        .field("linearsolvertol", &[Scalar, Finite, Positive], "relative residual tolerance of iterative solvers")
        .field("seed", &[Scalar, Integer, Nonnegative], "seed of the random initial stream function")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let model = Arc::new(Qgso::new(QgsoParams::from_parameters(params)?)?);
    let n = model.grid.len();
    let (mf, mj, ma, mx) = (model.clone(), model.clone(), model.clone(), model);
    Ok(RhsBundle::new(n, move |_, y, dy| mf.rhs(y, dy))
        .with_jvp(move |_, y, v, out| mj.jvp(y, v, out))
        .with_javp(move |_, y, w, out| ma.javp(y, w, out))
        .with_jacobian_approx(move |_, _| Ok(Arc::new(QgsoApproxJacobian(mx.clone())) as Arc<dyn LinearOperator>)))
}

/// A smooth random stream function `Σ c_kl sin(kπx) sin(lπy)` over the
/// first [`IC_MODES`] modes per direction with `c_kl` uniform in
/// `[-IC_AMPLITUDE, IC_AMPLITUDE]`.
pub fn initial_condition(n: usize, seed: u64) -> Vec<f64> {
    let grid = Grid2D::dirichlet(n, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..IC_MODES * IC_MODES).map(|_| rng.gen_range(-IC_AMPLITUDE..IC_AMPLITUDE)).collect();
    let pi = std::f64::consts::PI;
    (0..grid.len())
        .map(|i| {
            let (x, y) = grid.coords(i).unwrap();
            let mut s = 0.0;
            for k in 0..IC_MODES {
                for l in 0..IC_MODES {
                    s += coeffs[k * IC_MODES + l] * ((k + 1) as f64 * pi * x).sin() * ((l + 1) as f64 * pi * y).sin();
                }
            }
            s
        })
        .collect()
}

/// Bilinear resampling of a zero-boundary field from an `m x m` to an
/// `n x n` interior grid on the unit square.
pub fn resample(field: &[f64], m: usize, n: usize) -> Vec<f64> {
    if m == n {
        return field.to_vec();
    }
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= m as isize || j >= m as isize {
            0.0
        } else {
            field[j as usize * m + i as usize]
        }
    };
    let target = Grid2D::dirichlet(n, 1.0);
    let h = 1.0 / (m + 1) as f64;
    (0..target.len())
        .map(|k| {
            let (x, y) = target.coords(k).unwrap();
            let (gx, gy) = (x / h - 1.0, y / h - 1.0);
            let (i, j) = (gx.floor(), gy.floor());
            let (fx, fy) = (gx - i, gy - j);
            let (i, j) = (i as isize, j as isize);
            (1.0 - fy) * ((1.0 - fx) * at(i, j) + fx * at(i + 1, j)) + fy * ((1.0 - fx) * at(i, j + 1) + fx * at(i + 1, j + 1))
        })
        .collect()
}

/// The random stream function of `seed` integrated over [`SPINUP_TIME`] on
/// the [`SPINUP_GRID`] grid with default parameters, resampled to `n x n`.
/// Spun-up states are cached per seed.
pub fn spun_up_state(n: usize, seed: u64) -> Result<Vec<f64>, ProblemError> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let cached = cache.lock().unwrap().get(&seed).cloned();
    let state = match cached {
        Some(s) => s,
        None => {
            let o = Parameters::new()
                .with("n", ParamValue::Scalar(SPINUP_GRID as f64))
                .with("seed", ParamValue::Scalar(seed as f64));
            let mut p = crate::registry::build_preset("qgso", "Canonical", &o)?;
            p.set_time_span(0.0, SPINUP_TIME)?;
            let opts = IntegratorOptions { record: Record::Endpoints, ..Default::default() };
            let traj = integrate_adaptive(&p, &opts).map_err(|e| ProblemError::Unsupported(format!("QGSO spin-up failed: {e}")))?;
            let s = Arc::new(traj.last_state().to_vec());
            cache.lock().unwrap().insert(seed, s.clone());
            s
        }
    };
    Ok(resample(&state, SPINUP_GRID, n))
}

/// Each value in [-0.1, 0.1].
fn sample(problem: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &vec![(-0.1, 0.1); problem.num_vars()])
}

fn defaults(n: usize, tf: f64, spun_up: bool) -> PresetDefaults {
    let params = Parameters::new()
        .with("F", ParamValue::Scalar(1600.0))
        .with("epsilon", ParamValue::Scalar(1e-5))
        .with("A", ParamValue::Scalar(2e-11))
        .with("n", ParamValue::Scalar(n as f64))
        .with("order", ParamValue::Scalar(2.0))
        .with("linearsolver", ParamValue::Text("cholesky".into()))
        .with("linearsolvertol", ParamValue::Scalar(1e-8))
        .with("seed", ParamValue::Scalar(1.0));
    if spun_up {
        PresetDefaults::new(params, (0.0, tf), |p| spun_up_state(p.usize("n")?, p.usize("seed")? as u64))
    } else {
        PresetDefaults::new(params, (0.0, tf), |p| Ok(initial_condition(p.usize("n")?, p.usize("seed")? as u64)))
    }
}

pub(crate) static FAMILY: Family = Family {
    name: "qgso",
    title: "Quasi-Geostrophic Single-Layer Ocean",
    size_label: "n^2 (16129)",
    description: "stream-function form of a wind-driven single-layer ocean; Arakawa Jacobian, Helmholtz solve per evaluation",
    schema,
    build,
    sample_state: sample,
    presets: &[
        Preset { name: "Canonical", description: "127x127 grid, F=1600, eps=1e-5, A=2e-11, t in [0,100]", defaults: || defaults(127, 100.0, false) },
        Preset { name: "GC", description: "127x127 grid, spun-up state, t in [0,5000]", defaults: || defaults(127, 5000.0, true) },
        Preset { name: "GC-small", description: "63x63 grid, spun-up state, t in [0,5000]", defaults: || defaults(63, 5000.0, true) },
        Preset { name: "GC-medium", description: "127x127 grid, spun-up state, t in [0,5000]", defaults: || defaults(127, 5000.0, true) },
        Preset { name: "GC-large", description: "255x255 grid, spun-up state, t in [0,5000]", defaults: || defaults(255, 5000.0, true) },
    ],
};
