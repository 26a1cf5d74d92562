//! Solvers for the Helmholtz system `(Δ − F) ψ = r` on a Dirichlet grid.
//!
//! All three solvers work on the symmetric positive definite form
//! `(F I − Δ) ψ = −r`:
//! * `Cholesky`: banded Cholesky factorization, computed once and cached;
//! * `Multigrid`: V(2,2) cycles with damped Jacobi (ω = 4/5), full-weighting
//!   restriction, bilinear prolongation and a direct solve on the 7×7 grid;
//! * `Gmres`: unrestarted, unpreconditioned GMRES with at most 500 iterations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::banded::BandedCholesky;
use super::grid::Grid2D;
use super::operators::laplacian_2d;
use super::sparse::CsrMatrix;
use crate::error::ProblemError;

pub const GMRES_MAX_ITERATIONS: usize = 500;
pub const MULTIGRID_MAX_CYCLES: usize = 200;
const JACOBI_WEIGHT: f64 = 0.8;
const SMOOTHING_STEPS: usize = 2;
const COARSEST: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolverKind {
    Cholesky,
    Multigrid,
    Gmres,
}

impl LinearSolverKind {
    pub const NAMES: &'static [&'static str] = &["cholesky", "multigrid", "gmres"];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "cholesky" => Some(Self::Cholesky),
            "multigrid" => Some(Self::Multigrid),
            "gmres" => Some(Self::Gmres),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cholesky => "cholesky",
            Self::Multigrid => "multigrid",
            Self::Gmres => "gmres",
        }
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Cholesky(BandedCholesky),
    Multigrid(Multigrid),
    Gmres,
}

/// The Helmholtz operator on a grid together with its selected solver.
#[derive(Clone, Debug)]
pub struct Helmholtz {
    grid: Grid2D,
    laplacian: CsrMatrix,
    /// `F I − Δ`.
    spd: CsrMatrix,
    tol: f64,
    kind: LinearSolverKind,
    backend: Backend,
}

fn spd_operator(laplacian: &CsrMatrix, f: f64) -> CsrMatrix {
    CsrMatrix::identity(laplacian.nrows()).add_scaled(f, laplacian, -1.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

impl Helmholtz {
    pub fn new(grid: Grid2D, f: f64, order: usize, kind: LinearSolverKind, tol: f64) -> Result<Self, ProblemError> {
        let laplacian = laplacian_2d(&grid, order);
        let spd = spd_operator(&laplacian, f);
        let backend = match kind {
            LinearSolverKind::Cholesky => Backend::Cholesky(BandedCholesky::factor(&spd)?),
            LinearSolverKind::Multigrid => Backend::Multigrid(Multigrid::new(grid, f, order)?),
            LinearSolverKind::Gmres => Backend::Gmres,
        };
        Ok(Self { grid, laplacian, spd, tol, kind, backend })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn kind(&self) -> LinearSolverKind {
        self.kind
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    /// `(Δ − F) ψ`.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        self.spd.mul_vec(psi).into_iter().map(|v| -v).collect()
    }

    /// Solves `(Δ − F) ψ = r`.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let b: Vec<f64> = r.iter().map(|v| -v).collect();
        self.solve_spd(&b)
    }

    /// Solves `(F I − Δ) x = b`.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, ProblemError> {
        if b.len() != self.grid.len() {
            return Err(ProblemError::DimensionMismatch { expected: self.grid.len(), actual: b.len() });
        }
        match &self.backend {
            Backend::Cholesky(c) => Ok(c.solve(b)),
            Backend::Multigrid(mg) => mg.solve(b, self.tol),
            Backend::Gmres => gmres(&self.spd, b, self.tol, GMRES_MAX_ITERATIONS),
        }
    }
}

#[derive(Clone, Debug)]
struct Level {
    grid: Grid2D,
    a: CsrMatrix,
    inv_diag: Vec<f64>,
}

/// Geometric multigrid hierarchy for `F I − Δ` on grids of size `2^k − 1`.
#[derive(Clone, Debug)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: Cholesky<f64, Dyn>,
}

impl Multigrid {
    pub fn new(grid: Grid2D, f: f64, order: usize) -> Result<Self, ProblemError> {
        let n = grid.nx;
        if grid.ny != n || n < COARSEST || !(n + 1).is_power_of_two() {
            return Err(ProblemError::Unsupported(format!("multigrid needs a square 2^k-1 grid of at least {COARSEST}, got {}x{}", grid.nx, grid.ny)));
        }
        let length = grid.hx * (n + 1) as f64;
        let mut levels = Vec::new();
        let mut m = n;
        loop {
            let g = Grid2D::dirichlet(m, length);
            let a = spd_operator(&laplacian_2d(&g, order), f);
            let inv_diag = a.diagonal().iter().map(|d| 1.0 / d).collect();
            levels.push(Level { grid: g, a, inv_diag });
            if m == COARSEST {
                break;
            }
            m = (m - 1) / 2;
        }
        let coarse = Cholesky::new(levels.last().unwrap().a.to_dense()).ok_or(ProblemError::SingularMass)?;
        Ok(Self { levels, coarse })
    }

    fn smooth(level: &Level, x: &mut [f64], b: &[f64]) {
        for _ in 0..SMOOTHING_STEPS {
            let r = residual(&level.a, x, b);
            for i in 0..x.len() {
                x[i] += JACOBI_WEIGHT * level.inv_diag[i] * r[i];
            }
        }
    }

    fn restrict(fine: &Grid2D, coarse: &Grid2D, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; coarse.len()];
        let w = [0.25, 0.5, 0.25];
        for jc in 0..coarse.ny {
            for ic in 0..coarse.nx {
                let mut s = 0.0;
                for (dy, wy) in w.iter().enumerate() {
                    for (dx, wx) in w.iter().enumerate() {
                        s += wx * wy * r[fine.index(2 * ic + dx, 2 * jc + dy)];
                    }
                }
                out[coarse.index(ic, jc)] = s;
            }
        }
        out
    }

    fn prolong_add(fine: &Grid2D, coarse: &Grid2D, e: &[f64], x: &mut [f64]) {
        let w = [0.5, 1.0, 0.5];
        for jc in 0..coarse.ny {
            for ic in 0..coarse.nx {
                let v = e[coarse.index(ic, jc)];
                for (dy, wy) in w.iter().enumerate() {
                    for (dx, wx) in w.iter().enumerate() {
                        x[fine.index(2 * ic + dx, 2 * jc + dy)] += wx * wy * v;
                    }
                }
            }
        }
    }

    fn v_cycle_at(&self, k: usize, x: &mut [f64], b: &[f64]) {
        let level = &self.levels[k];
        if k + 1 == self.levels.len() {
            let sol = self.coarse.solve(&DVector::from_column_slice(b));
            x.copy_from_slice(sol.as_slice());
            return;
        }
        Self::smooth(level, x, b);
        let r = residual(&level.a, x, b);
        let next = &self.levels[k + 1];
        let rc = Self::restrict(&level.grid, &next.grid, &r);
        let mut ec = vec![0.0; next.grid.len()];
        self.v_cycle_at(k + 1, &mut ec, &rc);
        Self::prolong_add(&level.grid, &next.grid, &ec, x);
        Self::smooth(level, x, b);
    }

    /// One V-cycle on the finest level, updating `x` in place.
    pub fn v_cycle(&self, x: &mut [f64], b: &[f64]) {
        self.v_cycle_at(0, x, b);
    }

    /// Residual norm `‖b − A x‖` on the finest level.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        norm(&residual(&self.levels[0].a, x, b))
    }

    /// V-cycles from a zero guess until `‖r‖ ≤ tol ‖b‖`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>, ProblemError> {
        let mut x = vec![0.0; b.len()];
        let target = tol * norm(b);
        if target == 0.0 {
            return Ok(x);
        }
        let mut res = f64::INFINITY;
        for _ in 0..MULTIGRID_MAX_CYCLES {
            self.v_cycle(&mut x, b);
            res = self.residual_norm(&x, b);
            if res <= target {
                return Ok(x);
            }
        }
        Err(ProblemError::NonConvergence { iterations: MULTIGRID_MAX_CYCLES, residual: res / norm(b) })
    }
}

/// Unrestarted GMRES for `A x = b` from a zero guess, stopping once the
/// relative residual drops to `tol`.
pub fn gmres(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, ProblemError> {
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let max_iter = max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // column j of the Hessenberg matrix, already rotated
    let mut h: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut rel = 1.0;
    for j in 0..max_iter {
        let mut w = a.mul_vec(&basis[j]);
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij: f64 = w.iter().zip(v).map(|(x, y)| x * y).sum();
            col[i] = hij;
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= hij * y);
        }
        let hn = norm(&w);
        col[j + 1] = hn;
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[j].hypot(col[j + 1]);
        let (c, s) = (col[j] / r, col[j + 1] / r);
        cs.push(c);
        sn.push(s);
        col[j] = r;
        col[j + 1] = 0.0;
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        rel = g[j + 1].abs() / beta;
        let done = rel <= tol || hn == 0.0;
        if done || j + 1 == max_iter {
            let k = j + 1;
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let s: f64 = (i + 1..k).map(|l| h[l][i] * y[l]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            let mut x = vec![0.0; n];
            for (yi, v) in y.iter().zip(&basis) {
                x.iter_mut().zip(v).for_each(|(xe, ve)| *xe += yi * ve);
            }
            if done {
                return Ok(x);
            }
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    Err(ProblemError::NonConvergence { iterations: max_iter, residual: rel })
}

/// Dense matrix of `F I − Δ` for small grids, used in tests.
pub fn dense_spd(grid: &Grid2D, f: f64, order: usize) -> DMatrix<f64> {
    spd_operator(&laplacian_2d(grid, order), f).to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&d) / norm(b)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Grid2D::dirichlet(15, 1.0);
        for kind in [LinearSolverKind::Cholesky, LinearSolverKind::Multigrid, LinearSolverKind::Gmres] {
            let h = Helmholtz::new(g, 1600.0, 2, kind, 1e-8).unwrap();
            assert!(h.solve(&vec![0.0; g.len()]).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn manufactured_sine_mode() {
        let g = Grid2D::dirichlet(31, 1.0);
        let psi: Vec<f64> = (0..g.len()).map(|i| g.coords(i).map(|(x, y)| (2.0 * PI * x).sin() * (PI * y).sin()).unwrap()).collect();
        for kind in [LinearSolverKind::Cholesky, LinearSolverKind::Multigrid, LinearSolverKind::Gmres] {
            let h = Helmholtz::new(g, 1600.0, 2, kind, 1e-10).unwrap();
            let back = h.solve(&h.apply(&psi)).unwrap();
            assert!(rel_diff(&back, &psi) < 1e-8, "{kind:?}");
        }
    }

    #[test]
    fn solvers_agree_on_order_four() {
        let g = Grid2D::dirichlet(15, 1.0);
        let r = random_rhs(g.len(), 9);
        let reference = Helmholtz::new(g, 1600.0, 4, LinearSolverKind::Cholesky, 1e-8).unwrap().solve(&r).unwrap();
        let dense = dense_spd(&g, 1600.0, 4).lu().solve(&DVector::from_iterator(r.len(), r.iter().map(|v| -v))).unwrap();
        assert!(rel_diff(&reference, dense.as_slice()) < 1e-12);
        for kind in [LinearSolverKind::Multigrid, LinearSolverKind::Gmres] {
            let x = Helmholtz::new(g, 1600.0, 4, kind, 1e-8).unwrap().solve(&r).unwrap();
            assert!(rel_diff(&x, &reference) < 1e-6, "{kind:?}");
        }
    }

    #[test]
    fn gmres_reports_non_convergence() {
        let g = Grid2D::dirichlet(31, 1.0);
        let a = spd_operator(&laplacian_2d(&g, 2), 0.0);
        let err = gmres(&a, &random_rhs(g.len(), 1), 1e-14, 3).unwrap_err();
        assert!(matches!(err, ProblemError::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn multigrid_rejects_bad_sizes() {
        assert!(Multigrid::new(Grid2D::dirichlet(20, 1.0), 1.0, 2).is_err());
    }
}
