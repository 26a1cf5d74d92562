//! Finite-difference Laplacians and first derivatives of order 2 or 4.
//!
//! Beyond a Dirichlet boundary the field is continued as an odd reflection,
//! which makes the boundary value zero and keeps the order-4 Laplacian
//! symmetric with the discrete sine modes as exact eigenvectors.

use super::grid::{Boundary, Grid2D};
use super::sparse::CsrMatrix;

const D2_ORDER2: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const D2_ORDER4: [(isize, f64); 5] =
    [(-2, -1.0 / 12.0), (-1, 4.0 / 3.0), (0, -5.0 / 2.0), (1, 4.0 / 3.0), (2, -1.0 / 12.0)];
const D1_ORDER2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const D1_ORDER4: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)];

fn stencil(order: usize, derivative: usize) -> &'static [(isize, f64)] {
    match (derivative, order) {
        (2, 2) => &D2_ORDER2,
        (2, 4) => &D2_ORDER4,
        (1, 2) => &D1_ORDER2,
        (1, 4) => &D1_ORDER4,
        _ => panic!("unsupported finite-difference order {order} for derivative {derivative}"),
    }
}

/// One-dimensional difference matrix for `n` points.
pub fn difference_1d(n: usize, h: f64, order: usize, derivative: usize, boundary: Boundary) -> CsrMatrix {
    let scale = h.powi(derivative as i32);
    let n_i = n as isize;
    let mut t = Vec::new();
    for i in 0..n_i {
        for &(off, w) in stencil(order, derivative) {
            let k = i + off;
            let (col, sign) = match boundary {
                Boundary::Periodic => (k.rem_euclid(n_i), 1.0),
                Boundary::Dirichlet => {
                    if k == -1 || k == n_i {
                        continue;
                    } else if k < -1 {
                        (-2 - k, -1.0)
                    } else if k > n_i {
                        (2 * n_i - k, -1.0)
                    } else {
                        (k, 1.0)
                    }
                }
            };
            t.push((i as usize, col as usize, sign * w / scale));
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// 1D Laplacian on `n` points.
pub fn laplacian_1d(n: usize, h: f64, order: usize, boundary: Boundary) -> CsrMatrix {
    difference_1d(n, h, order, 2, boundary)
}

/// 2D Laplacian `I ⊗ Dxx + Dyy ⊗ I` in the grid's flattening.
pub fn laplacian_2d(grid: &Grid2D, order: usize) -> CsrMatrix {
    let dxx = laplacian_1d(grid.nx, grid.hx, order, grid.boundary);
    let dyy = laplacian_1d(grid.ny, grid.hy, order, grid.boundary);
    let lx = CsrMatrix::identity(grid.ny).kron(&dxx);
    let ly = dyy.kron(&CsrMatrix::identity(grid.nx));
    lx.add_scaled(1.0, &ly, 1.0)
}

/// Central first derivative in x, `I ⊗ Dx`.
pub fn dx_2d(grid: &Grid2D, order: usize) -> CsrMatrix {
    CsrMatrix::identity(grid.ny).kron(&difference_1d(grid.nx, grid.hx, order, 1, grid.boundary))
}

/// Eigenvalues of the order-2 Dirichlet Laplacian on `n` points of spacing `h`,
/// `-(4/h^2) sin^2(k π / (2(n+1)))` for `k = 1..=n`.
pub fn dirichlet_eigenvalues_1d(n: usize, h: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
            -4.0 / (h * h) * s * s
        })
        .collect()
}
