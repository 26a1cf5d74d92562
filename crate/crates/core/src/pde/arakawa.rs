//! Arakawa's nine-point Jacobian `J(a, b) ≈ a_x b_y − a_y b_x` on a Dirichlet
//! grid with zero values outside the interior.
//!
//! The three second-order forms are combined as `(S(a, b) − S(b, a)) / (12 h²)`
//! with `S(a, b) = (a_E − a_W)(b_N − b_S) + a_E(b_NE − b_SE) − a_W(b_NW − b_SW)
//! − a_N(b_NE − b_NW) + a_S(b_SE − b_SW)`, so antisymmetry and `J(a, a) = 0`
//! hold exactly in floating point. Requires `hx == hy`.

use super::grid::Grid2D;

struct Neighbourhood {
    c: [[f64; 3]; 3],
}

impl Neighbourhood {
    /// `c[dy + 1][dx + 1]` holds the value at offset `(dx, dy)`.
    fn gather(grid: &Grid2D, f: &[f64], ix: usize, iy: usize) -> Self {
        let mut c = [[0.0; 3]; 3];
        for (dy, row) in c.iter_mut().enumerate() {
            for (dx, v) in row.iter_mut().enumerate() {
                let x = ix as isize + dx as isize - 1;
                let y = iy as isize + dy as isize - 1;
                if x >= 0 && y >= 0 && (x as usize) < grid.nx && (y as usize) < grid.ny {
                    *v = f[grid.index(x as usize, y as usize)];
                }
            }
        }
        Self { c }
    }

    fn e(&self) -> f64 {
        self.c[1][2]
    }
    fn w(&self) -> f64 {
        self.c[1][0]
    }
    fn n(&self) -> f64 {
        self.c[2][1]
    }
    fn s(&self) -> f64 {
        self.c[0][1]
    }
    fn ne(&self) -> f64 {
        self.c[2][2]
    }
    fn nw(&self) -> f64 {
        self.c[2][0]
    }
    fn se(&self) -> f64 {
        self.c[0][2]
    }
    fn sw(&self) -> f64 {
        self.c[0][0]
    }
}

fn s_form(a: &Neighbourhood, b: &Neighbourhood) -> f64 {
    (a.e() - a.w()) * (b.n() - b.s()) + a.e() * (b.ne() - b.se()) - a.w() * (b.nw() - b.sw())
        - a.n() * (b.ne() - b.nw())
        + a.s() * (b.se() - b.sw())
}

/// `J(a, b)` written into `out`.
pub fn jacobian_into(grid: &Grid2D, a: &[f64], b: &[f64], out: &mut [f64]) {
    let scale = 1.0 / (12.0 * grid.hx * grid.hy);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let na = Neighbourhood::gather(grid, a, ix, iy);
            let nb = Neighbourhood::gather(grid, b, ix, iy);
            out[grid.index(ix, iy)] = (s_form(&na, &nb) - s_form(&nb, &na)) * scale;
        }
    }
}

pub fn jacobian(grid: &Grid2D, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    jacobian_into(grid, a, b, &mut out);
    out
}

/// Adjoint of the linear map `b ↦ J(a, b)` applied to `w`.
pub fn jacobian_adjoint_second(grid: &Grid2D, a: &[f64], w: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (12.0 * grid.hx * grid.hy);
    let mut out = vec![0.0; grid.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let wc = w[grid.index(ix, iy)] * scale;
            if wc == 0.0 {
                continue;
            }
            let na = Neighbourhood::gather(grid, a, ix, iy);
            let coeffs = [
                (0, 1, na.e() - na.w() + na.ne() - na.nw()),
                (0, -1, -(na.e() - na.w()) - (na.se() - na.sw())),
                (1, 0, -(na.n() - na.s()) - (na.ne() - na.se())),
                (-1, 0, na.n() - na.s() + na.nw() - na.sw()),
                (1, 1, na.e() - na.n()),
                (1, -1, na.s() - na.e()),
                (-1, 1, na.n() - na.w()),
                (-1, -1, na.w() - na.s()),
            ];
            for (dx, dy, coef) in coeffs {
                let x = ix as isize + dx;
                let y = iy as isize + dy;
                if x >= 0 && y >= 0 && (x as usize) < grid.nx && (y as usize) < grid.ny {
                    out[grid.index(x as usize, y as usize)] += coef * wc;
                }
            }
        }
    }
    out
}
