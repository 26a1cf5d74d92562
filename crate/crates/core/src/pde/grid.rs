//! Uniform rectangular grids storing interior points only.
//!
//! Fields are flattened row-major with x fastest: index `iy * nx + ix`.
//! Dirichlet grids omit the zero boundary, so on a side of length `L` with
//! `n` interior points the spacing is `L / (n + 1)` and point `i` sits at
//! `(i + 1) h`. Periodic grids use spacing `L / n` with point `i` at `i h`.

use crate::error::ProblemError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub boundary: Boundary,
}

impl Grid2D {
    /// Square Dirichlet grid with `n` interior points per side on `[0, length]^2`.
    pub fn dirichlet(n: usize, length: f64) -> Self {
        let h = length / (n + 1) as f64;
        Self { nx: n, ny: n, hx: h, hy: h, boundary: Boundary::Dirichlet }
    }

    /// Square periodic grid with `n` points per side on `[0, length)^2`.
    pub fn periodic(n: usize, length: f64) -> Self {
        let h = length / n as f64;
        Self { nx: n, ny: n, hx: h, hy: h, boundary: Boundary::Periodic }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Grid coordinates `(ix, iy)` of flat index `i`.
    pub fn unflatten(&self, i: usize) -> Result<(usize, usize), ProblemError> {
        if i >= self.len() {
            return Err(ProblemError::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok((i % self.nx, i / self.nx))
    }

    /// Physical coordinates `(x, y)` of flat index `i`.
    pub fn coords(&self, i: usize) -> Result<(f64, f64), ProblemError> {
        let (ix, iy) = self.unflatten(i)?;
        let offset = match self.boundary {
            Boundary::Dirichlet => 1.0,
            Boundary::Periodic => 0.0,
        };
        Ok(((ix as f64 + offset) * self.hx, (iy as f64 + offset) * self.hy))
    }

    /// Euclidean distance between two points in grid-index units.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64, ProblemError> {
        let (ix, iy) = self.unflatten(i)?;
        let (jx, jy) = self.unflatten(j)?;
        let dx = ix as f64 - jx as f64;
        let dy = iy as f64 - jy as f64;
        Ok(dx.hypot(dy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_spacing_and_coordinates() {
        let g = Grid2D::dirichlet(7, 1.0);
        assert_eq!(g.hx, 0.125);
        assert_eq!(g.coords(0).unwrap(), (0.125, 0.125));
        assert_eq!(g.coords(g.index(6, 2)).unwrap(), (0.875, 0.375));
    }

    #[test]
    fn periodic_spacing() {
        let g = Grid2D::periodic(8, 2.0);
        assert_eq!(g.hx, 0.25);
        assert_eq!(g.coords(9).unwrap(), (0.25, 0.25));
    }

    #[test]
    fn distances() {
        let g = Grid2D::dirichlet(9, 1.0);
        assert_eq!(g.distance(12, 12).unwrap(), 0.0);
        assert_eq!(g.distance(g.index(3, 3), g.index(4, 3)).unwrap(), 1.0);
        assert_eq!(g.distance(g.index(1, 1), g.index(4, 5)).unwrap(), 5.0);
        assert_eq!(g.distance(0, 81).unwrap_err(), ProblemError::IndexOutOfRange { index: 81, len: 81 });
    }
}
