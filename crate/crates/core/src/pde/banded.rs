//! Cholesky factorization of symmetric positive definite banded matrices.

use super::sparse::CsrMatrix;
use crate::error::ProblemError;

/// Lower-triangular band factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` stores columns `i - bw ..= i` contiguously.
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the symmetric matrix `a`; only its lower band is read.
    /// Fails with `SingularMass` if `a` is not positive definite.
    pub fn factor(a: &CsrMatrix) -> Result<Self, ProblemError> {
        let n = a.nrows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * w + (j + bw - i)] += v;
                }
            }
        }
        for i in 0..n {
            let row_start = i.saturating_sub(bw);
            for j in row_start..=i {
                let k0 = row_start.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                for k in k0..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(ProblemError::SingularMass);
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (k + bw - i)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for r in i + 1..(i + bw + 1).min(n) {
                s -= self.band[r * w + (i + bw - r)] * x[r];
            }
            x[i] = s / self.band[i * w + bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
