//! Compressed sparse row matrices.

use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    /// Explicit zeros that result from cancellation are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `out = A x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut triplets = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &cols {
                triplets.push((i, j, acc[j]));
                acc[j] = 0.0;
                touched[j] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, &triplets)
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CsrMatrix) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.triplets() {
            for (k, l, b) in other.triplets() {
                t.push((i * other.nrows + k, j * other.ncols + l, a * b));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, &t)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, -1.0), (2, 0, 4.0), (0, 0, 1.0)])
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.transpose().add_scaled(1.0, &CsrMatrix::identity(3), 2.0);
        let x = [1.0, -2.0, 0.5];
        let dense = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(a.mul_vec(&x), dense.as_slice());
        assert_eq!(a.matmul(&b).to_dense(), a.to_dense() * b.to_dense());
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        assert_eq!(a.kron(&b).to_dense(), a.to_dense().kronecker(&b.to_dense()));
        assert_eq!(a.bandwidth(), 2);
    }
}
