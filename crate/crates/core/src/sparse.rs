//! Compressed sparse row matrices over complex numbers.
//!
//! Only what superoperator assembly needs: construction from triplets or
//! dense matrices, Kronecker products, linear combinations and the
//! matrix-vector product used by the right-hand side.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
        .pruned()
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    fn pruned(self) -> Self {
        if self.data.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        let triplets: Vec<_> = self.iter().filter(|t| t.2 != C64::new(0.0, 0.0)).collect();
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            indptr[r + 1] += 1;
            indices.push(c);
            data.push(v);
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.data[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out.pruned()
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Elementwise complex conjugate (not the adjoint).
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    /// Linear combination `a*self + b*other`.
    pub fn axpby(&self, a: C64, other: &Self, b: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let triplets = self
            .iter()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.iter().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn add(&self, other: &Self) -> Self {
        let one = C64::new(1.0, 0.0);
        self.axpby(one, other, one)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut triplets = Vec::new();
        for (r, k, a) in self.iter() {
            for j in other.indptr[k]..other.indptr[k + 1] {
                triplets.push((r, other.indices[j], a * other.data[j]));
            }
        }
        Self::from_triplets(self.nrows, other.ncols, triplets)
    }

    /// Kronecker product `self ⊗ other`; `self` is the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (m, n) = (other.nrows, other.ncols);
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                triplets.push((r1 * m + r2, c1 * n + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * m, self.ncols * n, triplets)
    }

    /// `y += alpha * A x`.
    pub fn mul_vec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *yr += alpha * acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_add(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// Largest entry magnitude of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.axpby(C64::new(1.0, 0.0), &self.adjoint(), C64::new(-1.0, 0.0));
        diff.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
