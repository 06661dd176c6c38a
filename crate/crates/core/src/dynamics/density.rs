use nalgebra::{DMatrix, DVector};

use crate::sparse::CsrMatrix;
use crate::C64;

use super::SimulationError;

/// ρ stored column-stacked: element (r, c) lives at `c*dim + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// |k⟩⟨k| for basis index `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        data[k * dim + k] = C64::new(1.0, 0.0);
        Self { dim, data }
    }

    /// |0…0⟩⟨0…0|.
    pub fn ground(dim: usize) -> Self {
        Self::basis(dim, 0)
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn from_pure(psi: &[C64]) -> Self {
        let dim = psi.len();
        let mut data = Vec::with_capacity(dim * dim);
        for c in 0..dim {
            for r in 0..dim {
                data.push(psi[r] * psi[c].conj());
            }
        }
        Self { dim, data }
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self, SimulationError> {
        if data.len() != dim * dim {
            return Err(SimulationError::InvalidInitialState(format!(
                "expected {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        Self {
            dim: m.nrows(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.dim, self.dim, &self.data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[c * self.dim + r]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    /// Diagonal, i.e. basis-state populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k).re).collect()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += (self.get(r, c) * self.get(c, r)).re;
            }
        }
        acc
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig: DVector<f64> = herm.symmetric_eigenvalues();
        eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Tr(ρ O) for an operator on the full space.
    pub fn expectation(&self, op: &CsrMatrix) -> C64 {
        op.iter().map(|(r, c, v)| v * self.get(c, r)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
