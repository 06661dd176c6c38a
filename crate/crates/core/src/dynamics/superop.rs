//! Lindblad superoperators under column stacking, vec(AρB) = (Bᵀ⊗A) vec(ρ).

use crate::hamiltonian::{ChannelId, HamiltonianModel};
use crate::sparse::CsrMatrix;
use crate::C64;

use super::{LindbladSpec, SimulationError};

/// `−i(I⊗H − Hᵀ⊗I)`, the generator of `−i[H, ρ]`.
pub fn commutator_superoperator(h: &CsrMatrix) -> CsrMatrix {
    let d = h.nrows();
    let id = CsrMatrix::identity(d);
    let left = id.kron(h);
    let right = h.transpose().kron(&id);
    left.axpby(C64::new(0.0, -1.0), &right, C64::new(0.0, 1.0))
}

/// `γ(Ā⊗A − ½ I⊗A†A − ½ (A†A)ᵀ⊗I)`.
pub fn dissipator(a: &CsrMatrix, rate: f64) -> CsrMatrix {
    let d = a.nrows();
    let id = CsrMatrix::identity(d);
    let ada = a.adjoint().matmul(a);
    let jump = a.conj().kron(a);
    let anti = id.kron(&ada).add(&ada.transpose().kron(&id));
    jump.axpby(C64::new(rate, 0.0), &anti, C64::new(-0.5 * rate, 0.0))
}

/// 𝓛₀ from every static term and collapse operator.
pub fn assemble_static_superoperator(model: &HamiltonianModel, lind: &LindbladSpec) -> Result<CsrMatrix, SimulationError> {
    let h0 = model.static_hamiltonian()?;
    let mut l0 = commutator_superoperator(&h0);
    for op in &lind.collapse_ops {
        let a = op.matrix(model)?;
        if a.nrows() != h0.nrows() {
            return Err(SimulationError::InvalidLindblad(format!(
                "collapse operator `{}` has dimension {}, model has {}",
                op.label,
                a.nrows(),
                h0.nrows()
            )));
        }
        if op.rate > 0.0 {
            l0 = l0.add(&dissipator(&a, op.rate));
        }
    }
    Ok(l0)
}

/// The full generator split into a static part and one commutator
/// superoperator per driving channel.
#[derive(Debug, Clone)]
pub struct Superoperators {
    pub static_part: CsrMatrix,
    pub channels: Vec<(ChannelId, CsrMatrix)>,
}

impl Superoperators {
    pub fn assemble(model: &HamiltonianModel, lind: &LindbladSpec) -> Result<Self, SimulationError> {
        let static_part = assemble_static_superoperator(model, lind)?;
        let channels = model
            .channel_hamiltonians()?
            .into_iter()
            .map(|(ch, h)| (ch, commutator_superoperator(&h)))
            .collect();
        Ok(Self { static_part, channels })
    }

    /// `dy = (𝓛₀ + Σ_j d_j 𝓛_j) y`.
    pub fn apply(&self, drives: &[f64], y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        self.static_part.mul_vec_add(C64::new(1.0, 0.0), y, dy);
        for ((_, l), d) in self.channels.iter().zip(drives) {
            if *d != 0.0 {
                l.mul_vec_add(C64::new(*d, 0.0), y, dy);
            }
        }
    }
}
