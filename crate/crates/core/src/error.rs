use thiserror::Error;

use crate::compiler::CompileError;
use crate::control::ControlError;
use crate::dynamics::SimulationError;
use crate::expr::ExprError;
use crate::hamiltonian::HamiltonianError;
use crate::ir::LibraryError;
use crate::ode::OdeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to failures that happen while integrating.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Ode(_) => false,
            Error::Simulation(e) => !matches!(e, SimulationError::Integration(_)),
            Error::Control(e) => !matches!(e, ControlError::Integration(_)),
            _ => true,
        }
    }
}
