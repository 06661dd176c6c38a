//! Open-system dynamics: channel signals, Lindblad superoperators and the
//! master-equation driver.

mod channels;
mod density;
mod shots;
mod simulate;
mod superop;

pub use channels::{
    channel_tick, envelope, mix, ChannelConfig, ChannelController, ChannelSchedule, ChannelState,
    ScheduledPulse,
};
pub use density::DensityMatrix;
pub use shots::sample_shots;
pub use simulate::{
    integrate_master_equation, SimulationOptions, SimulationResult, SolverStats, SubsystemSeries,
    LEAKAGE_RENORMALIZE_THRESHOLD,
};
pub use superop::{assemble_static_superoperator, commutator_superoperator, dissipator, Superoperators};

use serde::Deserialize;
use thiserror::Error;

use crate::expr::ExprError;
use crate::hamiltonian::{operator_sum_matrix, HamiltonianError, HamiltonianModel, OperatorProduct};
use crate::ir::LibraryError;
use crate::ode::OdeError;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("invalid Lindblad specification: {0}")]
    InvalidLindblad(String),
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid deck: {0}")]
    InvalidDeck(String),
    #[error("deck references unknown pulse `{0}`")]
    UnknownPulse(String),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error("invalid simulation options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
}

/// One dissipation channel γ·D[A]ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOperator {
    pub rate: f64,
    /// Operator text as written, e.g. `SM0`.
    pub label: String,
    pub products: Vec<OperatorProduct>,
}

impl CollapseOperator {
    pub fn matrix(&self, model: &HamiltonianModel) -> Result<CsrMatrix, HamiltonianError> {
        operator_sum_matrix(&self.products, &model.dims)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LindbladSpec {
    pub collapse_ops: Vec<CollapseOperator>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCollapse {
    rate: f64,
    op: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLindblad {
    List(Vec<RawCollapse>),
    Wrapped { lindblad: Vec<RawCollapse> },
}

#[derive(Deserialize)]
struct Embedded {
    #[serde(default)]
    lindblad: Vec<RawCollapse>,
}

impl LindbladSpec {
    /// Closed system.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(model: &HamiltonianModel, ops: &[(f64, &str)]) -> Result<Self, SimulationError> {
        let mut collapse_ops = Vec::new();
        for (rate, op) in ops {
            collapse_ops.push(Self::parse_one(model, *rate, op)?);
        }
        Ok(Self { collapse_ops })
    }

    fn parse_one(model: &HamiltonianModel, rate: f64, op: &str) -> Result<CollapseOperator, SimulationError> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(SimulationError::InvalidLindblad(format!("rate for `{op}` must be finite and non-negative, got {rate}")));
        }
        Ok(CollapseOperator {
            rate,
            label: op.to_string(),
            products: model.parse_operator(op)?,
        })
    }

    /// Accepts `{"lindblad": [{"rate": γ, "op": "SM0"}, ...]}`, a bare list of
    /// such entries, or a backend Hamiltonian JSON carrying a `lindblad` field.
    pub fn from_json(json_text: &str, model: &HamiltonianModel) -> Result<Self, SimulationError> {
        let raw = match serde_json::from_str::<RawLindblad>(json_text) {
            Ok(RawLindblad::List(l)) | Ok(RawLindblad::Wrapped { lindblad: l }) => l,
            Err(first) => serde_json::from_str::<Embedded>(json_text)
                .map_err(|_| SimulationError::InvalidLindblad(first.to_string()))?
                .lindblad,
        };
        let mut collapse_ops = Vec::new();
        for r in raw {
            collapse_ops.push(Self::parse_one(model, r.rate, &r.op)?);
        }
        Ok(Self { collapse_ops })
    }
}
