//! Pulse-level quantum compilation and open-system simulation.
//!
//! The crate is organized along the pipeline a pulse program travels:
//!
//! - [`hamiltonian`] parses OpenPulse backend Hamiltonians (`h_str`, `vars`,
//!   `qub`) into typed terms and builds their matrices.
//! - [`ir`] holds the instruction tree (gates, pulses, frame changes,
//!   composites) and the pulse library / cmd-def registry.
//! - [`compiler`] lowers digital gates to pulse composites and schedules
//!   them into a global deck.
//! - [`dynamics`] drives the Lindblad master equation with the deck's channel
//!   signals and reports populations, expectations and shot counts.
//! - [`synth`] generates sample arrays from shapes or analytic expressions.
//! - [`control`] optimizes analytic control functions toward a target unitary.
//!
//! Complex numbers are [`num_complex::Complex64`], re-exported as [`C64`].

pub mod compiler;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod hamiltonian;
pub mod ir;
pub mod ode;
pub mod sparse;
pub mod synth;

pub use num_complex::Complex64 as C64;

pub use compiler::{lower_to_pulses, schedule, LoweredProgram, UniversalDecompositionTable};
pub use control::{fidelity, optimize, propagate_unitary, ControlProblem, OptimizerConfig};
pub use dynamics::{
    integrate_master_equation, sample_shots, ChannelConfig, DensityMatrix, LindbladSpec,
    SimulationOptions, SimulationResult,
};
pub use error::{Error, Result};
pub use expr::TimeExpression;
pub use hamiltonian::{
    operator_matrix, parse_hamiltonian, term_matrix, ChannelId, ChannelKind, HamiltonianModel,
    HamiltonianTerm, Operator, OperatorKind, OperatorProduct,
};
pub use ir::{Deck, DeckEntry, Instruction, PulseLibrary};
pub use synth::{gaussian_pulse, pulse_from_expression, square_pulse};
