//! Gate-to-pulse lowering and global pulse scheduling.

mod decompose;
mod lower;
mod schedule;

use thiserror::Error;

use crate::ir::{Deck, Instruction, LibraryError, PulseLibrary};

pub use decompose::{equal_up_to_global_phase, gate_unitary, Angle, GateTemplate, Rewrite, UniversalDecompositionTable};
pub use lower::{lower_to_pulses, LoweredProgram};
pub use schedule::schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("gate `{gate}` on qubits {qubits:?} has no cmd-def and no decomposition")]
    NoLowering { gate: String, qubits: Vec<usize> },
    #[error("decomposition cycle: {0}")]
    Cycle(String),
    #[error("gate `{0}` follows a measurement; only terminal measurements are supported")]
    MidCircuitMeasurement(String),
    #[error("gate `{gate}` expects {expected} parameters, got {got}")]
    Arity { gate: String, expected: usize, got: usize },
    #[error("gate `{gate}` acts on {expected} qubits, got {got}")]
    QubitCount { gate: String, expected: usize, got: usize },
    #[error("cannot schedule `{0}`: it still contains gates")]
    NotAnalog(String),
    #[error("scheduling produced a negative start time {0}")]
    NegativeStart(i64),
    #[error(transparent)]
    Library(#[from] LibraryError),
}

/// Lowers, schedules from t = 0 and flattens a gate program.
pub fn compile(program: &Instruction, lib: &PulseLibrary) -> Result<(Deck, Vec<usize>), CompileError> {
    let lowered = lower_to_pulses(program, lib, &UniversalDecompositionTable::default())?;
    let scheduled = schedule(&lowered.program, 0)?;
    Ok((Deck::from_program(&scheduled)?, lowered.measured))
}
