//! Pulse-program representation and the backend pulse library.

mod deck;
mod instruction;
mod library;

use thiserror::Error;

pub use deck::{Deck, DeckEntry};
pub use instruction::Instruction;
pub use library::{registry_key, CmdDef, CmdDefAction, CmdDefEntry, LinearPhase, PulseLibrary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{context}: missing field `{field}`")]
    MissingField { context: String, field: String },
    #[error("cmd-def `{cmd_def}` references unknown pulse `{pulse}`")]
    UnknownPulse { cmd_def: String, pulse: String },
    #[error("no cmd-def registered as `{0}`")]
    UnknownCmdDef(String),
    #[error("pulse `{0}` is already registered with different samples")]
    DuplicatePulse(String),
    #[error("pulse `{0}` has no samples")]
    EmptyPulse(String),
    #[error("pulse `{0}` has a non-finite sample")]
    NonFiniteSample(String),
    #[error("invalid channel `{0}`")]
    InvalidChannel(String),
    #[error("cmd-def `{cmd_def}`: invalid phase: {message}")]
    InvalidPhase { cmd_def: String, message: String },
    #[error("`{cmd_def}` needs {expected} parameters, got {got}")]
    ParameterCount { cmd_def: String, expected: usize, got: usize },
    #[error("negative time in {0}")]
    NegativeTime(String),
    #[error("`{0}` is not a composite")]
    NotComposite(String),
    #[error("no child at index {0}")]
    ChildIndex(usize),
    #[error("cannot flatten: gate `{0}` has not been lowered to pulses")]
    NotAnalog(String),
}
