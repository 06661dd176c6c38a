//! Library side of the `qpulse` command-line tool: assembly parsing, input
//! loading and the subcommand implementations, kept out of `main` so tests
//! can drive them directly.

pub mod asm;
pub mod backend;
pub mod commands;
pub mod manifest;

use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent input.
    #[error("{0}")]
    Validation(String),
    /// Failure after all inputs were accepted (integration, output I/O).
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Read { .. } => EXIT_VALIDATION,
            CliError::Runtime(_) | CliError::Write { .. } => EXIT_RUNTIME,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{what}: {m}")),
            other => other,
        }
    }
}

impl From<qpulse::Error> for CliError {
    fn from(e: qpulse::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

macro_rules! via_core_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                qpulse::Error::from(e).into()
            }
        })*
    };
}

via_core_error!(
    qpulse::hamiltonian::HamiltonianError,
    qpulse::ir::LibraryError,
    qpulse::compiler::CompileError,
    qpulse::dynamics::SimulationError,
    qpulse::expr::ExprError,
    qpulse::control::ControlError
);

impl From<asm::AsmError> for CliError {
    fn from(e: asm::AsmError) -> Self {
        CliError::Validation(format!("assembly {e}"))
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
