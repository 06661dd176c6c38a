//! Run inputs: which files to read, and their parsed contents.

use std::path::{Path, PathBuf};

use qpulse::dynamics::{ChannelConfig, LindbladSpec};
use qpulse::{Deck, HamiltonianModel, Instruction, PulseLibrary};
use serde::Deserialize;

use crate::{asm, read_file, CliError};

/// Paths and run settings. Every path is optional here; each command checks
/// for the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub hamiltonian: Option<PathBuf>,
    pub library: Option<PathBuf>,
    /// Gate assembly, or a deck JSON (detected by a leading `[`).
    pub program: Option<PathBuf>,
    pub channels: Option<PathBuf>,
    pub lindblad: Option<PathBuf>,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunManifest {
    /// Reads a manifest JSON; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = read_file(path)?;
        let mut m: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut m.hamiltonian, &mut m.library, &mut m.program, &mut m.channels, &mut m.lindblad, &mut m.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(mut self, other: RunManifest) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        take!(hamiltonian, library, program, channels, lindblad, out);
        if other.shots != 0 {
            self.shots = other.shots;
        }
        if other.seed != 0 {
            self.seed = other.seed;
        }
        self
    }

    fn need<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path, CliError> {
        field
            .as_deref()
            .ok_or_else(|| CliError::Validation(format!("missing --{name}")))
    }

    pub fn hamiltonian_path(&self) -> Result<&Path, CliError> {
        self.need(&self.hamiltonian, "hamiltonian")
    }

    pub fn library_path(&self) -> Result<&Path, CliError> {
        self.need(&self.library, "library")
    }

    pub fn program_path(&self) -> Result<&Path, CliError> {
        self.need(&self.program, "program")
    }

    pub fn channels_path(&self) -> Result<&Path, CliError> {
        self.need(&self.channels, "channels")
    }
}

#[derive(Debug, Clone)]
pub enum Program {
    Gates(Instruction),
    Deck(Deck),
}

#[derive(Debug, Clone)]
pub struct LoadedHamiltonian {
    pub model: HamiltonianModel,
    /// `h_str` length before `_SUM` expansion.
    pub entries: usize,
}

pub fn load_hamiltonian(path: &Path) -> Result<LoadedHamiltonian, CliError> {
    let text = read_file(path)?;
    let model = qpulse::parse_hamiltonian(&text).map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
    let entries = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("h_str").and_then(|h| h.as_array()).map(Vec::len))
        .unwrap_or(0);
    Ok(LoadedHamiltonian { model, entries })
}

pub fn load_library(path: &Path) -> Result<PulseLibrary, CliError> {
    PulseLibrary::from_json(&read_file(path)?).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = read_file(path)?;
    let ctx = path.display().to_string();
    if text.trim_start().starts_with('[') {
        Ok(Program::Deck(Deck::from_json(&text).map_err(|e| CliError::from(e).context(&ctx))?))
    } else {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("main");
        Ok(Program::Gates(asm::parse_program(name, &text).map_err(|e| CliError::from(e).context(&ctx))?))
    }
}

pub fn load_channels(path: &Path) -> Result<ChannelConfig, CliError> {
    let cfg = ChannelConfig::from_json(&read_file(path)?).map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
    cfg.validate().map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
    Ok(cfg)
}

pub fn load_lindblad(path: &Path, model: &HamiltonianModel) -> Result<LindbladSpec, CliError> {
    LindbladSpec::from_json(&read_file(path)?, model).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

/// Everything a simulation needs, parsed up front so that bad input fails
/// before any integration starts.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub hamiltonian: LoadedHamiltonian,
    pub library: PulseLibrary,
    pub program: Program,
    pub channels: ChannelConfig,
    pub lindblad: LindbladSpec,
    pub shots: u64,
    pub seed: u64,
}

impl LoadedRun {
    pub fn load(m: &RunManifest) -> Result<Self, CliError> {
        let hamiltonian = load_hamiltonian(m.hamiltonian_path()?)?;
        let library = match &m.library {
            Some(p) => load_library(p)?,
            None => PulseLibrary::new(),
        };
        let program = load_program(m.program_path()?)?;
        if matches!(program, Program::Gates(_)) && m.library.is_none() {
            return Err(CliError::Validation("a gate program needs --library".into()));
        }
        let channels = load_channels(m.channels_path()?)?;
        let lindblad = match &m.lindblad {
            Some(p) => load_lindblad(p, &hamiltonian.model)?,
            None => LindbladSpec::none(),
        };
        Ok(Self {
            hamiltonian,
            library,
            program,
            channels,
            lindblad,
            shots: m.shots,
            seed: m.seed,
        })
    }
}
