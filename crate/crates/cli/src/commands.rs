use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qpulse::control::{optimize as run_optimizer, ControlProblem, OptimizationResult, OptimizerConfig};
use qpulse::dynamics::{integrate_master_equation, ChannelConfig, LindbladSpec, SimulationOptions, SimulationResult};
use qpulse::{
    gaussian_pulse, pulse_from_expression, square_pulse, ChannelId, ChannelKind, Deck, DeckEntry, HamiltonianModel,
    PulseLibrary, TimeExpression,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::{load_channels, load_hamiltonian, load_library, load_lindblad, load_program, LoadedRun, Program, RunManifest};
use crate::{write_file, CliError};

/// Solver settings exposed on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub t_max: Option<f64>,
    pub output_step: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SimulationOptions::default();
        Self {
            t_max: None,
            output_step: None,
            rtol: d.rtol,
            atol: d.atol,
        }
    }
}

impl SolverSettings {
    fn options(&self, measured: Option<Vec<usize>>) -> SimulationOptions {
        SimulationOptions {
            t_max: self.t_max,
            output_step: self.output_step,
            rtol: self.rtol,
            atol: self.atol,
            measured,
            ..Default::default()
        }
    }
}

/// Parses whatever the manifest names and summarizes it.
pub fn validate(m: &RunManifest) -> Result<String, CliError> {
    let mut out = String::new();
    let h = load_hamiltonian(m.hamiltonian_path()?)?;
    let model = &h.model;
    let driven = model.driven_terms().count();
    let _ = writeln!(out, "hamiltonian: {}", m.hamiltonian_path()?.display());
    let _ = writeln!(
        out,
        "  {} h_str entries → {} terms ({} static, {} driven), D={}",
        h.entries,
        model.terms.len(),
        model.terms.len() - driven,
        driven,
        model.dimension()
    );
    let dims: Vec<String> = model.dims.iter().map(|(k, d)| format!("{k}:{d}")).collect();
    let _ = writeln!(out, "  subsystems {}", dims.join(" "));
    let channels: Vec<String> = model.channels().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "  channels {}", if channels.is_empty() { "-".into() } else { channels.join(" ") });
    for t in &model.terms {
        let _ = writeln!(out, "    {}", t.to_h_str());
    }

    let library = match &m.library {
        Some(p) => {
            let lib = load_library(p)?;
            let _ = writeln!(out, "library: {} ({} pulses, {} cmd-defs)", p.display(), lib.samples.len(), lib.cmd_defs.len());
            for (name, s) in &lib.samples {
                let _ = writeln!(out, "  pulse {name} {} samples", s.len());
            }
            for def in lib.cmd_defs.values() {
                let qs: Vec<String> = def.qubits.iter().map(|q| format!("q{q}")).collect();
                let _ = writeln!(out, "  cmd-def {} {} ({} entries)", def.name, qs.join(" "), def.sequence.len());
            }
            Some(lib)
        }
        None => None,
    };
    if let Some(p) = &m.program {
        match load_program(p)? {
            Program::Gates(g) => {
                let _ = writeln!(out, "program: {} ({} gates)", p.display(), g.children().len());
                if let Some(lib) = &library {
                    let (deck, _) = qpulse::compiler::compile(&g, lib)?;
                    let _ = writeln!(out, "  lowers to {} deck entries ending at sample {}", deck.entries.len(), deck.end_time());
                }
            }
            Program::Deck(d) => {
                let _ = writeln!(out, "program: {} (deck, {} entries)", p.display(), d.entries.len());
            }
        }
    }
    if let Some(p) = &m.channels {
        let cfg = load_channels(p)?;
        for ch in model.channels() {
            if cfg.lo_freq(ch).is_none() {
                return Err(CliError::Validation(format!("{}: no LO frequency for channel {ch}", p.display())));
            }
        }
        let _ = writeln!(
            out,
            "channels: dt={} ns, {} drive LO, {} control LO, {} analytic overrides",
            cfg.dt,
            cfg.lo_freqs_d.len(),
            cfg.lo_freqs_u.len(),
            cfg.analytic_overrides.len()
        );
    }
    if let Some(p) = &m.lindblad {
        let l = load_lindblad(p, model)?;
        let _ = writeln!(out, "lindblad: {} collapse operators", l.collapse_ops.len());
    }
    out.push_str("ok\n");
    Ok(out)
}

pub fn compile(m: &RunManifest) -> Result<(Deck, Vec<usize>), CliError> {
    let lib = load_library(m.library_path()?)?;
    match load_program(m.program_path()?)? {
        Program::Gates(g) => Ok(qpulse::compiler::compile(&g, &lib)?),
        Program::Deck(d) => Ok((d, Vec::new())),
    }
}

fn deck_of(run: &LoadedRun) -> Result<(Deck, Option<Vec<usize>>), CliError> {
    match &run.program {
        Program::Gates(g) => {
            let (deck, measured) = qpulse::compiler::compile(g, &run.library)?;
            Ok((deck, (!measured.is_empty()).then_some(measured)))
        }
        Program::Deck(d) => Ok((d.clone(), None)),
    }
}

pub fn simulate(run: &LoadedRun, settings: &SolverSettings) -> Result<SimulationResult, CliError> {
    let (deck, measured) = deck_of(run)?;
    let model = &run.hamiltonian.model;
    let mut result =
        integrate_master_equation(model, &run.lindblad, &run.channels, &deck, &run.library, &settings.options(measured))?;
    if run.shots > 0 {
        result.sample_shots(run.shots, run.seed)?;
    }
    Ok(result)
}

/// Writes `result.json`, `timeseries.csv` and, with shots, `counts.json`.
pub fn write_simulation(result: &SimulationResult, dir: &Path) -> Result<(), CliError> {
    write_file(&dir.join("result.json"), &result.to_json())?;
    write_file(&dir.join("timeseries.csv"), &result.to_csv())?;
    if let Some(shots) = &result.shots {
        let text = serde_json::to_string_pretty(shots).expect("counts serialize");
        write_file(&dir.join("counts.json"), &format!("{text}\n"))?;
    }
    Ok(())
}

pub fn summarize(result: &SimulationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "t_end = {} ns, {} output points", result.time_grid.last().copied().unwrap_or(0.0), result.time_grid.len());
    for (k, p) in &result.final_distribution {
        let _ = writeln!(out, "P({k}) = {p:.6}");
    }
    if result.total_leakage > 0.0 {
        let _ = writeln!(out, "leakage = {:.3e}", result.total_leakage);
    }
    if let Some(shots) = &result.shots {
        for (k, n) in shots {
            let _ = writeln!(out, "counts[{k}] = {n}");
        }
    }
    let _ = writeln!(
        out,
        "steps: {} accepted, {} rejected, max |Tr ρ − 1| = {:.2e}",
        result.stats.accepted_steps, result.stats.rejected_steps, result.stats.max_trace_error
    );
    out
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub channel: ChannelId,
    pub values: Vec<f64>,
    /// Qubit whose P(1) is recorded; defaults to the first measured qubit.
    pub qubit: Option<usize>,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
}

fn with_lo(cfg: &ChannelConfig, ch: ChannelId, value: f64) -> Result<ChannelConfig, CliError> {
    let mut cfg = cfg.clone();
    let list = match ch.kind {
        ChannelKind::Drive => &mut cfg.lo_freqs_d,
        ChannelKind::Control => &mut cfg.lo_freqs_u,
    };
    let slot = list
        .get_mut(ch.index)
        .ok_or_else(|| CliError::Validation(format!("channel config has no LO entry for {ch}")))?;
    *slot = value;
    Ok(cfg)
}

/// One independent simulation per LO value of `spec.channel`.
pub fn sweep(run: &LoadedRun, spec: &SweepSpec, settings: &SolverSettings) -> Result<Vec<SweepPoint>, CliError> {
    let (deck, measured) = deck_of(run)?;
    let model = &run.hamiltonian.model;
    let qubit = spec
        .qubit
        .or_else(|| measured.as_ref().and_then(|m| m.first().copied()))
        .unwrap_or(0);
    if !model.dims.contains_key(&qubit) {
        return Err(CliError::Validation(format!("qubit {qubit} is not in the model")));
    }
    with_lo(&run.channels, spec.channel, 0.0)?;
    let opts = settings.options(measured);
    let point = |value: f64| -> Result<SweepPoint, CliError> {
        let cfg = with_lo(&run.channels, spec.channel, value)?;
        let r = integrate_master_equation(model, &run.lindblad, &cfg, &deck, &run.library, &opts)?;
        Ok(SweepPoint {
            value,
            probability: r.final_level_probability(qubit, 1),
        })
    };
    let jobs = if spec.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        spec.jobs
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let mut points = pool.install(|| spec.values.par_iter().map(|v| point(*v)).collect::<Result<Vec<_>, _>>())?;
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(points)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("value,probability\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.value, p.probability);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Square { amplitude: f64 },
    Gaussian { amplitude: f64, sigma: f64 },
    Expression(String),
}

pub fn synth(shape: &Shape, n: usize, dt: f64, name: &str) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::Validation("--n must be positive".into()));
    }
    let samples = match shape {
        Shape::Square { amplitude } => square_pulse(*amplitude, n),
        Shape::Gaussian { amplitude, sigma } => {
            if !(*sigma > 0.0) {
                return Err(CliError::Validation("--sigma must be positive".into()));
            }
            gaussian_pulse(*amplitude, *sigma, n)
        }
        Shape::Expression(src) => {
            if !(dt > 0.0) {
                return Err(CliError::Validation("--dt must be positive".into()));
            }
            pulse_from_expression(&TimeExpression::parse(src)?, n, dt)?
        }
    };
    Ok(format!("{}\n", qpulse::synth::pulse_json(name, &samples)))
}

pub fn optimize(problem: &ControlProblem, cfg: &OptimizerConfig) -> Result<OptimizationResult, CliError> {
    Ok(run_optimizer(problem, cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub final_p1: f64,
    pub final_z: f64,
    pub result: SimulationResult,
}

/// Simulates the control functions at `params` as sampled pulses, one drive
/// channel per control term with LO = 0 so the samples are the drive.
pub fn verify_controls(problem: &ControlProblem, params: &[f64], dt: f64) -> Result<Verification, CliError> {
    if !(dt > 0.0) {
        return Err(CliError::Validation("verification dt must be positive".into()));
    }
    let mut h_str: Vec<String> = problem.drift_text.iter().cloned().collect();
    for (j, h) in problem.control_h_text.iter().enumerate() {
        h_str.push(format!("({h})||D{j}"));
    }
    let qub: BTreeMap<String, usize> = problem.dims.iter().map(|(k, d)| (k.to_string(), *d)).collect();
    let model = HamiltonianModel::from_parts("control verification".into(), &h_str, problem.vars.clone(), qub)?;
    let n = (problem.max_time / dt).round().max(1.0) as usize;
    let mut lib = PulseLibrary::new();
    let mut deck = Deck::default();
    for j in 0..problem.control_funcs.len() {
        let name = format!("control_{j}");
        let samples = pulse_from_expression(&problem.control_expression(j, params), n, dt)?;
        lib.register_samples(&name, samples)?;
        deck.entries.push(DeckEntry {
            name,
            channel: ChannelId::drive(j),
            time: 0,
            duration: n as i64,
            phase: None,
        });
    }
    let cfg = ChannelConfig::new(dt, vec![0.0; problem.control_funcs.len()]);
    let opts = SimulationOptions {
        measured: Some(vec![0]),
        ..Default::default()
    };
    let result = integrate_master_equation(&model, &LindbladSpec::none(), &cfg, &deck, &lib, &opts)?;
    let q0 = result.subsystem(0).expect("subsystem 0 exists");
    Ok(Verification {
        final_p1: q0.levels[1].last().copied().unwrap_or(0.0),
        final_z: q0.z.last().copied().unwrap_or(0.0),
        result,
    })
}
