use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpulse::control::{result_json, ControlProblem, OptimizerConfig};
use qpulse::ChannelId;
use qpulse_cli::commands::{self, Shape, SolverSettings, SweepSpec};
use qpulse_cli::manifest::{LoadedRun, RunManifest};
use qpulse_cli::{read_file, write_file, CliError};

#[derive(Parser, Debug)]
#[command(name = "qpulse", version, about = "Pulse-level compiler and Lindblad simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse every input and print a summary.
    Validate(Inputs),
    /// Lower and schedule a gate program into a deck JSON.
    Compile(Inputs),
    /// Run the master equation for a program.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        solver: Solver,
    },
    /// Sweep one channel's LO frequency and record P(qubit = 1).
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        solver: Solver,
        /// Channel whose LO is swept, e.g. d0.
        #[arg(long)]
        channel: ChannelId,
        /// Explicit values, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "points"])]
        values: Vec<f64>,
        #[arg(long, requires_all = ["to", "points"])]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Qubit to read; defaults to the first measured one.
        #[arg(long)]
        qubit: Option<usize>,
        /// Parallel simulations (default: available cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Generate a pulse and print it as JSON.
    Synth {
        #[arg(long, value_enum)]
        shape: ShapeKind,
        #[arg(long, default_value_t = 1.0)]
        amp: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        /// Time expression for `--shape expression`.
        #[arg(long)]
        expr: Option<String>,
        #[arg(long, default_value = "pulse")]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize control-function parameters toward a target unitary.
    Optimize {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = OptimizerConfig::default().max_iterations)]
        max_iterations: usize,
        #[arg(long, default_value_t = OptimizerConfig::default().target)]
        target: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Simulate the optimized controls as sampled pulses.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 0.1)]
        verify_dt: f64,
        /// Where to write the verification time series CSV.
        #[arg(long)]
        verify_out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct Inputs {
    /// JSON manifest naming the input files; flags override it.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    channels: Option<PathBuf>,
    #[arg(long)]
    lindblad: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Inputs {
    fn manifest(&self) -> Result<RunManifest, CliError> {
        let flags = RunManifest {
            hamiltonian: self.hamiltonian.clone(),
            library: self.library.clone(),
            program: self.program.clone(),
            channels: self.channels.clone(),
            lindblad: self.lindblad.clone(),
            shots: self.shots,
            seed: self.seed,
            out: self.out.clone(),
        };
        Ok(match &self.manifest {
            Some(p) => RunManifest::from_file(p)?.overlay(flags),
            None => flags,
        })
    }
}

#[derive(Args, Debug, Clone)]
struct Solver {
    /// End time in ns (default: end of the deck).
    #[arg(long)]
    t_max: Option<f64>,
    /// Output grid spacing in ns (default: dt).
    #[arg(long)]
    output_step: Option<f64>,
    #[arg(long, default_value_t = SolverSettings::default().rtol)]
    rtol: f64,
    #[arg(long, default_value_t = SolverSettings::default().atol)]
    atol: f64,
}

impl Solver {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            t_max: self.t_max,
            output_step: self.output_step,
            rtol: self.rtol,
            atol: self.atol,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ShapeKind {
    Square,
    Gaussian,
    Expression,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(inputs) => {
            print!("{}", commands::validate(&inputs.manifest()?)?);
        }
        Command::Compile(inputs) => {
            let m = inputs.manifest()?;
            let (deck, _) = commands::compile(&m)?;
            emit(m.out.as_ref(), &deck.to_json())?;
        }
        Command::Simulate { inputs, solver } => {
            let m = inputs.manifest()?;
            let run = LoadedRun::load(&m)?;
            let result = commands::simulate(&run, &solver.settings())?;
            if let Some(dir) = &m.out {
                commands::write_simulation(&result, dir)?;
            }
            print!("{}", commands::summarize(&result));
        }
        Command::Sweep {
            inputs,
            solver,
            channel,
            values,
            from,
            to,
            points,
            qubit,
            jobs,
        } => {
            let m = inputs.manifest()?;
            let values = match (from, to, points) {
                (Some(a), Some(b), Some(n)) => commands::linspace(a, b, n),
                _ => values,
            };
            if values.is_empty() {
                return Err(CliError::Validation("give --values or --from/--to/--points".into()));
            }
            let run = LoadedRun::load(&m)?;
            let spec = SweepSpec { channel, values, qubit, jobs };
            let points = commands::sweep(&run, &spec, &solver.settings())?;
            emit(m.out.as_ref(), &commands::sweep_csv(&points))?;
        }
        Command::Synth {
            shape,
            amp,
            sigma,
            n,
            dt,
            expr,
            name,
            out,
        } => {
            let shape = match shape {
                ShapeKind::Square => Shape::Square { amplitude: amp },
                ShapeKind::Gaussian => Shape::Gaussian { amplitude: amp, sigma },
                ShapeKind::Expression => {
                    Shape::Expression(expr.ok_or_else(|| CliError::Validation("--shape expression needs --expr".into()))?)
                }
            };
            emit(out.as_ref(), &commands::synth(&shape, n, dt, &name)?)?;
        }
        Command::Optimize {
            problem,
            max_iterations,
            target,
            out,
            verify,
            verify_dt,
            verify_out,
        } => {
            let text = read_file(&problem)?;
            let problem = ControlProblem::from_json(&text).map_err(|e| CliError::from(e).context(&problem.display().to_string()))?;
            let cfg = OptimizerConfig {
                max_iterations,
                target,
                ..Default::default()
            };
            let result = commands::optimize(&problem, &cfg)?;
            emit(out.as_ref(), &format!("{}\n", result_json(&problem, &result)))?;
            if out.is_some() {
                println!("fidelity = {:.6} after {} iterations (converged: {})", result.fidelity, result.iterations, result.converged);
            }
            if verify {
                let v = commands::verify_controls(&problem, &result.params, verify_dt)?;
                println!("verification: P(|1>) = {:.6}, <Z> = {:.6}", v.final_p1, v.final_z);
                if let Some(p) = &verify_out {
                    write_file(p, &v.result.to_csv())?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(qpulse_cli::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
