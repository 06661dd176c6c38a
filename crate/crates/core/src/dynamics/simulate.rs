use std::collections::BTreeMap;

use serde::Serialize;

use crate::hamiltonian::{product_matrix, HamiltonianModel, Operator, OperatorKind, OperatorProduct};
use crate::ir::{Deck, PulseLibrary};
use crate::ode::{integrate, OdeSystem, Rk23Options};
use crate::sparse::CsrMatrix;
use crate::C64;

use super::channels::{ChannelConfig, ChannelController};
use super::superop::Superoperators;
use super::{sample_shots, DensityMatrix, LindbladSpec, SimulationError};

/// Leakage below this is treated as numerical noise and the qubit-subspace
/// distribution is renormalized.
pub const LEAKAGE_RENORMALIZE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    /// End time in ns; defaults to the end of the deck.
    pub t_max: Option<f64>,
    /// Output grid spacing in ns; defaults to the sample period.
    pub output_step: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to dt/10.
    pub initial_step: Option<f64>,
    /// Defaults to dt.
    pub max_step: Option<f64>,
    /// Defaults to |0…0⟩⟨0…0|.
    pub initial: Option<DensityMatrix>,
    /// Subsystems read out at the end; defaults to all of them.
    pub measured: Option<Vec<usize>>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            t_max: None,
            output_step: None,
            rtol: 1e-6,
            atol: 1e-8,
            initial_step: None,
            max_step: None,
            initial: None,
            measured: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsystemSeries {
    pub subsystem: usize,
    pub dim: usize,
    /// `levels[k][t]`: probability of level k at output time t.
    pub levels: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub n: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Largest |Tr ρ − 1| over every accepted step.
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub time_grid: Vec<f64>,
    /// `populations[t][i]`: probability of basis state i (subsystem 0 most
    /// significant) at output time t.
    pub populations: Vec<Vec<f64>>,
    pub subsystems: Vec<SubsystemSeries>,
    pub measured: Vec<usize>,
    /// Bitstrings over the measured subsystems' {0, 1} levels, lowest
    /// subsystem leftmost.
    pub final_distribution: BTreeMap<String, f64>,
    /// Probability of level ≥ 2 per measured subsystem.
    pub leakage: BTreeMap<usize, f64>,
    /// Probability that any measured subsystem left its {0, 1} levels.
    pub total_leakage: f64,
    pub renormalized: bool,
    /// Marginal over all levels of the measured subsystems; keys list each
    /// subsystem's level as a digit. Shots are drawn from this.
    pub outcome_distribution: BTreeMap<String, f64>,
    pub shots: Option<BTreeMap<String, u64>>,
    pub stats: SolverStats,
    #[serde(skip)]
    pub final_state: DensityMatrix,
}

impl SimulationResult {
    pub fn subsystem(&self, index: usize) -> Option<&SubsystemSeries> {
        self.subsystems.iter().find(|s| s.subsystem == index)
    }

    /// Final probability that `subsystem` is in `level`.
    pub fn final_level_probability(&self, subsystem: usize, level: usize) -> f64 {
        self.subsystem(subsystem)
            .and_then(|s| s.levels.get(level))
            .and_then(|v| v.last().copied())
            .unwrap_or(0.0)
    }

    /// Largest probability of `level` on `subsystem` over the output grid.
    pub fn peak_level_probability(&self, subsystem: usize, level: usize) -> f64 {
        self.subsystem(subsystem)
            .and_then(|s| s.levels.get(level))
            .map(|v| v.iter().copied().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    pub fn sample_shots(&mut self, n_shots: u64, seed: u64) -> Result<(), SimulationError> {
        self.shots = Some(sample_shots(&self.outcome_distribution, n_shots, seed)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Time series: `t`, then per subsystem its level populations and
    /// ⟨X⟩, ⟨Y⟩, ⟨Z⟩, ⟨N⟩.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["t".to_string()];
        for s in &self.subsystems {
            for k in 0..s.dim {
                header.push(format!("q{}_P{k}", s.subsystem));
            }
            for obs in ["X", "Y", "Z", "N"] {
                header.push(format!("q{}_{obs}", s.subsystem));
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for (i, t) in self.time_grid.iter().enumerate() {
            let mut row = vec![format!("{t}")];
            for s in &self.subsystems {
                row.extend(s.levels.iter().map(|l| format!("{}", l[i])));
                row.extend([s.x[i], s.y[i], s.z[i], s.n[i]].iter().map(|v| format!("{v}")));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

struct MasterEquation {
    supers: Superoperators,
    controller: ChannelController,
    drives: Vec<f64>,
}

impl OdeSystem for MasterEquation {
    fn begin_step(&mut self, t: f64) {
        self.controller.begin_step(t);
    }

    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.controller.signals(t, &mut self.drives);
        self.supers.apply(&self.drives, y, dy);
    }
}

struct Recorder {
    dims: Vec<usize>,
    /// Per basis index, the level of each subsystem in tensor order.
    digits: Vec<Vec<usize>>,
    observables: Vec<[CsrMatrix; 4]>,
    time_grid: Vec<f64>,
    populations: Vec<Vec<f64>>,
    series: Vec<SubsystemSeries>,
}

impl Recorder {
    fn new(model: &HamiltonianModel) -> Result<Self, SimulationError> {
        let dims = model.subsystem_dims();
        let d = model.dimension();
        let digits = (0..d)
            .map(|mut i| {
                let mut out = vec![0; dims.len()];
                for (pos, dim) in dims.iter().enumerate().rev() {
                    out[pos] = i % dim;
                    i /= dim;
                }
                out
            })
            .collect();
        let mut observables = Vec::new();
        let mut series = Vec::new();
        for (&index, &dim) in &model.dims {
            let op = |kind| {
                product_matrix(
                    &OperatorProduct {
                        weight: 1.0,
                        factors: vec![Operator { kind, subsystem: index }],
                    },
                    &model.dims,
                )
            };
            observables.push([
                op(OperatorKind::PauliX)?,
                op(OperatorKind::PauliY)?,
                op(OperatorKind::PauliZ)?,
                op(OperatorKind::NumberN)?,
            ]);
            series.push(SubsystemSeries {
                subsystem: index,
                dim,
                levels: vec![Vec::new(); dim],
                x: Vec::new(),
                y: Vec::new(),
                z: Vec::new(),
                n: Vec::new(),
            });
        }
        Ok(Self {
            dims,
            digits,
            observables,
            time_grid: Vec::new(),
            populations: Vec::new(),
            series,
        })
    }

    fn record(&mut self, t: f64, rho: &DensityMatrix) {
        let pops = rho.populations();
        for (pos, s) in self.series.iter_mut().enumerate() {
            let mut levels = vec![0.0; self.dims[pos]];
            for (i, p) in pops.iter().enumerate() {
                levels[self.digits[i][pos]] += p;
            }
            for (k, l) in levels.into_iter().enumerate() {
                s.levels[k].push(l);
            }
            let [x, y, z, n] = &self.observables[pos];
            s.x.push(rho.expectation(x).re);
            s.y.push(rho.expectation(y).re);
            s.z.push(rho.expectation(z).re);
            s.n.push(rho.expectation(n).re);
        }
        self.time_grid.push(t);
        self.populations.push(pops);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Integrates dρ/dt = 𝓛₀ρ + Σ_j d_j(t) 𝓛_j ρ for the deck's drive signals
/// and reads out the final state.
pub fn integrate_master_equation(
    model: &HamiltonianModel,
    lind: &LindbladSpec,
    cfg: &ChannelConfig,
    deck: &Deck,
    lib: &PulseLibrary,
    opts: &SimulationOptions,
) -> Result<SimulationResult, SimulationError> {
    cfg.validate()?;
    let d = model.dimension();
    let supers = Superoperators::assemble(model, lind)?;
    let channel_ids: Vec<_> = supers.channels.iter().map(|(c, _)| *c).collect();
    let controller = ChannelController::new(&channel_ids, deck, lib, cfg)?;
    let dt = cfg.dt;

    let deck_end = deck.end_time().max(controller.end()) as f64 * dt;
    let t_end = opts.t_max.unwrap_or(deck_end);
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SimulationError::InvalidOptions(format!("t_max must be non-negative, got {t_end}")));
    }
    let out_step = opts.output_step.unwrap_or(dt);
    if !(out_step > 0.0) {
        return Err(SimulationError::InvalidOptions("output step must be positive".into()));
    }

    let measured = match &opts.measured {
        Some(m) if !m.is_empty() => {
            let mut m = m.clone();
            m.sort_unstable();
            m.dedup();
            if let Some(bad) = m.iter().find(|q| !model.dims.contains_key(q)) {
                return Err(SimulationError::InvalidOptions(format!("measured subsystem {bad} is not in the model")));
            }
            m
        }
        _ => model.dims.keys().copied().collect(),
    };

    let mut rho = match &opts.initial {
        Some(r) if r.dim() != d => {
            return Err(SimulationError::InvalidInitialState(format!(
                "initial state has dimension {}, model has {d}",
                r.dim()
            )))
        }
        Some(r) => r.clone(),
        None => DensityMatrix::ground(d),
    };

    // output grid, landing exactly on t_end
    let mut outputs: Vec<f64> = Vec::new();
    let n_out = (t_end / out_step + 1e-9).floor() as usize;
    for k in 1..=n_out {
        outputs.push(k as f64 * out_step);
    }
    if outputs.last().map_or(t_end > 0.0, |last| !close(*last, t_end)) {
        outputs.push(t_end);
    }
    let mut stops: Vec<f64> = controller
        .boundaries()
        .into_iter()
        .map(|k| k as f64 * dt)
        .filter(|t| *t > 0.0 && *t < t_end)
        .chain(outputs.iter().copied())
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| close(*a, *b));

    let mut recorder = Recorder::new(model)?;
    recorder.record(0.0, &rho);
    let mut trace_err = (rho.trace() - C64::new(1.0, 0.0)).norm();

    let ode_opts = Rk23Options {
        rtol: opts.rtol,
        atol: opts.atol,
        initial_step: opts.initial_step.unwrap_or(dt / 10.0),
        max_step: opts.max_step.unwrap_or(dt),
        ..Default::default()
    };
    let mut system = MasterEquation {
        drives: vec![0.0; supers.channels.len()],
        supers,
        controller,
    };
    let mut next_output = 0usize;
    let stats = {
        let mut state = DensityMatrix::ground(d);
        integrate(
            &mut system,
            rho.as_mut_slice(),
            0.0,
            t_end,
            &stops,
            &ode_opts,
            |t, y, is_stop| {
                let tr: C64 = (0..d).map(|k| y[k * d + k]).sum();
                trace_err = trace_err.max((tr - C64::new(1.0, 0.0)).norm());
                if is_stop && next_output < outputs.len() && close(t, outputs[next_output]) {
                    state.as_mut_slice().copy_from_slice(y);
                    recorder.record(t, &state);
                    next_output += 1;
                }
            },
        )?
    };

    let (final_distribution, leakage, total_leakage, renormalized, outcome_distribution) =
        readout(&rho, &recorder, model, &measured);

    Ok(SimulationResult {
        time_grid: recorder.time_grid,
        populations: recorder.populations,
        subsystems: recorder.series,
        measured,
        final_distribution,
        leakage,
        total_leakage,
        renormalized,
        outcome_distribution,
        shots: None,
        stats: SolverStats {
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            rhs_evaluations: stats.rhs_evals,
            max_trace_error: trace_err,
        },
        final_state: rho,
    })
}

type Readout = (BTreeMap<String, f64>, BTreeMap<usize, f64>, f64, bool, BTreeMap<String, f64>);

fn readout(rho: &DensityMatrix, rec: &Recorder, model: &HamiltonianModel, measured: &[usize]) -> Readout {
    let order: Vec<usize> = model.dims.keys().copied().collect();
    let positions: Vec<usize> = measured
        .iter()
        .map(|q| order.iter().position(|o| o == q).expect("validated"))
        .collect();
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    let mut outcomes: BTreeMap<String, f64> = BTreeMap::new();
    let mut leakage: BTreeMap<usize, f64> = measured.iter().map(|q| (*q, 0.0)).collect();
    let mut total_leakage = 0.0;
    for (i, p) in rho.populations().into_iter().enumerate() {
        let p = p.max(0.0);
        let levels: Vec<usize> = positions.iter().map(|&pos| rec.digits[i][pos]).collect();
        let key: String = levels.iter().map(|l| l.to_string()).collect();
        *outcomes.entry(key.clone()).or_insert(0.0) += p;
        let mut leaked = false;
        for (q, l) in measured.iter().zip(&levels) {
            if *l >= 2 {
                *leakage.get_mut(q).unwrap() += p;
                leaked = true;
            }
        }
        if leaked {
            total_leakage += p;
        } else {
            *dist.entry(key).or_insert(0.0) += p;
        }
    }
    let renormalized = total_leakage < LEAKAGE_RENORMALIZE_THRESHOLD;
    if renormalized {
        let sum: f64 = dist.values().sum();
        if sum > 0.0 {
            dist.values_mut().for_each(|v| *v /= sum);
        }
    }
    (dist, leakage, total_leakage, renormalized, outcomes)
}
