//! Per-channel playback of a deck: which pulse is active, accumulated frame
//! phase, and the LO-mixed drive signal.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::expr::{BoundExpression, TimeExpression};
use crate::hamiltonian::{ChannelId, ChannelKind};
use crate::ir::{Deck, PulseLibrary};
use crate::C64;

use super::SimulationError;

/// Sample period and LO frequencies (rad/ns) of every channel, plus optional
/// analytic signals that replace a channel's deck playback entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub dt: f64,
    pub lo_freqs_d: Vec<f64>,
    pub lo_freqs_u: Vec<f64>,
    pub analytic_overrides: BTreeMap<ChannelId, TimeExpression>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dt: f64,
    #[serde(default)]
    lo_freqs_d: Vec<f64>,
    #[serde(default)]
    lo_freqs_u: Vec<f64>,
    #[serde(default)]
    analytic_overrides: BTreeMap<String, String>,
}

impl ChannelConfig {
    pub fn new(dt: f64, lo_freqs_d: Vec<f64>) -> Self {
        Self {
            dt,
            lo_freqs_d,
            lo_freqs_u: Vec::new(),
            analytic_overrides: BTreeMap::new(),
        }
    }

    pub fn from_json(json_text: &str) -> Result<Self, SimulationError> {
        let raw: RawConfig =
            serde_json::from_str(json_text).map_err(|e| SimulationError::InvalidConfig(e.to_string()))?;
        let mut analytic_overrides = BTreeMap::new();
        for (ch, text) in raw.analytic_overrides {
            let id: ChannelId = ch
                .parse()
                .map_err(|_| SimulationError::InvalidConfig(format!("invalid channel `{ch}`")))?;
            analytic_overrides.insert(id, TimeExpression::parse(&text)?);
        }
        let cfg = Self {
            dt: raw.dt,
            lo_freqs_d: raw.lo_freqs_d,
            lo_freqs_u: raw.lo_freqs_u,
            analytic_overrides,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let overrides: BTreeMap<String, String> = self
            .analytic_overrides
            .iter()
            .map(|(k, v)| (k.to_string(), v.source().to_string()))
            .collect();
        let mut value = serde_json::json!({
            "dt": self.dt,
            "lo_freqs_d": self.lo_freqs_d,
            "lo_freqs_u": self.lo_freqs_u,
        });
        if !overrides.is_empty() {
            value["analytic_overrides"] = serde_json::json!(overrides);
        }
        serde_json::to_string_pretty(&value).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimulationError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.lo_freqs_d.iter().chain(&self.lo_freqs_u).any(|f| !f.is_finite()) {
            return Err(SimulationError::InvalidConfig("LO frequencies must be finite".into()));
        }
        Ok(())
    }

    pub fn lo_freq(&self, ch: ChannelId) -> Option<f64> {
        match ch.kind {
            ChannelKind::Drive => self.lo_freqs_d.get(ch.index).copied(),
            ChannelKind::Control => self.lo_freqs_u.get(ch.index).copied(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduledPulse {
    pub name: String,
    pub t0: i64,
    pub duration: i64,
    pub samples: Arc<[C64]>,
}

/// One channel's slice of the deck, time-sorted.
#[derive(Debug, Clone, Default)]
pub struct ChannelSchedule {
    pub pulses: Vec<ScheduledPulse>,
    /// `(t0, phase)` pairs.
    pub frame_changes: Vec<(i64, f64)>,
}

impl ChannelSchedule {
    /// Splits a deck by channel, resolving sample references. Pulses on one
    /// channel must not overlap.
    pub fn from_deck(deck: &Deck, lib: &PulseLibrary) -> Result<BTreeMap<ChannelId, ChannelSchedule>, SimulationError> {
        let mut cache: BTreeMap<&str, Arc<[C64]>> = BTreeMap::new();
        let mut out: BTreeMap<ChannelId, ChannelSchedule> = BTreeMap::new();
        for e in &deck.entries {
            let sched = out.entry(e.channel).or_default();
            if let Some(phase) = e.phase {
                sched.frame_changes.push((e.time, phase));
                continue;
            }
            let samples = match cache.get(e.name.as_str()) {
                Some(s) => s.clone(),
                None => {
                    let s: Arc<[C64]> = lib
                        .samples
                        .get(&e.name)
                        .ok_or_else(|| SimulationError::UnknownPulse(e.name.clone()))?
                        .as_slice()
                        .into();
                    cache.insert(e.name.as_str(), s.clone());
                    s
                }
            };
            if samples.len() as i64 != e.duration {
                return Err(SimulationError::InvalidDeck(format!(
                    "pulse `{}` at {} has duration {} but {} samples",
                    e.name,
                    e.time,
                    e.duration,
                    samples.len()
                )));
            }
            sched.pulses.push(ScheduledPulse {
                name: e.name.clone(),
                t0: e.time,
                duration: e.duration,
                samples,
            });
        }
        for (ch, sched) in out.iter_mut() {
            sched.pulses.sort_by_key(|p| p.t0);
            sched.frame_changes.sort_by_key(|f| f.0);
            for w in sched.pulses.windows(2) {
                if w[1].t0 < w[0].t0 + w[0].duration {
                    return Err(SimulationError::InvalidDeck(format!(
                        "pulses `{}` and `{}` overlap on channel {ch}",
                        w[0].name, w[1].name
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Sample indices where the channel's signal may jump.
    pub fn boundaries(&self) -> impl Iterator<Item = i64> + '_ {
        self.pulses
            .iter()
            .flat_map(|p| p.t0..=p.t0 + p.duration)
            .chain(self.frame_changes.iter().map(|f| f.0))
    }

    pub fn end(&self) -> i64 {
        let p = self.pulses.iter().map(|p| p.t0 + p.duration).max().unwrap_or(0);
        let f = self.frame_changes.iter().map(|f| f.0).max().unwrap_or(0);
        p.max(f)
    }
}

/// Playback cursor of one channel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelState {
    pub active_pulse: Option<usize>,
    pub next_pulse: usize,
    pub next_frame_change: usize,
    pub accumulated_phase: f64,
}

// Time comparisons against sample boundaries tolerate rounding in k*dt.
fn reached(t: f64, sample: i64, dt: f64) -> bool {
    t >= sample as f64 * dt - 1e-9 * dt
}

/// Advances `state` to time `t` (ns); `t` must not decrease between calls.
/// Frame changes with `t0*dt <= t` are applied exactly once.
pub fn channel_tick(state: &mut ChannelState, schedule: &ChannelSchedule, t: f64, dt: f64) {
    while let Some(&(t0, phase)) = schedule.frame_changes.get(state.next_frame_change) {
        if !reached(t, t0, dt) {
            break;
        }
        state.accumulated_phase += phase;
        state.next_frame_change += 1;
    }
    while let Some(p) = schedule.pulses.get(state.next_pulse) {
        if !reached(t, p.t0, dt) {
            break;
        }
        state.active_pulse = Some(state.next_pulse);
        state.next_pulse += 1;
    }
    if let Some(i) = state.active_pulse {
        let p = &schedule.pulses[i];
        if reached(t, p.t0 + p.duration, dt) {
            state.active_pulse = None;
        }
    }
}

/// Zero-order-hold envelope of the active pulse at `t`, or 0.
pub fn envelope(state: &ChannelState, schedule: &ChannelSchedule, t: f64, dt: f64) -> C64 {
    match state.active_pulse {
        None => C64::new(0.0, 0.0),
        Some(i) => {
            let p = &schedule.pulses[i];
            let k = ((t - p.t0 as f64 * dt) / dt + 1e-9).floor();
            let k = (k.max(0.0) as usize).min(p.samples.len() - 1);
            p.samples[k]
        }
    }
}

/// `Re[s · e^{i(ν t + φ)}]`.
pub fn mix(sample: C64, lo_freq: f64, phase: f64, t: f64) -> f64 {
    (sample * C64::from_polar(1.0, lo_freq * t + phase)).re
}

enum Source {
    Deck {
        schedule: ChannelSchedule,
        state: ChannelState,
        lo_freq: f64,
        sample: C64,
        phase: f64,
    },
    Analytic(BoundExpression),
    Silent,
}

/// Drives every Hamiltonian channel from a deck during integration. The
/// envelope sample and frame phase are latched at the start of each step;
/// steps never cross sample boundaries, so this is exact zero-order hold.
pub struct ChannelController {
    dt: f64,
    channels: Vec<(ChannelId, Source)>,
}

impl ChannelController {
    pub fn new(
        channels: &[ChannelId],
        deck: &Deck,
        lib: &PulseLibrary,
        cfg: &ChannelConfig,
    ) -> Result<Self, SimulationError> {
        cfg.validate()?;
        let mut schedules = ChannelSchedule::from_deck(deck, lib)?;
        for ch in schedules.keys() {
            if !channels.contains(ch) {
                return Err(SimulationError::InvalidDeck(format!(
                    "deck plays on channel {ch}, which no Hamiltonian term uses"
                )));
            }
        }
        let mut out = Vec::with_capacity(channels.len());
        for &ch in channels {
            let source = if let Some(expr) = cfg.analytic_overrides.get(&ch) {
                Source::Analytic(expr.bind(&["t"])?)
            } else if let Some(schedule) = schedules.remove(&ch) {
                let lo_freq = cfg.lo_freq(ch).ok_or_else(|| {
                    SimulationError::InvalidConfig(format!("no LO frequency configured for channel {ch}"))
                })?;
                Source::Deck {
                    schedule,
                    state: ChannelState::default(),
                    lo_freq,
                    sample: C64::new(0.0, 0.0),
                    phase: 0.0,
                }
            } else {
                Source::Silent
            };
            out.push((ch, source));
        }
        Ok(Self { dt: cfg.dt, channels: out })
    }

    pub fn channels(&self) -> impl Iterator<Item = ChannelId> + '_ {
        self.channels.iter().map(|(c, _)| *c)
    }

    /// Sample indices at which some channel's signal may jump.
    pub fn boundaries(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self
            .channels
            .iter()
            .filter_map(|(_, s)| match s {
                Source::Deck { schedule, .. } => Some(schedule.boundaries().collect::<Vec<_>>()),
                _ => None,
            })
            .flatten()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Last sample index touched by the deck.
    pub fn end(&self) -> i64 {
        self.channels
            .iter()
            .map(|(_, s)| match s {
                Source::Deck { schedule, .. } => schedule.end(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn has_analytic(&self) -> bool {
        self.channels.iter().any(|(_, s)| matches!(s, Source::Analytic(_)))
    }

    pub fn begin_step(&mut self, t: f64) {
        let dt = self.dt;
        for (_, source) in &mut self.channels {
            if let Source::Deck {
                schedule,
                state,
                sample,
                phase,
                ..
            } = source
            {
                channel_tick(state, schedule, t, dt);
                *sample = envelope(state, schedule, t, dt);
                *phase = state.accumulated_phase;
            }
        }
    }

    /// Drive values `d_j(t)` in channel order.
    pub fn signals(&self, t: f64, out: &mut [f64]) {
        for ((_, source), d) in self.channels.iter().zip(out.iter_mut()) {
            *d = match source {
                Source::Deck {
                    lo_freq, sample, phase, ..
                } => {
                    if sample.re == 0.0 && sample.im == 0.0 {
                        0.0
                    } else {
                        mix(*sample, *lo_freq, *phase, t)
                    }
                }
                Source::Analytic(expr) => expr.eval(&[t]),
                Source::Silent => 0.0,
            };
        }
    }

    /// Accumulated frame phase per deck-driven channel.
    pub fn phases(&self) -> Vec<(ChannelId, f64)> {
        self.channels
            .iter()
            .filter_map(|(c, s)| match s {
                Source::Deck { state, .. } => Some((*c, state.accumulated_phase)),
                _ => None,
            })
            .collect()
    }
}
