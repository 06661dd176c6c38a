use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::expr::TimeExpression;
use crate::hamiltonian::ChannelId;
use crate::C64;

use super::{Instruction, LibraryError};

/// A frame-change phase `constant + Σ_k coeffs[k] * P_k` over the gate's
/// parameters `P0, P1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPhase {
    pub constant: f64,
    pub coeffs: Vec<f64>,
    /// Original string form, kept so the library serializes back as written.
    pub source: Option<String>,
}

impl LinearPhase {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            coeffs: Vec::new(),
            source: None,
        }
    }

    /// Parses an expression such as `-(P2)` or `P0 + 1.5707963267948966`,
    /// rejecting anything that is not affine in the parameters.
    pub fn parse(text: &str) -> Result<Self, String> {
        let expr = TimeExpression::parse(text).map_err(|e| e.to_string())?;
        let mut max_index: Option<usize> = None;
        for v in expr.variables() {
            let idx = v
                .strip_prefix('P')
                .and_then(|d| d.parse::<usize>().ok())
                .ok_or_else(|| format!("unknown parameter `{v}` (expected P0, P1, ...)"))?;
            max_index = Some(max_index.map_or(idx, |m| m.max(idx)));
        }
        let n = max_index.map_or(0, |m| m + 1);
        let names: Vec<String> = (0..n).map(|k| format!("P{k}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let bound = expr.bind(&refs).map_err(|e| e.to_string())?;
        let zero = vec![0.0; n];
        let constant = bound.eval_checked(&zero).map_err(|e| e.to_string())?;
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let mut unit = zero.clone();
            unit[k] = 1.0;
            coeffs.push(bound.eval(&unit) - constant);
        }
        let phase = Self {
            constant,
            coeffs,
            source: Some(text.to_string()),
        };
        for probe in [[0.37, -1.9, 2.6, 0.11], [-3.1, 0.7, -0.45, 5.2]] {
            let args: Vec<f64> = (0..n).map(|k| probe[k % 4] * (1.0 + k as f64)).collect();
            let direct = bound.eval(&args);
            let linear = phase.eval(&args);
            if !((direct - linear).abs() <= 1e-9 * (1.0 + direct.abs())) {
                return Err(format!("phase `{text}` is not linear in its parameters"));
            }
        }
        Ok(phase)
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(params).map(|(c, p)| c * p).sum::<f64>()
    }

    fn to_json(&self) -> Value {
        match &self.source {
            Some(s) => Value::String(s.clone()),
            None if self.coeffs.is_empty() => Value::from(self.constant),
            None => {
                let mut s = format!("{:?}", self.constant);
                for (k, c) in self.coeffs.iter().enumerate() {
                    if *c != 0.0 {
                        s.push_str(&format!(" + ({c:?})*P{k}"));
                    }
                }
                Value::String(s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CmdDefAction {
    Pulse(String),
    FrameChange(LinearPhase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmdDefEntry {
    pub channel: ChannelId,
    /// Relative to the gate start.
    pub t0: i64,
    pub action: CmdDefAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmdDef {
    pub name: String,
    pub qubits: Vec<usize>,
    pub sequence: Vec<CmdDefEntry>,
}

impl CmdDef {
    pub fn registry_key(&self) -> String {
        registry_key(&self.name, &self.qubits)
    }

    /// Number of gate parameters the frame-change phases refer to.
    pub fn arity(&self) -> usize {
        self.sequence
            .iter()
            .map(|e| match &e.action {
                CmdDefAction::FrameChange(p) => p.arity(),
                CmdDefAction::Pulse(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

/// `pulse::<name>_<q0>[_<q1>...]`, with the gate name lowercased.
pub fn registry_key(name: &str, qubits: &[usize]) -> String {
    let mut key = format!("pulse::{}", name.to_lowercase());
    for q in qubits {
        key.push_str(&format!("_{q}"));
    }
    key
}

/// Named sample arrays plus gate calibrations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseLibrary {
    pub samples: BTreeMap<String, Vec<C64>>,
    pub cmd_defs: BTreeMap<String, CmdDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLibrary {
    pulse_library: Vec<RawPulse>,
    cmd_def: Vec<RawCmdDef>,
}

#[derive(Deserialize, Serialize)]
struct RawPulse {
    name: String,
    samples: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawCmdDef {
    name: String,
    qubits: Vec<usize>,
    sequence: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    ch: String,
    name: String,
    t0: i64,
    #[serde(default)]
    phase: Option<Value>,
}

impl PulseLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(json_text: &str) -> Result<Self, LibraryError> {
        let raw: RawLibrary = serde_json::from_str(json_text).map_err(|e| LibraryError::Json(e.to_string()))?;
        let mut lib = Self::new();
        for p in raw.pulse_library {
            let samples = p.samples.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            lib.register_samples(&p.name, samples)?;
        }
        for def in raw.cmd_def {
            let mut sequence = Vec::with_capacity(def.sequence.len());
            for e in def.sequence {
                let channel: ChannelId = e.ch.parse().map_err(|_| LibraryError::InvalidChannel(e.ch.clone()))?;
                let action = if e.name == "fc" {
                    let phase = e.phase.ok_or_else(|| LibraryError::MissingField {
                        context: format!("frame change in cmd-def `{}`", def.name),
                        field: "phase".into(),
                    })?;
                    CmdDefAction::FrameChange(parse_phase(&def.name, &phase)?)
                } else {
                    CmdDefAction::Pulse(e.name)
                };
                sequence.push(CmdDefEntry {
                    channel,
                    t0: e.t0,
                    action,
                });
            }
            lib.add_cmd_def(CmdDef {
                name: def.name,
                qubits: def.qubits,
                sequence,
            })?;
        }
        Ok(lib)
    }

    /// Library JSON in the same shape `from_json` reads.
    pub fn to_json(&self) -> String {
        let pulses: Vec<Value> = self
            .samples
            .iter()
            .map(|(name, s)| {
                serde_json::json!({
                    "name": name,
                    "samples": s.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        let defs: Vec<Value> = self
            .cmd_defs
            .values()
            .map(|d| {
                let seq: Vec<Value> = d
                    .sequence
                    .iter()
                    .map(|e| match &e.action {
                        CmdDefAction::Pulse(name) => serde_json::json!({"ch": e.channel.to_string(), "name": name, "t0": e.t0}),
                        CmdDefAction::FrameChange(p) => serde_json::json!({
                            "ch": e.channel.to_string(), "name": "fc", "phase": p.to_json(), "t0": e.t0
                        }),
                    })
                    .collect();
                serde_json::json!({"name": d.name, "qubits": d.qubits, "sequence": seq})
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({"pulse_library": pulses, "cmd_def": defs}))
            .expect("library serializes")
    }

    /// Registers `samples` under `name`. Re-registering identical samples is
    /// a no-op.
    pub fn register_samples(&mut self, name: &str, samples: Vec<C64>) -> Result<(), LibraryError> {
        if samples.is_empty() {
            return Err(LibraryError::EmptyPulse(name.to_string()));
        }
        if samples.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LibraryError::NonFiniteSample(name.to_string()));
        }
        match self.samples.get(name) {
            Some(existing) if *existing == samples => Ok(()),
            Some(_) => Err(LibraryError::DuplicatePulse(name.to_string())),
            None => {
                self.samples.insert(name.to_string(), samples);
                Ok(())
            }
        }
    }

    /// Registers the samples and returns a pulse instruction at t0 = 0.
    pub fn create_pulse(&mut self, name: &str, channel: ChannelId, samples: Vec<C64>) -> Result<Instruction, LibraryError> {
        let duration = samples.len() as i64;
        self.register_samples(name, samples)?;
        Ok(Instruction::Pulse {
            name: name.to_string(),
            channel,
            t0: 0,
            duration,
            sample_ref: name.to_string(),
        })
    }

    pub fn add_cmd_def(&mut self, def: CmdDef) -> Result<(), LibraryError> {
        for e in &def.sequence {
            if e.t0 < 0 {
                return Err(LibraryError::NegativeTime(def.registry_key()));
            }
            if let CmdDefAction::Pulse(p) = &e.action {
                if !self.samples.contains_key(p) {
                    return Err(LibraryError::UnknownPulse {
                        cmd_def: def.name.clone(),
                        pulse: p.clone(),
                    });
                }
            }
        }
        self.cmd_defs.insert(def.registry_key(), def);
        Ok(())
    }

    pub fn cmd_def(&self, name: &str, qubits: &[usize]) -> Option<&CmdDef> {
        self.cmd_defs.get(&registry_key(name, qubits))
    }

    pub fn has_cmd_def(&self, name: &str, qubits: &[usize]) -> bool {
        self.cmd_def(name, qubits).is_some()
    }

    /// Copies a cmd-def into a composite with relative times and phases
    /// evaluated at `params`. Frame changes whose phase is exactly zero are
    /// left out.
    pub fn instantiate(&self, name: &str, qubits: &[usize], params: &[f64]) -> Result<Instruction, LibraryError> {
        let key = registry_key(name, qubits);
        let def = self.cmd_defs.get(&key).ok_or_else(|| LibraryError::UnknownCmdDef(key.clone()))?;
        if params.len() < def.arity() {
            return Err(LibraryError::ParameterCount {
                cmd_def: key,
                expected: def.arity(),
                got: params.len(),
            });
        }
        let mut children = Vec::with_capacity(def.sequence.len());
        for e in &def.sequence {
            match &e.action {
                CmdDefAction::Pulse(p) => children.push(Instruction::Pulse {
                    name: p.clone(),
                    channel: e.channel,
                    t0: e.t0,
                    duration: self.samples[p].len() as i64,
                    sample_ref: p.clone(),
                }),
                CmdDefAction::FrameChange(phase) => {
                    let value = phase.eval(params);
                    if value != 0.0 {
                        children.push(Instruction::FrameChange {
                            channel: e.channel,
                            t0: e.t0,
                            phase: value,
                        });
                    }
                }
            }
        }
        Ok(Instruction::Composite {
            name: key,
            children,
            t0: 0,
        })
    }
}

fn parse_phase(cmd_def: &str, value: &Value) -> Result<LinearPhase, LibraryError> {
    let invalid = |message: String| LibraryError::InvalidPhase {
        cmd_def: cmd_def.to_string(),
        message,
    };
    match value {
        Value::Number(n) => n
            .as_f64()
            .map(LinearPhase::constant)
            .ok_or_else(|| invalid(format!("{n} is not a finite number"))),
        Value::String(s) => LinearPhase::parse(s).map_err(invalid),
        other => Err(invalid(format!("expected a number or expression, got {other}"))),
    }
}
