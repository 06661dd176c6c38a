use std::collections::BTreeSet;

use crate::ir::{Instruction, PulseLibrary};

use super::{CompileError, UniversalDecompositionTable};

/// An analog program plus the qubits its measurements read out.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredProgram {
    pub program: Instruction,
    pub measured: Vec<usize>,
}

/// Replaces every gate with its cmd-def composite, decomposing gates the
/// library does not calibrate. Measurements are removed and collected.
pub fn lower_to_pulses(
    program: &Instruction,
    lib: &PulseLibrary,
    table: &UniversalDecompositionTable,
) -> Result<LoweredProgram, CompileError> {
    let mut state = LowerState {
        lib,
        table,
        measured: BTreeSet::new(),
    };
    let lowered = match program {
        Instruction::Composite { .. } => state.lower_composite(program)?,
        other => state.lower_composite(&Instruction::composite("program", vec![other.clone()]))?,
    };
    Ok(LoweredProgram {
        program: lowered,
        measured: state.measured.into_iter().collect(),
    })
}

struct LowerState<'a> {
    lib: &'a PulseLibrary,
    table: &'a UniversalDecompositionTable,
    measured: BTreeSet<usize>,
}

impl LowerState<'_> {
    fn lower_composite(&mut self, node: &Instruction) -> Result<Instruction, CompileError> {
        let Instruction::Composite { name, children, t0 } = node else {
            unreachable!("called on composites only")
        };
        let mut out = Vec::with_capacity(children.len());
        for child in children {
            match child {
                Instruction::Gate { name, qubits, .. } if name.eq_ignore_ascii_case("measure") => {
                    self.measured.extend(qubits.iter().copied());
                }
                _ if child.is_analog() => out.push(child.clone()),
                Instruction::Gate { name, qubits, params } => {
                    if !self.measured.is_empty() {
                        return Err(CompileError::MidCircuitMeasurement(name.clone()));
                    }
                    out.push(self.lower_gate(name, qubits, params, &mut Vec::new())?);
                }
                Instruction::Composite { .. } => out.push(self.lower_composite(child)?),
                _ => unreachable!("leaves are analog"),
            }
        }
        Ok(Instruction::Composite {
            name: name.clone(),
            children: out,
            t0: *t0,
        })
    }

    fn lower_gate(
        &mut self,
        name: &str,
        qubits: &[usize],
        params: &[f64],
        stack: &mut Vec<String>,
    ) -> Result<Instruction, CompileError> {
        let key = name.to_lowercase();
        if let Some(def) = self.lib.cmd_def(&key, qubits) {
            if params.len() < def.arity() {
                return Err(CompileError::Arity {
                    gate: name.to_string(),
                    expected: def.arity(),
                    got: params.len(),
                });
            }
            return Ok(self.lib.instantiate(&key, qubits, params)?);
        }
        let rule = self.table.get(&key).ok_or_else(|| CompileError::NoLowering {
            gate: name.to_string(),
            qubits: qubits.to_vec(),
        })?;
        if stack.contains(&key) {
            stack.push(key);
            return Err(CompileError::Cycle(stack.join(" -> ")));
        }
        if params.len() != rule.arity {
            return Err(CompileError::Arity {
                gate: name.to_string(),
                expected: rule.arity,
                got: params.len(),
            });
        }
        if qubits.len() != rule.qubits {
            return Err(CompileError::QubitCount {
                gate: name.to_string(),
                expected: rule.qubits,
                got: qubits.len(),
            });
        }
        stack.push(key.clone());
        let mut parts = Vec::new();
        for (sub, sub_params) in rule.expand(params) {
            parts.push(self.lower_gate(&sub, qubits, &sub_params, stack)?);
        }
        stack.pop();
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Instruction::composite(&key, parts)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::decompose::{GateTemplate, Rewrite};
    use crate::hamiltonian::ChannelId;
    use crate::ir::{CmdDef, CmdDefAction, CmdDefEntry, LinearPhase};
    use crate::C64;

    fn library() -> PulseLibrary {
        let mut lib = PulseLibrary::new();
        lib.register_samples("X90p", vec![C64::new(0.1, 0.0); 4]).unwrap();
        lib.register_samples("CR", vec![C64::new(0.2, 0.0); 6]).unwrap();
        let d0 = ChannelId::drive(0);
        let fc = |t0: i64, text: &str| CmdDefEntry {
            channel: d0,
            t0,
            action: CmdDefAction::FrameChange(LinearPhase::parse(text).unwrap()),
        };
        let pulse = |t0: i64| CmdDefEntry {
            channel: d0,
            t0,
            action: CmdDefAction::Pulse("X90p".into()),
        };
        lib.add_cmd_def(CmdDef {
            name: "u3".into(),
            qubits: vec![0],
            sequence: vec![fc(0, "-(P2)"), pulse(0), fc(4, "-(P0)"), pulse(4), fc(8, "-(P1)")],
        })
        .unwrap();
        lib.add_cmd_def(CmdDef {
            name: "u2".into(),
            qubits: vec![0],
            sequence: vec![fc(0, "-(P1)"), pulse(0), fc(4, "-(P0)")],
        })
        .unwrap();
        lib.add_cmd_def(CmdDef {
            name: "cx".into(),
            qubits: vec![0, 1],
            sequence: vec![CmdDefEntry {
                channel: ChannelId::control(0),
                t0: 0,
                action: CmdDefAction::Pulse("CR".into()),
            }],
        })
        .unwrap();
        lib
    }

    fn lower(gates: Vec<Instruction>) -> Result<LoweredProgram, CompileError> {
        lower_to_pulses(&Instruction::composite("p", gates), &library(), &UniversalDecompositionTable::default())
    }

    #[test]
    fn x_lowers_through_u3() {
        let out = lower(vec![Instruction::gate("X", &[0], &[])]).unwrap();
        assert!(out.program.is_analog());
        let block = &out.program.children()[0];
        assert_eq!(block.name(), "pulse::u3_0");
        let expected = library().instantiate("u3", &[0], &[std::f64::consts::PI, 0.0, std::f64::consts::PI]).unwrap();
        assert_eq!(block, &expected);
    }

    #[test]
    fn h_uses_direct_u2() {
        let out = lower(vec![Instruction::gate("h", &[0], &[])]).unwrap();
        let expected = library().instantiate("u2", &[0], &[0.0, std::f64::consts::PI]).unwrap();
        assert_eq!(out.program.children()[0], expected);
        let cnot = lower(vec![Instruction::gate("CNOT", &[0, 1], &[])]).unwrap();
        assert_eq!(cnot.program.children()[0].name(), "pulse::cx_0_1");
    }

    #[test]
    fn analog_programs_pass_through() {
        let analog = Instruction::composite(
            "p",
            vec![Instruction::FrameChange {
                channel: ChannelId::drive(0),
                t0: 0,
                phase: 1.0,
            }],
        );
        let out = lower_to_pulses(&analog, &library(), &UniversalDecompositionTable::default()).unwrap();
        assert_eq!(out.program, analog);
        assert!(out.measured.is_empty());
    }

    #[test]
    fn measurements_are_collected_and_must_be_terminal() {
        let out = lower(vec![
            Instruction::gate("x", &[0], &[]),
            Instruction::gate("MEASURE", &[1], &[]),
            Instruction::gate("measure", &[0], &[]),
        ])
        .unwrap();
        assert_eq!(out.measured, vec![0, 1]);
        assert_eq!(out.program.children().len(), 1);
        let err = lower(vec![Instruction::gate("measure", &[0], &[]), Instruction::gate("x", &[0], &[])]).unwrap_err();
        assert!(matches!(err, CompileError::MidCircuitMeasurement(_)));
    }

    #[test]
    fn lowering_errors() {
        assert!(matches!(
            lower(vec![Instruction::gate("swap", &[0, 1], &[])]).unwrap_err(),
            CompileError::NoLowering { .. }
        ));
        assert!(matches!(
            lower(vec![Instruction::gate("x", &[3], &[])]).unwrap_err(),
            CompileError::NoLowering { .. }
        ));
        assert!(matches!(
            lower(vec![Instruction::gate("rx", &[0], &[])]).unwrap_err(),
            CompileError::Arity { .. }
        ));
        let mut table = UniversalDecompositionTable::empty();
        let to = |name: &'static str| Rewrite {
            arity: 0,
            qubits: 1,
            sequence: vec![GateTemplate { name, angles: vec![] }],
        };
        table.insert("a", to("b"));
        table.insert("b", to("a"));
        let err = lower_to_pulses(
            &Instruction::composite("p", vec![Instruction::gate("a", &[0], &[])]),
            &library(),
            &table,
        )
        .unwrap_err();
        assert!(matches!(err, CompileError::Cycle(ref s) if s == "a -> b -> a"));
    }
}
