use crate::ir::Instruction;

use super::CompileError;

/// Block scheduling of an analog program starting at `start`.
///
/// Leaves keep their offset from the enclosing composite's start. Each child
/// composite starts at the current end of everything scheduled so far, so
/// gate blocks run back to back with their internal timing intact.
/// Scheduling an already scheduled program again is a no-op.
pub fn schedule(program: &Instruction, start: i64) -> Result<Instruction, CompileError> {
    if !program.is_analog() {
        return Err(CompileError::NotAnalog(program.name().to_string()));
    }
    let mut end = start;
    match program {
        Instruction::Composite { .. } => place(program, start, &mut end),
        leaf => {
            let mut leaf = leaf.clone();
            let t0 = leaf.t0() + start;
            check(t0)?;
            leaf.set_start(t0);
            Ok(leaf)
        }
    }
}

fn check(t0: i64) -> Result<(), CompileError> {
    if t0 < 0 {
        Err(CompileError::NegativeStart(t0))
    } else {
        Ok(())
    }
}

fn place(node: &Instruction, new_start: i64, end: &mut i64) -> Result<Instruction, CompileError> {
    let Instruction::Composite { name, children, t0 } = node else {
        unreachable!("place is called on composites")
    };
    check(new_start)?;
    let mut out = Vec::with_capacity(children.len());
    for child in children {
        if child.is_composite() {
            let placed = place(child, *end, end)?;
            out.push(placed);
        } else {
            let mut leaf = child.clone();
            let shifted = child.t0() - t0 + new_start;
            check(shifted)?;
            leaf.set_start(shifted);
            *end = (*end).max(leaf.end_time());
            out.push(leaf);
        }
    }
    Ok(Instruction::Composite {
        name: name.clone(),
        children: out,
        t0: new_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ChannelId;
    use proptest::prelude::*;

    fn pulse(ch: usize, t0: i64, duration: i64) -> Instruction {
        Instruction::Pulse {
            name: format!("p{ch}"),
            channel: ChannelId::drive(ch),
            t0,
            duration,
            sample_ref: format!("p{ch}"),
        }
    }

    fn block(children: Vec<Instruction>) -> Instruction {
        Instruction::composite("block", children)
    }

    #[test]
    fn sequential_blocks() {
        let gate = block(vec![pulse(0, 0, 28)]);
        let program = Instruction::composite("p", vec![gate.clone(), gate]);
        let scheduled = schedule(&program, 0).unwrap();
        let flat = scheduled.as_flat_pulse_list().unwrap();
        assert_eq!(flat.iter().map(Instruction::t0).collect::<Vec<_>>(), vec![0, 28]);

        let gate = block(vec![
            pulse(0, 0, 28),
            Instruction::FrameChange {
                channel: ChannelId::drive(0),
                t0: 29,
                phase: 1.0,
            },
        ]);
        let program = Instruction::composite("p", vec![gate.clone(), gate]);
        let flat = schedule(&program, 0).unwrap().as_flat_pulse_list().unwrap();
        assert_eq!(flat.iter().map(Instruction::t0).collect::<Vec<_>>(), vec![0, 29, 29, 58]);
    }

    #[test]
    fn single_block_and_empty_program() {
        let program = Instruction::composite("p", vec![block(vec![pulse(0, 0, 5), pulse(1, 2, 3)])]);
        assert_eq!(schedule(&program, 0).unwrap(), program);
        let empty = Instruction::composite("p", vec![]);
        let s = schedule(&empty, 7).unwrap();
        assert_eq!(s.children().len(), 0);
        assert_eq!(s.end_time(), 7);
        assert!(schedule(&Instruction::composite("g", vec![Instruction::gate("x", &[0], &[])]), 0).is_err());
        assert!(matches!(schedule(&program, -3), Err(CompileError::NegativeStart(-3))));
    }

    fn arb_block() -> impl Strategy<Value = Instruction> {
        proptest::collection::vec((0usize..3, 0i64..20, 1i64..10), 1..5).prop_map(|leaves| {
            // one pulse per channel per block keeps channels overlap-free
            let mut seen = std::collections::BTreeSet::new();
            block(
                leaves
                    .into_iter()
                    .filter(|(ch, _, _)| seen.insert(*ch))
                    .map(|(ch, t0, d)| pulse(ch, t0, d))
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn scheduling_properties(blocks in proptest::collection::vec(arb_block(), 0..6), start in 0i64..50) {
            let program = Instruction::composite("p", blocks.clone());
            let scheduled = schedule(&program, start).unwrap();

            // atomicity: pairwise offsets inside each block survive
            for (before, after) in blocks.iter().zip(scheduled.children()) {
                let b: Vec<i64> = before.children().iter().map(Instruction::t0).collect();
                let a: Vec<i64> = after.children().iter().map(Instruction::t0).collect();
                for i in 0..b.len() {
                    for j in 0..b.len() {
                        prop_assert_eq!(b[i] - b[j], a[i] - a[j]);
                    }
                }
            }

            // same-channel pulses never overlap
            let flat = scheduled.as_flat_pulse_list().unwrap();
            for ch in 0..3 {
                let mut prev_end = i64::MIN;
                for p in flat.iter().filter(|p| matches!(p, Instruction::Pulse { channel, .. } if channel.index == ch)) {
                    prop_assert!(p.t0() >= prev_end);
                    prev_end = p.end_time();
                }
            }

            // idempotence
            prop_assert_eq!(schedule(&scheduled, start).unwrap(), scheduled.clone());
            prop_assert!(flat.iter().all(|p| p.t0() >= start));
        }
    }
}
