use crate::hamiltonian::ChannelId;

use super::LibraryError;

/// A node of a pulse program. Times are integer sample counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate {
        name: String,
        qubits: Vec<usize>,
        params: Vec<f64>,
    },
    Pulse {
        name: String,
        channel: ChannelId,
        t0: i64,
        duration: i64,
        sample_ref: String,
    },
    FrameChange {
        channel: ChannelId,
        t0: i64,
        phase: f64,
    },
    Composite {
        name: String,
        children: Vec<Instruction>,
        t0: i64,
    },
}

impl Instruction {
    pub fn gate(name: &str, qubits: &[usize], params: &[f64]) -> Self {
        Instruction::Gate {
            name: name.to_string(),
            qubits: qubits.to_vec(),
            params: params.to_vec(),
        }
    }

    pub fn composite(name: &str, children: Vec<Instruction>) -> Self {
        Instruction::Composite {
            name: name.to_string(),
            children,
            t0: 0,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Instruction::Gate { name, .. } | Instruction::Pulse { name, .. } | Instruction::Composite { name, .. } => name,
            Instruction::FrameChange { .. } => "fc",
        }
    }

    /// Pulses and frame changes are analog; gates are not; a composite is
    /// analog when every child is.
    pub fn is_analog(&self) -> bool {
        match self {
            Instruction::Gate { .. } => false,
            Instruction::Pulse { .. } | Instruction::FrameChange { .. } => true,
            Instruction::Composite { children, .. } => children.iter().all(Instruction::is_analog),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, Instruction::Composite { .. })
    }

    pub fn t0(&self) -> i64 {
        match self {
            Instruction::Gate { .. } => 0,
            Instruction::Pulse { t0, .. } | Instruction::FrameChange { t0, .. } | Instruction::Composite { t0, .. } => *t0,
        }
    }

    pub fn set_start(&mut self, start: i64) {
        match self {
            Instruction::Gate { .. } => {}
            Instruction::Pulse { t0, .. } | Instruction::FrameChange { t0, .. } | Instruction::Composite { t0, .. } => {
                *t0 = start
            }
        }
    }

    /// Sample count of a leaf; for composites the span from t0 to the
    /// latest leaf end.
    pub fn duration(&self) -> i64 {
        match self {
            Instruction::Pulse { duration, .. } => *duration,
            Instruction::Gate { .. } | Instruction::FrameChange { .. } => 0,
            Instruction::Composite { t0, .. } => self.end_time() - t0,
        }
    }

    /// Latest `t0 + duration` over all leaves, assuming leaf times are
    /// absolute; an empty composite ends at its own start.
    pub fn end_time(&self) -> i64 {
        match self {
            Instruction::Composite { children, t0, .. } => {
                children.iter().map(Instruction::end_time).max().unwrap_or(*t0).max(*t0)
            }
            Instruction::Pulse { t0, duration, .. } => t0 + duration,
            other => other.t0(),
        }
    }

    pub fn children(&self) -> &[Instruction] {
        match self {
            Instruction::Composite { children, .. } => children,
            _ => &[],
        }
    }

    fn children_mut(&mut self) -> Result<&mut Vec<Instruction>, LibraryError> {
        match self {
            Instruction::Composite { children, .. } => Ok(children),
            other => Err(LibraryError::NotComposite(other.name().to_string())),
        }
    }

    pub fn add_instruction(&mut self, child: Instruction) -> Result<(), LibraryError> {
        self.children_mut()?.push(child);
        Ok(())
    }

    /// Swaps the child at `index` for `replacement`, returning the old node.
    pub fn replace_child(&mut self, index: usize, replacement: Instruction) -> Result<Instruction, LibraryError> {
        let children = self.children_mut()?;
        let slot = children.get_mut(index).ok_or(LibraryError::ChildIndex(index))?;
        Ok(std::mem::replace(slot, replacement))
    }

    pub fn remove_child(&mut self, index: usize) -> Result<Instruction, LibraryError> {
        let children = self.children_mut()?;
        if index >= children.len() {
            return Err(LibraryError::ChildIndex(index));
        }
        Ok(children.remove(index))
    }

    /// Depth-first flatten into pulses and frame changes, sorted by t0 with
    /// ties kept in tree order. Leaf times are taken as already absolute.
    pub fn as_flat_pulse_list(&self) -> Result<Vec<Instruction>, LibraryError> {
        fn walk(node: &Instruction, out: &mut Vec<Instruction>) -> Result<(), LibraryError> {
            match node {
                Instruction::Gate { name, .. } => Err(LibraryError::NotAnalog(name.clone())),
                Instruction::Composite { children, .. } => children.iter().try_for_each(|c| walk(c, out)),
                leaf => {
                    out.push(leaf.clone());
                    Ok(())
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out)?;
        out.sort_by_key(Instruction::t0);
        Ok(out)
    }
}
