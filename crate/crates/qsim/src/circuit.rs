use crate::error::{Result, SimError};
use crate::gate::GateOp;

/// An ordered gate list over a fixed-width register.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn with_capacity(n_qubits: usize, capacity: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::with_capacity(capacity),
        }
    }

    /// Builds a circuit from an op list, validating every op.
    pub fn from_ops(n_qubits: usize, ops: Vec<GateOp>) -> Result<Self> {
        for (op_index, op) in ops.iter().enumerate() {
            op.validate(n_qubits)
                .map_err(|e| SimError::AtOperation {
                    op_index,
                    source: Box::new(e),
                })?;
        }
        Ok(Circuit { n_qubits, ops })
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate(self.n_qubits).map_err(|e| SimError::AtOperation {
            op_index: self.ops.len(),
            source: Box::new(e),
        })?;
        self.ops.push(op);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Replaces the rotation angle of op `index`; non-rotations are untouched.
    pub fn set_angle(&mut self, index: usize, theta: f64) {
        self.ops[index] = self.ops[index].with_angle(theta);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}
