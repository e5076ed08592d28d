use crate::circuit::Circuit;
use crate::error::{Result, SimError};
use crate::gate::{apply_raw, GateOp, C64};

/// Largest register a statevector may hold.
pub const MAX_STATEVECTOR_QUBITS: usize = 12;

const NORM_TOLERANCE: f64 = 1e-10;

/// Pure state of an `n`-qubit register as `2^n` dense amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

pub(crate) fn check_width(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(SimError::EmptyRegister);
    }
    if n_qubits > cap {
        return Err(SimError::TooManyQubits { n_qubits, cap });
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_width(n_qubits, MAX_STATEVECTOR_QUBITS)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(SimError::BasisIndexOutOfRange { index, n_qubits });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps caller-supplied amplitudes; they must already be normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::NotPowerOfTwo(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_width(n_qubits, MAX_STATEVECTOR_QUBITS)?;
        let state = StateVector { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// In-place `|psi> <- U |psi>`.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        apply_raw(&mut self.amps, op, 0, false);
        Ok(())
    }

    /// Applies every op of `circuit` in order.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: self.n_qubits,
                found: circuit.n_qubits(),
            });
        }
        for (op_index, op) in circuit.ops().iter().enumerate() {
            self.apply(op).map_err(|e| SimError::AtOperation {
                op_index,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// `<psi|phi>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

pub fn apply_gate(state: &StateVector, op: &GateOp) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(op)?;
    Ok(out)
}

pub fn run_circuit(initial: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    let mut out = initial.clone();
    out.run(circuit)?;
    Ok(out)
}
