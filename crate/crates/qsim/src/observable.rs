use crate::error::{Result, SimError};
use crate::state::StateVector;

/// Tensor product of Pauli-Z on a qubit subset, identity elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZObservable {
    mask: u64,
}

impl ZObservable {
    pub fn new(qubits: &[usize]) -> Self {
        let mask = qubits.iter().fold(0u64, |m, &q| {
            assert!(q < 64, "qubit index {q} does not fit a 64-bit mask");
            m | (1u64 << q)
        });
        ZObservable { mask }
    }

    pub fn single(qubit: usize) -> Self {
        ZObservable::new(&[qubit])
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn qubits(&self) -> Vec<usize> {
        (0..64).filter(|q| self.mask >> q & 1 == 1).collect()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if n_qubits < 64 && self.mask >> n_qubits != 0 {
            let index = 63 - self.mask.leading_zeros() as usize;
            return Err(SimError::InvalidObservable { index, n_qubits });
        }
        Ok(())
    }

    /// Eigenvalue (+1 or -1) on computational basis state `index`.
    #[inline]
    pub fn sign(&self, index: usize) -> f64 {
        if (index as u64 & self.mask).count_ones() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// `<psi| Z_mask |psi>`.
pub fn expectation_z(state: &StateVector, obs: &ZObservable) -> Result<f64> {
    obs.validate(state.n_qubits())?;
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| obs.sign(i) * a.norm_sqr())
        .sum())
}

/// Single-qubit `<Z_q>` for every `q < count`, from one pass over the
/// amplitudes.
pub fn single_z_expectations(state: &StateVector, count: usize) -> Result<Vec<f64>> {
    if count > state.n_qubits() {
        return Err(SimError::InvalidObservable {
            index: count - 1,
            n_qubits: state.n_qubits(),
        });
    }
    Ok(z_from_probabilities(
        state.amplitudes().iter().map(|a| a.norm_sqr()),
        count,
    ))
}

pub(crate) fn z_from_probabilities(probs: impl Iterator<Item = f64>, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    for (i, p) in probs.enumerate() {
        for (q, acc) in out.iter_mut().enumerate() {
            if i >> q & 1 == 0 {
                *acc += p;
            } else {
                *acc -= p;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::gate::GateOp;
    use crate::state::{apply_gate, run_circuit};

    fn bell() -> StateVector {
        let c = Circuit::from_ops(2, vec![GateOp::h(0), GateOp::cnot(0, 1)]).unwrap();
        run_circuit(&StateVector::zero(2).unwrap(), &c).unwrap()
    }

    #[test]
    fn all_zero_state_is_plus_one_eigenstate() {
        let s = StateVector::zero(4).unwrap();
        for mask in [vec![0], vec![1, 3], vec![0, 1, 2, 3]] {
            assert_eq!(expectation_z(&s, &ZObservable::new(&mask)).unwrap(), 1.0);
        }
    }

    #[test]
    fn plus_state_has_zero_z() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::h(0)).unwrap();
        assert!(expectation_z(&s, &ZObservable::single(0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_correlations() {
        // amplitudes 1/sqrt2 on |00> and |11>: ZZ signs are +1, +1; Z0 signs +1, -1
        let s = bell();
        assert!((expectation_z(&s, &ZObservable::new(&[0, 1])).unwrap() - 1.0).abs() < 1e-12);
        assert!(expectation_z(&s, &ZObservable::single(0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn invalid_index_rejected() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(
            expectation_z(&s, &ZObservable::new(&[0, 5])).unwrap_err(),
            SimError::InvalidObservable {
                index: 5,
                n_qubits: 2
            }
        );
    }

    #[test]
    fn batched_single_z_matches_individual() {
        let c = Circuit::from_ops(
            3,
            vec![GateOp::ry(0, 0.3), GateOp::rx(1, 1.2), GateOp::cnot(1, 2)],
        )
        .unwrap();
        let s = run_circuit(&StateVector::zero(3).unwrap(), &c).unwrap();
        let batch = single_z_expectations(&s, 3).unwrap();
        for (q, v) in batch.iter().enumerate() {
            let single = expectation_z(&s, &ZObservable::single(q)).unwrap();
            assert!((v - single).abs() < 1e-14);
        }
    }
}
