use crate::channel::{KrausChannel, NoiseModel};
use crate::circuit::Circuit;
use crate::error::{Result, SimError};
use crate::gate::{apply_raw, GateOp, C64};
use crate::observable::{z_from_probabilities, ZObservable};
use crate::state::{check_width, StateVector};

/// Largest register a density matrix may hold.
pub const MAX_DENSITY_QUBITS: usize = 8;

/// Mixed state stored as a dense row-major `2^n x 2^n` matrix.
///
/// The flat index is `row * 2^n + col`, so column bits occupy positions
/// `0..n` and row bits `n..2n`. Gates act on row bits with `U` and on column
/// bits with `conj(U)`, giving `U rho U^dagger` without a separate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits, MAX_DENSITY_QUBITS)?;
        let dim = 1usize << n_qubits;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        entries[0] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { n_qubits, entries })
    }

    /// `|psi><psi|`
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        check_width(state.n_qubits(), MAX_DENSITY_QUBITS)?;
        let a = state.amplitudes();
        let entries = a
            .iter()
            .flat_map(|r| a.iter().map(move |c| r * c.conj()))
            .collect();
        Ok(DensityMatrix {
            n_qubits: state.n_qubits(),
            entries,
        })
    }

    /// `I / 2^n`
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits, MAX_DENSITY_QUBITS)?;
        let dim = 1usize << n_qubits;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityMatrix { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.entries[i * dim + i]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.entries[i * dim + i].re).collect()
    }

    /// `max |rho - rho^dagger|`
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `rho <- U rho U^dagger`
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        apply_raw(&mut self.entries, op, self.n_qubits, false);
        apply_raw(&mut self.entries, op, 0, true);
        Ok(())
    }

    /// `rho <- sum_k K_k rho K_k^dagger` with the channel acting on `qubit`.
    pub fn apply_channel(&mut self, channel: &KrausChannel, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(SimError::InvalidTarget {
                gate: "channel".into(),
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let s = channel.superoperator();
        let col = 1usize << qubit;
        let row = 1usize << (qubit + self.n_qubits);
        for i in 0..self.entries.len() {
            if i & (row | col) != 0 {
                continue;
            }
            let idx = [i, i | col, i | row, i | row | col];
            let v = idx.map(|k| self.entries[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.entries[k] = s[r][0] * v[0] + s[r][1] * v[1] + s[r][2] * v[2] + s[r][3] * v[3];
            }
        }
        Ok(())
    }

    /// Applies a gate and then the noise model's channels on its targets.
    pub fn apply_noisy(&mut self, op: &GateOp, noise: &NoiseModel) -> Result<()> {
        self.apply(op)?;
        for &q in op.targets() {
            for ch in noise.channels() {
                self.apply_channel(ch, q)?;
            }
        }
        Ok(())
    }
}

/// Evolves `initial` through `circuit`, applying `noise` after every gate.
pub fn run_circuit_noisy(
    initial: &DensityMatrix,
    circuit: &Circuit,
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    if circuit.n_qubits() != initial.n_qubits() {
        return Err(SimError::DimensionMismatch {
            expected: initial.n_qubits(),
            found: circuit.n_qubits(),
        });
    }
    let mut rho = initial.clone();
    for (op_index, op) in circuit.ops().iter().enumerate() {
        rho.apply_noisy(op, noise)
            .map_err(|e| SimError::AtOperation {
                op_index,
                source: Box::new(e),
            })?;
    }
    Ok(rho)
}

/// `Tr(rho Z_mask)`
pub fn expectation_z_density(rho: &DensityMatrix, obs: &ZObservable) -> Result<f64> {
    obs.validate(rho.n_qubits())?;
    Ok(rho
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, p)| obs.sign(i) * p)
        .sum())
}

/// `Tr(rho Z_q)` for every `q < count`.
pub fn single_z_expectations_density(rho: &DensityMatrix, count: usize) -> Result<Vec<f64>> {
    if count > rho.n_qubits() {
        return Err(SimError::InvalidObservable {
            index: count - 1,
            n_qubits: rho.n_qubits(),
        });
    }
    Ok(z_from_probabilities(rho.diagonal().into_iter(), count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping, depolarizing};
    use crate::state::run_circuit;

    #[test]
    fn basic_expectations() {
        let rho = DensityMatrix::zero(1).unwrap();
        assert_eq!(expectation_z_density(&rho, &ZObservable::single(0)).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert_eq!(expectation_z_density(&mixed, &ZObservable::single(0)).unwrap(), 0.0);
    }

    #[test]
    fn damped_excited_state() {
        let mut rho = DensityMatrix::from_pure(&StateVector::basis(1, 1).unwrap()).unwrap();
        rho.apply_channel(&amplitude_damping(0.3).unwrap(), 0).unwrap();
        // populations (0.3, 0.7) -> <Z> = 0.3 - 0.7
        let z = expectation_z_density(&rho, &ZObservable::single(0)).unwrap();
        assert!((z + 0.4).abs() < 1e-12);
    }

    #[test]
    fn depolarized_x_is_maximally_mixed() {
        let circuit = Circuit::from_ops(1, vec![GateOp::x(0)]).unwrap();
        let noise = NoiseModel::from_channels(vec![depolarizing(1.0).unwrap()]);
        let rho = run_circuit_noisy(&DensityMatrix::zero(1).unwrap(), &circuit, &noise).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        for (a, b) in rho.entries().iter().zip(mixed.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_limit_matches_pure_path() {
        let circuit = Circuit::from_ops(
            3,
            vec![
                GateOp::h(0),
                GateOp::ry(1, 0.4),
                GateOp::cnot(0, 2),
                GateOp::rz(2, -1.1),
                GateOp::swap(1, 2),
                GateOp::cz(0, 1),
                GateOp::rx(0, 2.5),
            ],
        )
        .unwrap();
        let psi = run_circuit(&StateVector::zero(3).unwrap(), &circuit).unwrap();
        let noise = NoiseModel::damping_and_depolarizing(0.0, 0.0).unwrap();
        let rho = run_circuit_noisy(&DensityMatrix::zero(3).unwrap(), &circuit, &noise).unwrap();
        let expected = DensityMatrix::from_pure(&psi).unwrap();
        for (a, b) in rho.entries().iter().zip(expected.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn channel_target_checked() {
        let mut rho = DensityMatrix::zero(2).unwrap();
        assert!(rho.apply_channel(&depolarizing(0.1).unwrap(), 2).is_err());
    }

    #[test]
    fn density_cap() {
        assert!(DensityMatrix::zero(8).is_ok());
        assert!(matches!(
            DensityMatrix::zero(9),
            Err(SimError::TooManyQubits { cap: 8, .. })
        ));
    }
}
