use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::state::StateVector;

/// Renders a basis index with the highest qubit first, as OpenQASM tools do.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Samples `shots` computational-basis measurements. Counts are keyed by
/// bitstring (qubit `n-1` leftmost) and only outcomes that occurred appear.
/// The same seed always yields the same counts.
pub fn sample_measurement(
    state: &StateVector,
    shots: u64,
    rng_seed: u64,
) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let probs = state.probabilities();
    let dist = WeightedIndex::new(&probs).map_err(|_| SimError::NotNormalized(state.norm_sqr()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        tally[dist.sample(&mut rng)] += 1;
    }
    Ok(tally
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(i, c)| (bitstring(i, state.n_qubits()), c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateOp;
    use crate::state::apply_gate;

    #[test]
    fn basis_state_is_deterministic() {
        let counts = sample_measurement(&StateVector::zero(1).unwrap(), 1024, 7).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["0"], 1024);
    }

    #[test]
    fn plus_state_within_binomial_bound() {
        let plus = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::h(0)).unwrap();
        let n = 100_000u64;
        let counts = sample_measurement(&plus, n, 2024).unwrap();
        let sigma = (n as f64 * 0.25).sqrt();
        for key in ["0", "1"] {
            let dev = (counts[key] as f64 - 50_000.0).abs();
            assert!(dev < 4.0 * sigma, "{key}: {}", counts[key]);
        }
        assert_eq!(counts.values().sum::<u64>(), n);
    }

    #[test]
    fn same_seed_same_counts() {
        let s = apply_gate(&StateVector::zero(3).unwrap(), &GateOp::h(2)).unwrap();
        let a = sample_measurement(&s, 500, 11).unwrap();
        let b = sample_measurement(&s, 500, 11).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn bitstring_is_big_endian() {
        assert_eq!(bitstring(0b001, 3), "001");
        assert_eq!(bitstring(0b100, 3), "100");
        let s = StateVector::basis(3, 0b100).unwrap();
        let counts = sample_measurement(&s, 3, 0).unwrap();
        assert_eq!(counts["100"], 3);
    }

    #[test]
    fn zero_shots_rejected() {
        assert_eq!(
            sample_measurement(&StateVector::zero(1).unwrap(), 0, 0).unwrap_err(),
            SimError::ZeroShots
        );
    }
}
