//! Single-qubit Kraus channels and the per-gate noise policy built from them.

use crate::error::{Result, SimError};
use crate::gate::{Mat2, C64};

const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// A CPTP map on one qubit given by Kraus operators with `sum K^dagger K = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Mat2>,
    superop: [[C64; 4]; 4],
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(SimError::ProbabilityOutOfRange { name, value });
    }
    Ok(())
}

impl KrausChannel {
    pub fn new(operators: Vec<Mat2>) -> Result<Self> {
        if operators.is_empty() {
            return Err(SimError::EmptyChannel);
        }
        let deviation = completeness_error(&operators);
        if deviation > COMPLETENESS_TOLERANCE {
            return Err(SimError::NotTracePreserving(deviation));
        }
        let superop = superoperator(&operators);
        Ok(KrausChannel { operators, superop })
    }

    pub fn identity() -> Self {
        KrausChannel::new(vec![[[c(1.0), c(0.0)], [c(0.0), c(1.0)]]]).expect("identity is CPTP")
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    /// `max |sum K^dagger K - I|` over entries.
    pub fn completeness_error(&self) -> f64 {
        completeness_error(&self.operators)
    }

    /// 4x4 matrix acting on `(rho00, rho01, rho10, rho11)`.
    pub fn superoperator(&self) -> &[[C64; 4]; 4] {
        &self.superop
    }

    /// Applies the channel to a bare 2x2 density matrix.
    pub fn apply_2x2(&self, rho: &Mat2) -> Mat2 {
        let v = [rho[0][0], rho[0][1], rho[1][0], rho[1][1]];
        let mut out = [C64::new(0.0, 0.0); 4];
        for (o, row) in out.iter_mut().zip(&self.superop) {
            *o = row.iter().zip(&v).map(|(s, x)| s * x).sum();
        }
        [[out[0], out[1]], [out[2], out[3]]]
    }
}

fn completeness_error(ops: &[Mat2]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in ops {
                acc += k[0][i].conj() * k[0][j] + k[1][i].conj() * k[1][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

fn superoperator(ops: &[Mat2]) -> [[C64; 4]; 4] {
    let mut s = [[C64::new(0.0, 0.0); 4]; 4];
    for k in ops {
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    for d in 0..2 {
                        s[2 * a + b][2 * cc + d] += k[a][cc] * k[b][d].conj();
                    }
                }
            }
        }
    }
    s
}

/// Amplitude damping with decay probability `gamma`:
/// `K0 = diag(1, sqrt(1-gamma))`, `K1 = sqrt(gamma) |0><1|`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_probability("gamma", gamma)?;
    let k0 = [[c(1.0), c(0.0)], [c(0.0), c((1.0 - gamma).sqrt())]];
    let k1 = [[c(0.0), c(gamma.sqrt())], [c(0.0), c(0.0)]];
    KrausChannel::new(vec![k0, k1])
}

/// Depolarizing channel `rho -> (1-p) rho + p I/2`, as the Kraus set
/// `{sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}`.
pub fn depolarizing(p: f64) -> Result<KrausChannel> {
    check_probability("p", p)?;
    let a = (1.0 - 0.75 * p).sqrt();
    let b = (p / 4.0).sqrt();
    let zero = c(0.0);
    let i = [[c(a), zero], [zero, c(a)]];
    let x = [[zero, c(b)], [c(b), zero]];
    let y = [[zero, C64::new(0.0, -b)], [C64::new(0.0, b), zero]];
    let z = [[c(b), zero], [zero, c(-b)]];
    KrausChannel::new(vec![i, x, y, z])
}

/// Noise attached to every gate: each channel is applied, in order, to each
/// of the gate's target qubits right after the gate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseModel {
    channels: Vec<KrausChannel>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    pub fn from_channels(channels: Vec<KrausChannel>) -> Self {
        NoiseModel { channels }
    }

    /// Amplitude damping followed by depolarizing. Both channels are kept even
    /// at zero strength so the mixed-state path is exercised unchanged.
    pub fn damping_and_depolarizing(gamma: f64, p: f64) -> Result<Self> {
        Ok(NoiseModel {
            channels: vec![amplitude_damping(gamma)?, depolarizing(p)?],
        })
    }

    pub fn channels(&self) -> &[KrausChannel] {
        &self.channels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure(alpha: C64, beta: C64) -> Mat2 {
        [
            [alpha * alpha.conj(), alpha * beta.conj()],
            [beta * alpha.conj(), beta * beta.conj()],
        ]
    }

    /// Kraus-sum oracle: sum_k K rho K^dagger computed directly.
    fn kraus_sum(ops: &[Mat2], rho: &Mat2) -> Mat2 {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for k in ops {
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            out[i][j] += k[i][a] * rho[a][b] * k[j][b].conj();
                        }
                    }
                }
            }
        }
        out
    }

    fn assert_close(a: &Mat2, b: &Mat2, tol: f64) {
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < tol, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let rho = pure(c(0.6), C64::new(0.0, 0.8));
        for ch in [amplitude_damping(0.0).unwrap(), depolarizing(0.0).unwrap()] {
            assert_close(&ch.apply_2x2(&rho), &rho, 1e-15);
        }
    }

    #[test]
    fn full_damping_decays_to_ground() {
        let one = pure(c(0.0), c(1.0));
        let out = amplitude_damping(1.0).unwrap().apply_2x2(&one);
        assert_close(&out, &pure(c(1.0), c(0.0)), 1e-15);
    }

    #[test]
    fn damping_scales_coherences() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = pure(c(h), c(h));
        let ch = amplitude_damping(0.3).unwrap();
        let out = ch.apply_2x2(&plus);
        assert_close(&out, &kraus_sum(ch.operators(), &plus), 1e-15);
        assert!((out[0][1].re - 0.5 * 0.7f64.sqrt()).abs() < 1e-15);
        assert!((out[1][0].re - 0.5 * 0.7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn full_depolarizing_gives_maximally_mixed() {
        let rho = pure(c(0.8), C64::new(0.36, 0.48));
        let out = depolarizing(1.0).unwrap().apply_2x2(&rho);
        assert_close(&out, &[[c(0.5), c(0.0)], [c(0.0), c(0.5)]], 1e-15);
    }

    #[test]
    fn depolarizing_shrinks_z() {
        let out = depolarizing(0.1).unwrap().apply_2x2(&pure(c(1.0), c(0.0)));
        assert!((out[0][0].re - out[1][1].re - 0.9).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_strength_rejected() {
        assert!(matches!(
            amplitude_damping(1.5),
            Err(SimError::ProbabilityOutOfRange { name: "gamma", .. })
        ));
        assert!(matches!(
            depolarizing(-0.1),
            Err(SimError::ProbabilityOutOfRange { name: "p", .. })
        ));
        assert!(depolarizing(f64::NAN).is_err());
    }

    #[test]
    fn incomplete_kraus_set_rejected() {
        let half = [[c(0.5), c(0.0)], [c(0.0), c(0.5)]];
        assert!(matches!(
            KrausChannel::new(vec![half]),
            Err(SimError::NotTracePreserving(_))
        ));
        assert_eq!(KrausChannel::new(vec![]).unwrap_err(), SimError::EmptyChannel);
    }

    #[test]
    fn constructed_channels_are_complete() {
        for s in [0.0, 0.01, 0.3, 0.77, 1.0] {
            assert!(amplitude_damping(s).unwrap().completeness_error() < 1e-10);
            assert!(depolarizing(s).unwrap().completeness_error() < 1e-10);
        }
    }
}
