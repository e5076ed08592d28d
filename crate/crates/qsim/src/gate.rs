//! Gate definitions and the in-place kernels that apply them to amplitude
//! buffers.
//!
//! Basis indices are little-endian: qubit `q` is bit `q` of the index. For
//! two-qubit gates the local 4x4 matrix is indexed by `bit(t0) + 2 * bit(t1)`
//! where `t0, t1` are the first and second targets.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type C64 = Complex64;

/// Dense 2x2 complex matrix, row major.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Cz,
    /// Controlled NOT; the first target is the control.
    Cnot,
    Swap,
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::H | Gate::X | Gate::Rx(_) | Gate::Ry(_) | Gate::Rz(_) => 1,
            Gate::Cz | Gate::Cnot | Gate::Swap => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Rx(_) => "RX",
            Gate::Ry(_) => "RY",
            Gate::Rz(_) => "RZ",
            Gate::Cz => "CZ",
            Gate::Cnot => "CNOT",
            Gate::Swap => "SWAP",
        }
    }

    /// Rotation angle, if the gate has one.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(t) | Gate::Ry(t) | Gate::Rz(t) => Some(t),
            _ => None,
        }
    }

    /// Same gate kind with a different rotation angle. Non-rotations are
    /// returned unchanged.
    pub fn with_angle(&self, theta: f64) -> Gate {
        match self {
            Gate::Rx(_) => Gate::Rx(theta),
            Gate::Ry(_) => Gate::Ry(theta),
            Gate::Rz(_) => Gate::Rz(theta),
            other => *other,
        }
    }

    /// Matrix of a single-qubit gate. Rotations follow `exp(-i theta sigma / 2)`.
    pub fn matrix_1q(&self) -> Option<Mat2> {
        let m = match *self {
            Gate::H => {
                let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Rx(t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let mis = C64::new(0.0, -s);
                [[C64::new(c, 0.0), mis], [mis, C64::new(c, 0.0)]]
            }
            Gate::Ry(t) => {
                let (s, c) = (t / 2.0).sin_cos();
                [
                    [C64::new(c, 0.0), C64::new(-s, 0.0)],
                    [C64::new(s, 0.0), C64::new(c, 0.0)],
                ]
            }
            Gate::Rz(t) => {
                let (s, c) = (t / 2.0).sin_cos();
                [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
            }
            Gate::Cz | Gate::Cnot | Gate::Swap => return None,
        };
        Some(m)
    }

    /// Full matrix of the gate on its local register (2x2 or 4x4), row major.
    pub fn matrix(&self) -> Vec<Vec<C64>> {
        if let Some(m) = self.matrix_1q() {
            return m.iter().map(|r| r.to_vec()).collect();
        }
        let mut m = vec![vec![ZERO; 4]; 4];
        match self {
            Gate::Cz => {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = if i == 3 { -ONE } else { ONE };
                }
            }
            Gate::Cnot => {
                // control = bit 0 of the local index
                m[0][0] = ONE;
                m[2][2] = ONE;
                m[1][3] = ONE;
                m[3][1] = ONE;
            }
            Gate::Swap => {
                m[0][0] = ONE;
                m[3][3] = ONE;
                m[1][2] = ONE;
                m[2][1] = ONE;
            }
            _ => unreachable!(),
        }
        m
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.angle() {
            Some(t) => write!(f, "{}({t})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// A gate bound to concrete qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub gate: Gate,
    qubits: [usize; 2],
}

impl GateOp {
    pub fn single(gate: Gate, qubit: usize) -> Self {
        debug_assert_eq!(gate.arity(), 1);
        GateOp {
            gate,
            qubits: [qubit, 0],
        }
    }

    pub fn pair(gate: Gate, first: usize, second: usize) -> Self {
        debug_assert_eq!(gate.arity(), 2);
        GateOp {
            gate,
            qubits: [first, second],
        }
    }

    /// Builds an op from a target list, checking the arity.
    pub fn new(gate: Gate, targets: &[usize]) -> Result<Self> {
        if targets.len() != gate.arity() {
            return Err(SimError::DimensionMismatch {
                expected: gate.arity(),
                found: targets.len(),
            });
        }
        Ok(match targets {
            [q] => GateOp::single(gate, *q),
            [a, b] => GateOp::pair(gate, *a, *b),
            _ => unreachable!(),
        })
    }

    pub fn h(q: usize) -> Self {
        GateOp::single(Gate::H, q)
    }
    pub fn x(q: usize) -> Self {
        GateOp::single(Gate::X, q)
    }
    pub fn rx(q: usize, theta: f64) -> Self {
        GateOp::single(Gate::Rx(theta), q)
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        GateOp::single(Gate::Ry(theta), q)
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        GateOp::single(Gate::Rz(theta), q)
    }
    pub fn cz(a: usize, b: usize) -> Self {
        GateOp::pair(Gate::Cz, a, b)
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::pair(Gate::Cnot, control, target)
    }
    pub fn swap(a: usize, b: usize) -> Self {
        GateOp::pair(Gate::Swap, a, b)
    }

    pub fn targets(&self) -> &[usize] {
        &self.qubits[..self.gate.arity()]
    }

    pub fn with_angle(&self, theta: f64) -> Self {
        GateOp {
            gate: self.gate.with_angle(theta),
            qubits: self.qubits,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        for &q in targets {
            if q >= n_qubits {
                return Err(SimError::InvalidTarget {
                    gate: self.gate.to_string(),
                    index: q,
                    n_qubits,
                });
            }
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(SimError::DuplicateTarget {
                gate: self.gate.to_string(),
                index: targets[0],
            });
        }
        Ok(())
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.gate, self.targets())
    }
}

/// Applies `op` to an amplitude buffer whose qubit `q` lives at bit
/// `q + offset`. With `conjugate` set the complex conjugate of the gate
/// matrix is used (right-multiplication by `U^dagger` on a density matrix).
/// Targets must already be validated.
pub(crate) fn apply_raw(amps: &mut [C64], op: &GateOp, offset: usize, conjugate: bool) {
    let t = op.targets();
    match op.gate {
        Gate::Cz => apply_cz(amps, t[0] + offset, t[1] + offset),
        Gate::Cnot => apply_cnot(amps, t[0] + offset, t[1] + offset),
        Gate::Swap => apply_swap(amps, t[0] + offset, t[1] + offset),
        Gate::Rz(theta) => {
            let (s, c) = (theta / 2.0).sin_cos();
            let (d0, d1) = if conjugate {
                (C64::new(c, s), C64::new(c, -s))
            } else {
                (C64::new(c, -s), C64::new(c, s))
            };
            apply_diag_1q(amps, t[0] + offset, d0, d1);
        }
        gate => {
            let mut m = gate.matrix_1q().expect("single-qubit gate");
            if conjugate {
                for row in m.iter_mut() {
                    for v in row.iter_mut() {
                        *v = v.conj();
                    }
                }
            }
            apply_1q(amps, t[0] + offset, &m);
        }
    }
}

pub(crate) fn apply_1q(amps: &mut [C64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let a = amps[i];
            let b = amps[i + stride];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i + stride] = m[1][0] * a + m[1][1] * b;
        }
        base += stride << 1;
    }
}

fn apply_diag_1q(amps: &mut [C64], bit: usize, d0: C64, d1: C64) {
    let mask = 1usize << bit;
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { d0 } else { d1 };
    }
}

fn apply_cz(amps: &mut [C64], b0: usize, b1: usize) {
    let mask = (1usize << b0) | (1usize << b1);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *a = -*a;
        }
    }
}

fn apply_cnot(amps: &mut [C64], control: usize, target: usize) {
    let cm = 1usize << control;
    let tm = 1usize << target;
    for i in 0..amps.len() {
        if i & cm != 0 && i & tm == 0 {
            amps.swap(i, i | tm);
        }
    }
}

fn apply_swap(amps: &mut [C64], b0: usize, b1: usize) {
    let m0 = 1usize << b0;
    let m1 = 1usize << b1;
    for i in 0..amps.len() {
        if i & m0 != 0 && i & m1 == 0 {
            amps.swap(i, (i & !m0) | m1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_unitarity_error(m: &[Vec<C64>]) -> f64 {
        let d = m.len();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += m[k][i].conj() * m[k][j];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    #[test]
    fn every_gate_kind_is_unitary() {
        let gates = [
            Gate::H,
            Gate::X,
            Gate::Rx(0.37),
            Gate::Ry(-2.1),
            Gate::Rz(5.9),
            Gate::Cz,
            Gate::Cnot,
            Gate::Swap,
        ];
        for g in gates {
            assert!(max_unitarity_error(&g.matrix()) < 1e-12, "{g}");
        }
    }

    #[test]
    fn rz_uses_half_angle_phases() {
        let m = Gate::Rz(std::f64::consts::FRAC_PI_2).matrix_1q().unwrap();
        let expected = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((m[1][1] - expected).norm() < 1e-15);
        assert!((m[0][0] - expected.conj()).norm() < 1e-15);
    }

    #[test]
    fn validate_reports_offending_index() {
        let err = GateOp::cz(0, 3).validate(2).unwrap_err();
        assert_eq!(
            err,
            SimError::InvalidTarget {
                gate: "CZ".into(),
                index: 3,
                n_qubits: 2
            }
        );
        assert!(matches!(
            GateOp::cnot(1, 1).validate(2),
            Err(SimError::DuplicateTarget { index: 1, .. })
        ));
    }

    #[test]
    fn new_checks_arity() {
        assert!(GateOp::new(Gate::H, &[0, 1]).is_err());
        assert_eq!(GateOp::new(Gate::Swap, &[2, 0]).unwrap().targets(), &[2, 0]);
    }
}
