//! Data re-uploading parameterized quantum circuit.
//!
//! The circuit alternates variational and encoding layers:
//!
//! ```text
//! U_var(phi_0) U_enc(s, lambda_0) U_var(phi_1) ... U_enc(s, lambda_{L-1}) U_var(phi_L)
//! ```
//!
//! `U_var` applies `RZ RY RZ` to every qubit followed by a ring of CZ
//! entanglers; `U_enc` applies `RX(lambda_{l,j} * s_j)` to qubit `j`. Action
//! `a` reads Pauli-Z on qubit `a`, scaled by the trainable weight `w_a`.
//!
//! Parameter layout (also the checkpoint field order): `phi` indexed by
//! `(var_layer * n_qubits + qubit) * 3 + axis` with axes `RZ, RY, RZ`;
//! `lambda` indexed by `layer * n_qubits + qubit`; `w` indexed by action.

use std::f64::consts::PI;
use std::path::Path;

use qcloud_sim::{
    single_z_expectations, single_z_expectations_density, Circuit, DensityMatrix, GateOp,
    NoiseModel, StateVector, MAX_STATEVECTOR_QUBITS,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest probability allowed inside a log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PqcArchitecture {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_actions: usize,
}

impl Default for PqcArchitecture {
    fn default() -> Self {
        PqcArchitecture {
            n_qubits: 8,
            n_layers: 5,
            n_actions: 5,
        }
    }
}

impl PqcArchitecture {
    pub fn new(n_qubits: usize, n_layers: usize, n_actions: usize) -> Result<Self> {
        let arch = PqcArchitecture {
            n_qubits,
            n_layers,
            n_actions,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_STATEVECTOR_QUBITS {
            return Err(Error::Architecture(format!(
                "n_qubits must be in 1..={MAX_STATEVECTOR_QUBITS}, got {}",
                self.n_qubits
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Architecture("n_layers must be positive".into()));
        }
        if self.n_actions == 0 || self.n_actions > self.n_qubits {
            return Err(Error::Architecture(format!(
                "n_actions must be in 1..={}, got {}",
                self.n_qubits, self.n_actions
            )));
        }
        Ok(())
    }

    pub fn n_phi(&self) -> usize {
        3 * self.n_qubits * (self.n_layers + 1)
    }

    pub fn n_lambda(&self) -> usize {
        self.n_qubits * self.n_layers
    }

    pub fn n_params(&self) -> usize {
        self.n_phi() + self.n_lambda() + self.n_actions
    }

    pub fn phi_index(&self, var_layer: usize, qubit: usize, axis: usize) -> usize {
        (var_layer * self.n_qubits + qubit) * 3 + axis
    }

    pub fn lambda_index(&self, layer: usize, qubit: usize) -> usize {
        layer * self.n_qubits + qubit
    }

    /// CZ pairs of the entangling ring. Two qubits share one CZ; a ring of
    /// two would apply it twice and cancel.
    pub fn ring(&self) -> Vec<(usize, usize)> {
        match self.n_qubits {
            1 => vec![],
            2 => vec![(0, 1)],
            n => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    pub fn gate_count(&self) -> usize {
        (self.n_layers + 1) * (3 * self.n_qubits + self.ring().len())
            + self.n_layers * self.n_qubits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub phi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
}

impl ParameterSet {
    /// phi ~ U(-pi, pi), lambda = 1, w = 1.
    pub fn init(arch: &PqcArchitecture, rng: &mut impl Rng) -> Self {
        ParameterSet {
            phi: (0..arch.n_phi()).map(|_| rng.gen_range(-PI..PI)).collect(),
            lambda: vec![1.0; arch.n_lambda()],
            w: vec![1.0; arch.n_actions],
        }
    }

    /// All rotations zero, unit scalings and weights.
    pub fn identity(arch: &PqcArchitecture) -> Self {
        ParameterSet {
            phi: vec![0.0; arch.n_phi()],
            lambda: vec![1.0; arch.n_lambda()],
            w: vec![1.0; arch.n_actions],
        }
    }

    pub fn validate(&self, arch: &PqcArchitecture) -> Result<()> {
        for (what, v, expected) in [
            ("phi", &self.phi, arch.n_phi()),
            ("lambda", &self.lambda, arch.n_lambda()),
            ("w", &self.w, arch.n_actions),
        ] {
            if v.len() != expected {
                return Err(Error::Shape {
                    what,
                    expected,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phi.len() + self.lambda.len() + self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `phi ++ lambda ++ w`
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.phi);
        out.extend_from_slice(&self.lambda);
        out.extend_from_slice(&self.w);
        out
    }

    pub fn from_flat(arch: &PqcArchitecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != arch.n_params() {
            return Err(Error::Shape {
                what: "flat parameters",
                expected: arch.n_params(),
                found: flat.len(),
            });
        }
        let (phi, rest) = flat.split_at(arch.n_phi());
        let (lambda, w) = rest.split_at(arch.n_lambda());
        Ok(ParameterSet {
            phi: phi.to_vec(),
            lambda: lambda.to_vec(),
            w: w.to_vec(),
        })
    }
}

/// How observations enter the encoding layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Encode `s` directly; entries must lie in `[-1, 1]`.
    Raw,
    /// Encode `s'_j = tanh(lambda_{0,j} s_j)`, used for Q-values.
    Squashed,
}

/// Where a circuit op's rotation angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSource {
    Fixed,
    Phi(usize),
    Encoding { layer: usize, qubit: usize },
}

/// A built circuit together with the provenance of each op's angle.
#[derive(Debug, Clone)]
pub struct TrackedCircuit {
    pub circuit: Circuit,
    pub sources: Vec<AngleSource>,
    /// The encoded input vector (`s` or its tanh squash).
    pub encoded: Vec<f64>,
}

fn check_inputs(arch: &PqcArchitecture, params: &ParameterSet, s: &[f64]) -> Result<()> {
    arch.validate()?;
    params.validate(arch)?;
    if s.len() != arch.n_qubits {
        return Err(Error::Shape {
            what: "observation",
            expected: arch.n_qubits,
            found: s.len(),
        });
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    Ok(())
}

pub fn encoded_input(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    mode: InputMode,
) -> Result<Vec<f64>> {
    check_inputs(arch, params, s)?;
    match mode {
        InputMode::Raw => {
            if let Some((index, &value)) = s.iter().enumerate().find(|(_, x)| x.abs() > 1.0) {
                return Err(Error::UnnormalizedInput { index, value });
            }
            Ok(s.to_vec())
        }
        InputMode::Squashed => Ok(s
            .iter()
            .enumerate()
            .map(|(j, x)| (params.lambda[arch.lambda_index(0, j)] * x).tanh())
            .collect()),
    }
}

pub fn build_tracked(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    mode: InputMode,
) -> Result<TrackedCircuit> {
    let encoded = encoded_input(arch, params, s, mode)?;
    let n = arch.n_qubits;
    let ring = arch.ring();
    let mut circuit = Circuit::with_capacity(n, arch.gate_count());
    let mut sources = Vec::with_capacity(arch.gate_count());
    for l in 0..=arch.n_layers {
        for q in 0..n {
            let k = arch.phi_index(l, q, 0);
            circuit.push(GateOp::rz(q, params.phi[k]))?;
            circuit.push(GateOp::ry(q, params.phi[k + 1]))?;
            circuit.push(GateOp::rz(q, params.phi[k + 2]))?;
            sources.extend([
                AngleSource::Phi(k),
                AngleSource::Phi(k + 1),
                AngleSource::Phi(k + 2),
            ]);
        }
        for &(a, b) in &ring {
            circuit.push(GateOp::cz(a, b))?;
            sources.push(AngleSource::Fixed);
        }
        if l < arch.n_layers {
            for (q, x) in encoded.iter().enumerate() {
                let scale = params.lambda[arch.lambda_index(l, q)];
                circuit.push(GateOp::rx(q, scale * x))?;
                sources.push(AngleSource::Encoding { layer: l, qubit: q });
            }
        }
    }
    Ok(TrackedCircuit {
        circuit,
        sources,
        encoded,
    })
}

/// The data re-uploading circuit for observation `s` (encoded as given).
pub fn build_circuit(arch: &PqcArchitecture, params: &ParameterSet, s: &[f64]) -> Result<Circuit> {
    Ok(build_tracked(arch, params, s, InputMode::Raw)?.circuit)
}

/// Simulation backend for evaluating the circuit.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Backend {
    #[default]
    Statevector,
    /// Density-matrix evolution with the given noise after every gate.
    Noisy(NoiseModel),
}

/// Register state for whichever backend is active.
#[derive(Debug, Clone)]
pub enum Register {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl Backend {
    pub fn initial(&self, n_qubits: usize) -> Result<Register> {
        Ok(match self {
            Backend::Statevector => Register::Pure(StateVector::zero(n_qubits)?),
            Backend::Noisy(_) => Register::Mixed(DensityMatrix::zero(n_qubits)?),
        })
    }

    pub fn apply(&self, reg: &mut Register, op: &GateOp) -> Result<()> {
        match (self, reg) {
            (Backend::Statevector, Register::Pure(s)) => s.apply(op)?,
            (Backend::Noisy(noise), Register::Mixed(rho)) => rho.apply_noisy(op, noise)?,
            _ => unreachable!("register does not belong to this backend"),
        }
        Ok(())
    }

    pub fn run_ops(&self, reg: &mut Register, ops: &[GateOp]) -> Result<()> {
        for op in ops {
            self.apply(reg, op)?;
        }
        Ok(())
    }

    /// Raw `<Z_q>` for `q < count`.
    pub fn z_expectations(&self, reg: &Register, count: usize) -> Result<Vec<f64>> {
        Ok(match reg {
            Register::Pure(s) => single_z_expectations(s, count)?,
            Register::Mixed(rho) => single_z_expectations_density(rho, count)?,
        })
    }

    pub fn is_noisy(&self) -> bool {
        matches!(self, Backend::Noisy(_))
    }
}

/// Raw single-qubit Z expectations `<Z_a>` for every action.
pub fn raw_expectations(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    mode: InputMode,
    backend: &Backend,
) -> Result<Vec<f64>> {
    let tracked = build_tracked(arch, params, s, mode)?;
    let mut reg = backend.initial(arch.n_qubits)?;
    backend.run_ops(&mut reg, tracked.circuit.ops())?;
    backend.z_expectations(&reg, arch.n_actions)
}

/// `<O_a> = w_a <Z_a>` on the pure-state path with raw encoding.
pub fn action_expectations(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
) -> Result<Vec<f64>> {
    let raw = raw_expectations(arch, params, s, InputMode::Raw, &Backend::Statevector)?;
    Ok(raw.iter().zip(&params.w).map(|(z, w)| w * z).collect())
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax-PQC policy `pi(a|s)`.
pub fn policy(arch: &PqcArchitecture, params: &ParameterSet, s: &[f64]) -> Result<Vec<f64>> {
    Ok(softmax(&action_expectations(arch, params, s)?))
}

/// `Q(s, a) = <O_a>` evaluated on the squashed input `tanh(lambda_0 s)`.
pub fn q_values(arch: &PqcArchitecture, params: &ParameterSet, s: &[f64]) -> Result<Vec<f64>> {
    let raw = raw_expectations(arch, params, s, InputMode::Squashed, &Backend::Statevector)?;
    Ok(raw.iter().zip(&params.w).map(|(z, w)| w * z).collect())
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// On-disk form of a PQC model. Field order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcCheckpoint {
    pub kind: String,
    pub mode: InputMode,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_actions: usize,
    pub phi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
}

pub const PQC_CHECKPOINT_KIND: &str = "pqc";

impl PqcCheckpoint {
    pub fn new(arch: &PqcArchitecture, params: &ParameterSet, mode: InputMode) -> Self {
        PqcCheckpoint {
            kind: PQC_CHECKPOINT_KIND.into(),
            mode,
            n_qubits: arch.n_qubits,
            n_layers: arch.n_layers,
            n_actions: arch.n_actions,
            phi: params.phi.clone(),
            lambda: params.lambda.clone(),
            w: params.w.clone(),
        }
    }

    pub fn architecture(&self) -> Result<PqcArchitecture> {
        PqcArchitecture::new(self.n_qubits, self.n_layers, self.n_actions)
    }

    pub fn parameters(&self) -> Result<ParameterSet> {
        let params = ParameterSet {
            phi: self.phi.clone(),
            lambda: self.lambda.clone(),
            w: self.w.clone(),
        };
        params.validate(&self.architecture()?)?;
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: PqcCheckpoint = serde_json::from_str(text)?;
        if ckpt.kind != PQC_CHECKPOINT_KIND {
            return Err(Error::Config(format!(
                "checkpoint kind {:?} is not {PQC_CHECKPOINT_KIND:?}",
                ckpt.kind
            )));
        }
        ckpt.parameters()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        PqcCheckpoint::from_json(&text).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
