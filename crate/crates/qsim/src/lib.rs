//! Exact simulation of small qubit registers.
//!
//! Pure states evolve as dense statevectors (up to 12 qubits); mixed states
//! as dense density matrices (up to 8 qubits) under single-qubit Kraus noise.
//! Qubit `q` is bit `q` of a basis index. Every operation is a value
//! transformation with no shared state; randomness is seeded explicitly.

mod channel;
mod circuit;
mod density;
mod error;
mod gate;
mod measure;
mod observable;
mod state;

pub use channel::{amplitude_damping, depolarizing, KrausChannel, NoiseModel};
pub use circuit::Circuit;
pub use density::{
    expectation_z_density, run_circuit_noisy, single_z_expectations_density, DensityMatrix,
    MAX_DENSITY_QUBITS,
};
pub use error::{Result, SimError};
pub use gate::{Gate, GateOp, Mat2, C64};
pub use measure::{bitstring, sample_measurement};
pub use observable::{expectation_z, single_z_expectations, ZObservable};
pub use state::{apply_gate, run_circuit, StateVector, MAX_STATEVECTOR_QUBITS};
