//! Quantum-cloud task scheduling with data re-uploading PQC agents.
//!
//! [`env`] simulates QPU nodes serving a task stream, [`pqc`] and [`model`]
//! provide the function approximators, [`autograd`] their gradients and the
//! optimizer, [`agents`] the policies and training loops, and [`workload`]
//! the task sources.

mod error;

pub mod agents;
pub mod autograd;
pub mod env;
pub mod model;
pub mod pqc;
pub mod workload;

pub use error::{Error, Result};
