//! Function approximators shared by the training loops.

use serde::{Deserialize, Serialize};

use crate::autograd::{expectation_jacobian, GradientSet};
use crate::error::{Error, Result};
use crate::pqc::{raw_expectations, Backend, InputMode, ParameterSet, PqcArchitecture};

/// Optimizer parameter groups; each group has its own learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    Phi,
    Lambda,
    W,
    Classical,
}

/// A differentiable map from an observation to one output per action
/// (policy logits or Q-values).
pub trait Approximator: Clone {
    fn n_inputs(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn forward(&self, s: &[f64]) -> Result<Vec<f64>>;
    /// `sum_a coeffs[a] * d out_a / d theta`, flattened in parameter order.
    fn vjp(&self, s: &[f64], coeffs: &[f64]) -> Result<Vec<f64>>;
    /// Consecutive parameter groups and their lengths, in flat order.
    fn param_groups(&self) -> Vec<(ParamGroup, usize)>;
    fn flat_params(&self) -> Vec<f64>;
    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()>;

    fn n_params(&self) -> usize {
        self.param_groups().iter().map(|(_, n)| n).sum()
    }
}

/// A PQC bound to an input mode and a simulation backend.
#[derive(Debug, Clone, PartialEq)]
pub struct PqcModel {
    pub arch: PqcArchitecture,
    pub params: ParameterSet,
    pub mode: InputMode,
    pub backend: Backend,
}

impl PqcModel {
    pub fn new(
        arch: PqcArchitecture,
        params: ParameterSet,
        mode: InputMode,
        backend: Backend,
    ) -> Result<Self> {
        arch.validate()?;
        params.validate(&arch)?;
        Ok(PqcModel {
            arch,
            params,
            mode,
            backend,
        })
    }

    pub fn gradient_set(&self, flat: &[f64]) -> Result<GradientSet> {
        GradientSet::from_flat(&self.arch, flat)
    }
}

impl Approximator for PqcModel {
    fn n_inputs(&self) -> usize {
        self.arch.n_qubits
    }

    fn n_actions(&self) -> usize {
        self.arch.n_actions
    }

    fn forward(&self, s: &[f64]) -> Result<Vec<f64>> {
        let raw = raw_expectations(&self.arch, &self.params, s, self.mode, &self.backend)?;
        Ok(raw.iter().zip(&self.params.w).map(|(z, w)| w * z).collect())
    }

    fn vjp(&self, s: &[f64], coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.arch.n_actions {
            return Err(Error::Shape {
                what: "output coefficients",
                expected: self.arch.n_actions,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().all(|c| *c == 0.0) {
            return Ok(vec![0.0; self.arch.n_params()]);
        }
        let jac = expectation_jacobian(&self.arch, &self.params, s, self.mode, &self.backend)?;
        Ok(jac.contract(&self.params, coeffs).to_flat())
    }

    fn param_groups(&self) -> Vec<(ParamGroup, usize)> {
        vec![
            (ParamGroup::Phi, self.arch.n_phi()),
            (ParamGroup::Lambda, self.arch.n_lambda()),
            (ParamGroup::W, self.arch.n_actions),
        ]
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params.to_flat()
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        self.params = ParameterSet::from_flat(&self.arch, flat)?;
        Ok(())
    }
}
