use serde::{Deserialize, Serialize};

use super::GradientSet;
use crate::error::{Error, Result};
use crate::model::ParamGroup;
use crate::pqc::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    pub phi: f64,
    pub lambda: f64,
    pub w: f64,
    pub classical: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            phi: 0.03,
            lambda: 0.05,
            w: 0.03,
            classical: 1e-3,
        }
    }
}

impl LearningRates {
    pub fn for_group(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Phi => self.phi,
            ParamGroup::Lambda => self.lambda,
            ParamGroup::W => self.w,
            ParamGroup::Classical => self.classical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

/// Adam with bias correction over a flat parameter vector split into
/// consecutive groups, each with its own learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    /// `(group length, learning rate)` in flat order.
    groups: Vec<(usize, f64)>,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(groups: Vec<(usize, f64)>, config: AdamConfig) -> Self {
        let n: usize = groups.iter().map(|(len, _)| len).sum();
        AdamState {
            config,
            groups,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn for_groups(groups: &[(ParamGroup, usize)], lrs: &LearningRates, config: AdamConfig) -> Self {
        AdamState::new(
            groups.iter().map(|&(g, len)| (len, lrs.for_group(g))).collect(),
            config,
        )
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One descent step `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape {
                what: "Adam parameters",
                expected: self.m.len(),
                found: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        let AdamConfig { beta1, beta2, eps } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let mut offset = 0;
        for &(len, lr) in &self.groups {
            for i in offset..offset + len {
                let g = grads[i];
                self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            offset += len;
        }
        Ok(())
    }
}

/// Adam update of a PQC parameter set with groups `phi`, `lambda`, `w`.
pub fn adam_step(state: &mut AdamState, params: &mut ParameterSet, grads: &GradientSet) -> Result<()> {
    let mut flat = params.to_flat();
    state.step(&mut flat, &grads.to_flat())?;
    let (n_phi, n_lambda) = (params.phi.len(), params.lambda.len());
    params.phi.copy_from_slice(&flat[..n_phi]);
    params.lambda.copy_from_slice(&flat[n_phi..n_phi + n_lambda]);
    params.w.copy_from_slice(&flat[n_phi + n_lambda..]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pqc::PqcArchitecture;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(vec![(3, 0.03)], AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = AdamState::new(vec![(1, 0.03)], AdamConfig::default());
        let mut p = vec![0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        // m_hat = v_hat = 1 after bias correction
        assert!((p[0] + 0.03 / (1.0 + 1e-7)).abs() < 1e-15);
        assert!((p[0] + 0.03).abs() < 1e-8);
    }

    #[test]
    fn groups_use_their_own_rates() {
        let arch = PqcArchitecture::new(1, 1, 1).unwrap();
        let mut params = ParameterSet::identity(&arch);
        let groups = [
            (ParamGroup::Phi, arch.n_phi()),
            (ParamGroup::Lambda, arch.n_lambda()),
            (ParamGroup::W, arch.n_actions),
        ];
        let mut adam = AdamState::for_groups(&groups, &LearningRates::default(), AdamConfig::default());
        let before = params.clone();
        let grads = GradientSet {
            d_phi: vec![1.0; arch.n_phi()],
            d_lambda: vec![1.0; arch.n_lambda()],
            d_w: vec![1.0; arch.n_actions],
        };
        adam_step(&mut adam, &mut params, &grads).unwrap();
        let d_phi = before.phi[0] - params.phi[0];
        let d_lambda = before.lambda[0] - params.lambda[0];
        let d_w = before.w[0] - params.w[0];
        assert!((d_phi - 0.03).abs() < 1e-8);
        assert!((d_lambda - 0.05).abs() < 1e-8);
        assert!((d_w - 0.03).abs() < 1e-8);
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let mut a = AdamState::new(vec![(2, 0.1), (1, 0.2)], AdamConfig::default());
        let mut b = a.clone();
        let (mut pa, mut pb) = (vec![0.3, 0.1, -0.7], vec![0.3, 0.1, -0.7]);
        for g in [[0.5, -1.0, 2.0], [0.1, 0.2, -0.3]] {
            a.step(&mut pa, &g).unwrap();
            b.step(&mut pb, &g).unwrap();
        }
        assert_eq!(pa.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   pb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut adam = AdamState::new(vec![(2, 0.1)], AdamConfig::default());
        assert!(adam.step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(adam.step(&mut [0.0; 2], &[0.0; 1]).is_err());
    }
}
