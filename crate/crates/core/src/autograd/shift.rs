use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::pqc::{
    build_tracked, AngleSource, Backend, InputMode, ParameterSet, PqcArchitecture,
};

/// Gradient of a scalar with respect to every trainable PQC parameter,
/// shaped like [`ParameterSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub d_phi: Vec<f64>,
    pub d_lambda: Vec<f64>,
    pub d_w: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(arch: &PqcArchitecture) -> Self {
        GradientSet {
            d_phi: vec![0.0; arch.n_phi()],
            d_lambda: vec![0.0; arch.n_lambda()],
            d_w: vec![0.0; arch.n_actions],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d_phi.len() + self.d_lambda.len() + self.d_w.len());
        out.extend_from_slice(&self.d_phi);
        out.extend_from_slice(&self.d_lambda);
        out.extend_from_slice(&self.d_w);
        out
    }

    pub fn from_flat(arch: &PqcArchitecture, flat: &[f64]) -> Result<Self> {
        let p = ParameterSet::from_flat(arch, flat)?;
        Ok(GradientSet {
            d_phi: p.phi,
            d_lambda: p.lambda,
            d_w: p.w,
        })
    }

    pub fn validate(&self, arch: &PqcArchitecture) -> Result<()> {
        for (what, v, expected) in [
            ("d_phi", &self.d_phi, arch.n_phi()),
            ("d_lambda", &self.d_lambda, arch.n_lambda()),
            ("d_w", &self.d_w, arch.n_actions),
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
}

/// Raw expectations `<Z_a>` and their derivatives with respect to `phi` and
/// `lambda`, one row per action.
#[derive(Debug, Clone)]
pub struct ExpectationJacobian {
    pub raw: Vec<f64>,
    pub d_phi: Vec<Vec<f64>>,
    pub d_lambda: Vec<Vec<f64>>,
}

impl ExpectationJacobian {
    /// Gradient of `sum_a coeffs[a] * w_a <Z_a>`.
    pub fn contract(&self, params: &ParameterSet, coeffs: &[f64]) -> GradientSet {
        let mut d_phi = vec![0.0; self.d_phi[0].len()];
        let mut d_lambda = vec![0.0; self.d_lambda[0].len()];
        let mut d_w = vec![0.0; coeffs.len()];
        for (a, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let scale = c * params.w[a];
            for (g, d) in d_phi.iter_mut().zip(&self.d_phi[a]) {
                *g += scale * d;
            }
            for (g, d) in d_lambda.iter_mut().zip(&self.d_lambda[a]) {
                *g += scale * d;
            }
            d_w[a] = c * self.raw[a];
        }
        GradientSet {
            d_phi,
            d_lambda,
            d_w,
        }
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Phi(usize),
    Lambda(usize),
}

/// Parameter-shift Jacobian of all action expectations.
///
/// Every trainable quantity enters the circuit through a rotation angle
/// `exp(-i theta sigma / 2)`, for which
/// `dE/dtheta = (E(theta + pi/2) - E(theta - pi/2)) / 2` holds exactly.
/// Encoding angles `lambda_{l,j} * s'_j` are chained back to `lambda`,
/// including the `tanh(lambda_{0,j} s_j)` squash in [`InputMode::Squashed`].
/// The register state before each shifted gate is reused, so each shift
/// only re-simulates the suffix of the circuit.
pub fn expectation_jacobian(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    mode: InputMode,
    backend: &Backend,
) -> Result<ExpectationJacobian> {
    let tracked = build_tracked(arch, params, s, mode)?;
    let ops = tracked.circuit.ops();
    let n_actions = arch.n_actions;
    let mut d_phi = vec![vec![0.0; arch.n_phi()]; n_actions];
    let mut d_lambda = vec![vec![0.0; arch.n_lambda()]; n_actions];

    let mut reg = backend.initial(arch.n_qubits)?;
    let mut chain: Vec<(Slot, f64)> = Vec::with_capacity(2);
    for (k, op) in ops.iter().enumerate() {
        chain.clear();
        match tracked.sources[k] {
            AngleSource::Fixed => {}
            AngleSource::Phi(i) => chain.push((Slot::Phi(i), 1.0)),
            AngleSource::Encoding { layer, qubit } => {
                let x = tracked.encoded[qubit];
                chain.push((Slot::Lambda(arch.lambda_index(layer, qubit)), x));
                if mode == InputMode::Squashed {
                    // d/d lambda_0 of lambda_l * tanh(lambda_0 s)
                    let scale = params.lambda[arch.lambda_index(layer, qubit)];
                    let factor = scale * s[qubit] * (1.0 - x * x);
                    chain.push((Slot::Lambda(arch.lambda_index(0, qubit)), factor));
                }
                chain.retain(|(_, f)| *f != 0.0);
            }
        }
        if !chain.is_empty() {
            let theta = op.gate.angle().expect("tracked angle on a rotation");
            let shifted = |delta: f64| -> Result<Vec<f64>> {
                let mut r = reg.clone();
                backend.apply(&mut r, &op.with_angle(theta + delta))?;
                backend.run_ops(&mut r, &ops[k + 1..])?;
                backend.z_expectations(&r, n_actions)
            };
            let plus = shifted(FRAC_PI_2)?;
            let minus = shifted(-FRAC_PI_2)?;
            for a in 0..n_actions {
                let g = 0.5 * (plus[a] - minus[a]);
                for &(slot, factor) in &chain {
                    match slot {
                        Slot::Phi(i) => d_phi[a][i] += factor * g,
                        Slot::Lambda(i) => d_lambda[a][i] += factor * g,
                    }
                }
            }
        }
        backend.apply(&mut reg, op)?;
    }
    let raw = backend.z_expectations(&reg, n_actions)?;
    Ok(ExpectationJacobian {
        raw,
        d_phi,
        d_lambda,
    })
}

/// Gradient of `<O_a> = w_a <Z_a>` on the pure-state path with raw encoding.
pub fn param_shift_grad(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    action: usize,
) -> Result<GradientSet> {
    param_shift_grad_with(arch, params, s, action, InputMode::Raw, &Backend::Statevector)
}

pub fn param_shift_grad_with(
    arch: &PqcArchitecture,
    params: &ParameterSet,
    s: &[f64],
    action: usize,
    mode: InputMode,
    backend: &Backend,
) -> Result<GradientSet> {
    if action >= arch.n_actions {
        return Err(Error::ActionOutOfRange {
            action,
            n_nodes: arch.n_actions,
        });
    }
    let jac = expectation_jacobian(arch, params, s, mode, backend)?;
    let mut coeffs = vec![0.0; arch.n_actions];
    coeffs[action] = 1.0;
    Ok(jac.contract(params, &coeffs))
}

/// Central differences `(f(x+h) - f(x-h)) / 2h` over a flat vector.
pub fn finite_diff_flat(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference gradient of `f` with respect to every PQC parameter.
pub fn finite_diff_grad(
    mut f: impl FnMut(&ParameterSet) -> Result<f64>,
    arch: &PqcArchitecture,
    params: &ParameterSet,
    h: f64,
) -> Result<GradientSet> {
    let flat = finite_diff_flat(
        |x| f(&ParameterSet::from_flat(arch, x)?),
        &params.to_flat(),
        h,
    )?;
    GradientSet::from_flat(arch, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pqc::action_expectations;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_rotation_closed_form() {
        // Only phi(1, 0, RY) is non-zero: <Z> = cos(phi), d/dphi = -sin(phi).
        let arch = PqcArchitecture::new(1, 1, 1).unwrap();
        let mut params = ParameterSet::identity(&arch);
        let k = arch.phi_index(1, 0, 1);
        params.phi[k] = FRAC_PI_2;
        let g = param_shift_grad(&arch, &params, &[0.0], 0).unwrap();
        assert!((g.d_phi[k] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn weight_gradient_is_sparse() {
        let arch = PqcArchitecture::new(3, 2, 3).unwrap();
        let params = ParameterSet::init(&arch, &mut ChaCha8Rng::seed_from_u64(6));
        let s = [0.2, 0.7, -0.4];
        let raw = action_expectations(&arch, &params, &s).unwrap();
        let g = param_shift_grad(&arch, &params, &s, 1).unwrap();
        assert_eq!(g.d_w[0], 0.0);
        assert_eq!(g.d_w[2], 0.0);
        assert!((g.d_w[1] - raw[1] / params.w[1]).abs() < 1e-12);
    }

    #[test]
    fn quadratic_and_linear_finite_differences() {
        let g = finite_diff_flat(|x| Ok(x[0] * x[0]), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        for h in [1e-3, 0.5, 2.0] {
            let g = finite_diff_flat(|x| Ok(4.0 * x[0] - 2.0 * x[1]), &[1.0, -7.0], h).unwrap();
            assert!((g[0] - 4.0).abs() < 1e-9 && (g[1] + 2.0).abs() < 1e-9);
        }
        assert!(finite_diff_flat(|x| Ok(x[0]), &[1.0], 0.0).is_err());
    }

    #[test]
    fn action_index_checked() {
        let arch = PqcArchitecture::new(2, 1, 2).unwrap();
        let params = ParameterSet::identity(&arch);
        assert!(param_shift_grad(&arch, &params, &[0.0, 0.0], 2).is_err());
    }
}
