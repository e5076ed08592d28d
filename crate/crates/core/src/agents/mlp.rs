use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Approximator, ParamGroup};

/// Hidden-layer nonlinearity. Output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
}

pub const DEFAULT_MLP_SHAPE: [usize; 5] = [8, 64, 64, 64, 5];

/// Fully connected network. Parameters are laid out layer by layer, each
/// as a row-major `out x in` weight block followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Architecture(format!(
                "MLP needs at least two non-zero layer sizes, got {sizes:?}"
            )));
        }
        Ok(())
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Mlp::check_sizes(sizes)?;
        Ok(Mlp {
            sizes: sizes.to_vec(),
            activation: Activation::Tanh,
            params: vec![0.0; Mlp::param_count(sizes)],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut mlp = Mlp::zeros(sizes)?;
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut mlp.params[offset..offset + fan_in * fan_out] {
                *p = rng.gen_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(mlp)
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        Mlp::check_sizes(sizes)?;
        let expected = Mlp::param_count(sizes);
        if params.len() != expected {
            return Err(Error::Shape {
                what: "MLP parameters",
                expected,
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("MLP parameters"));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            activation,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_input(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.sizes[0] {
            return Err(Error::Shape {
                what: "observation",
                expected: self.sizes[0],
                found: s.len(),
            });
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(s.to_vec());
        let mut offset = 0;
        for (i, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let bias = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &acts[i];
            let mut out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    bias[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if i + 1 < n_layers {
                match self.activation {
                    Activation::Tanh => out.iter_mut().for_each(|x| *x = x.tanh()),
                }
            }
            acts.push(out);
            offset += n_in * n_out + n_out;
        }
        acts
    }
}

impl Approximator for Mlp {
    fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn n_actions(&self) -> usize {
        *self.sizes.last().expect("validated sizes")
    }

    fn forward(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.check_input(s)?;
        Ok(self.activations(s).pop().expect("output layer"))
    }

    fn vjp(&self, s: &[f64], coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_input(s)?;
        if coeffs.len() != self.n_actions() {
            return Err(Error::Shape {
                what: "output coefficients",
                expected: self.n_actions(),
                found: coeffs.len(),
            });
        }
        let acts = self.activations(s);
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = coeffs.to_vec();
        let mut end = self.params.len();
        for i in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[i], self.sizes[i + 1]);
            let start = end - (n_in * n_out + n_out);
            let input = &acts[i];
            for o in 0..n_out {
                let d = delta[o];
                grad[start + n_in * n_out + o] = d;
                let row = &mut grad[start + o * n_in..start + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g = d * x;
                }
            }
            if i > 0 {
                let weights = &self.params[start..start + n_in * n_out];
                let mut back = vec![0.0; n_in];
                for o in 0..n_out {
                    for (b, w) in back.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                        *b += delta[o] * w;
                    }
                }
                // tanh' = 1 - tanh^2, taken from the stored activation
                for (b, a) in back.iter_mut().zip(input) {
                    *b *= 1.0 - a * a;
                }
                delta = back;
            }
            end = start;
        }
        Ok(grad)
    }

    fn param_groups(&self) -> Vec<(ParamGroup, usize)> {
        vec![(ParamGroup::Classical, self.params.len())]
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params.clone()
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.params.len() {
            return Err(Error::Shape {
                what: "MLP parameters",
                expected: self.params.len(),
                found: flat.len(),
            });
        }
        self.params.copy_from_slice(flat);
        Ok(())
    }
}

pub const MLP_CHECKPOINT_KIND: &str = "mlp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub kind: String,
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub params: Vec<f64>,
}

impl MlpCheckpoint {
    pub fn new(mlp: &Mlp) -> Self {
        MlpCheckpoint {
            kind: MLP_CHECKPOINT_KIND.to_string(),
            sizes: mlp.sizes.clone(),
            activation: mlp.activation,
            params: mlp.params.clone(),
        }
    }

    pub fn model(&self) -> Result<Mlp> {
        if self.kind != MLP_CHECKPOINT_KIND {
            return Err(Error::Config(format!("expected an `{MLP_CHECKPOINT_KIND}` checkpoint, found `{}`", self.kind)));
        }
        Mlp::from_params(&self.sizes, self.activation, self.params.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: MlpCheckpoint = serde_json::from_str(text)?;
        ckpt.model()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        MlpCheckpoint::from_json(&text).map_err(|e| Error::file(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::finite_diff_flat;
    use crate::pqc::softmax;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_shape_has_9221_parameters() {
        assert_eq!(Mlp::param_count(&DEFAULT_MLP_SHAPE), 9221);
        assert_eq!(64 * 8 + 64 + 2 * (64 * 64 + 64) + 64 * 5 + 5, 9221);
        let mlp = Mlp::init(&DEFAULT_MLP_SHAPE, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(mlp.n_params(), 9221);
    }

    #[test]
    fn zero_model_is_uniform() {
        let mlp = Mlp::zeros(&DEFAULT_MLP_SHAPE).unwrap();
        let p = softmax(&mlp.forward(&[0.3; 8]).unwrap());
        assert!(p.iter().all(|x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn hand_computed_forward() {
        // 1 -> 1 -> 1: out = w2 * tanh(w1 x + b1) + b2
        let mlp = Mlp::from_params(&[1, 1, 1], Activation::Tanh, vec![0.5, 0.1, -2.0, 0.3]).unwrap();
        let out = mlp.forward(&[0.8]).unwrap()[0];
        assert!((out - (-2.0 * (0.5f64 * 0.8 + 0.1).tanh() + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sizes = [8, 16, 16, 5];
        let mlp = Mlp::init(&sizes, &mut rng).unwrap();
        let s: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = mlp.vjp(&s, &coeffs).unwrap();
        let fd = finite_diff_flat(
            |p| {
                let m = Mlp::from_params(&sizes, Activation::Tanh, p.to_vec())?;
                Ok(m.forward(&s)?.iter().zip(&coeffs).map(|(o, c)| o * c).sum())
            },
            &mlp.flat_params(),
            1e-6,
        )
        .unwrap();
        for (a, b) in g.iter().zip(&fd) {
            let rel = (a - b).abs() / b.abs().max(1e-3);
            assert!(rel < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mlp = Mlp::init(&[3, 4, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let json = MlpCheckpoint::new(&mlp).to_json().unwrap();
        assert_eq!(MlpCheckpoint::from_json(&json).unwrap().model().unwrap(), mlp);
        let wrong = json.replace("\"mlp\"", "\"pqc\"");
        assert!(MlpCheckpoint::from_json(&wrong).is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(Mlp::zeros(&[8]).is_err());
        assert!(Mlp::zeros(&[8, 0, 5]).is_err());
        let mlp = Mlp::zeros(&[2, 2]).unwrap();
        assert!(mlp.forward(&[0.0; 3]).is_err());
        assert!(mlp.vjp(&[0.0; 2], &[1.0]).is_err());
        assert!(Mlp::from_params(&[2, 2], Activation::Tanh, vec![0.0; 5]).is_err());
    }
}
