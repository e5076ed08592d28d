use serde::{Deserialize, Serialize};

use crate::env::Transition;
use crate::error::{Error, Result};
use crate::model::Approximator;
use crate::pqc::{softmax, PROBABILITY_FLOOR};

/// `G_t = sum_k gamma^k r_{t+k}`, computed backwards.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (g, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *g = acc;
    }
    out
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("discount must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// REINFORCE loss `-sum_t G_t log pi(a_t | s_t)` and its gradient, using
/// `d log pi(a) / d out_b = delta_ab - pi(b)` chained through the model.
pub fn reinforce_loss_grad<M: Approximator>(
    model: &M,
    trajectory: &[Transition],
    gamma: f64,
) -> Result<(f64, Vec<f64>)> {
    if trajectory.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    check_gamma(gamma)?;
    let rewards: Vec<f64> = trajectory.iter().map(|t| t.r).collect();
    let returns = discounted_returns(&rewards, gamma);
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.n_params()];
    for (step, g_t) in trajectory.iter().zip(returns) {
        let probs = softmax(&model.forward(&step.s)?);
        let a = step.a;
        if a >= probs.len() {
            return Err(Error::ActionOutOfRange {
                action: a,
                n_nodes: probs.len(),
            });
        }
        loss -= g_t * probs[a].max(PROBABILITY_FLOOR).ln();
        let coeffs: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(b, p)| -g_t * (((a == b) as u8 as f64) - p))
            .collect();
        for (acc, v) in grad.iter_mut().zip(model.vjp(&step.s, &coeffs)?) {
            *acc += v;
        }
    }
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("policy-gradient loss"));
    }
    Ok((loss, grad))
}

/// Regression loss between `Q(s_i, a_i)` and the bootstrap target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TdLoss {
    #[default]
    Mse,
    Huber {
        delta: f64,
    },
}

impl TdLoss {
    fn value_and_slope(&self, err: f64) -> (f64, f64) {
        match *self {
            TdLoss::Mse => (err * err, 2.0 * err),
            TdLoss::Huber { delta } => {
                if err.abs() <= delta {
                    (0.5 * err * err, err)
                } else {
                    (delta * (err.abs() - 0.5 * delta), delta * err.signum())
                }
            }
        }
    }
}

/// Bellman targets `y = r + gamma max_a' Q_target(s', a')`, or `y = r` on
/// terminal transitions.
pub fn bellman_targets<M: Approximator>(
    target: &M,
    batch: &[Transition],
    gamma: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.r);
            }
            let next = target.forward(&t.s_next)?;
            let best = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(t.r + gamma * best)
        })
        .collect()
}

/// Mean TD loss over the batch. Gradients flow through `model` only; the
/// target network is read, never differentiated.
pub fn dqn_loss_grad<M: Approximator>(
    model: &M,
    target: &M,
    batch: &[Transition],
    gamma: f64,
    loss_kind: TdLoss,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    check_gamma(gamma)?;
    let targets = bellman_targets(target, batch, gamma)?;
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.n_params()];
    for (t, y) in batch.iter().zip(targets) {
        let q = model.forward(&t.s)?;
        if t.a >= q.len() {
            return Err(Error::ActionOutOfRange {
                action: t.a,
                n_nodes: q.len(),
            });
        }
        let (value, slope) = loss_kind.value_and_slope(q[t.a] - y);
        loss += scale * value;
        if slope != 0.0 {
            let mut coeffs = vec![0.0; q.len()];
            coeffs[t.a] = scale * slope;
            for (acc, v) in grad.iter_mut().zip(model.vjp(&t.s, &coeffs)?) {
                *acc += v;
            }
        }
    }
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("Q-learning loss"));
    }
    Ok((loss, grad))
}
