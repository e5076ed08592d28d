use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{episode_seeds, EpsilonSchedule, ReplayBuffer};
use crate::autograd::{dqn_loss_grad, reinforce_loss_grad, AdamConfig, AdamState, LearningRates, TdLoss};
use crate::env::{cumulative_metrics, CloudEnv, Transition};
use crate::error::{Error, Result};
use crate::model::Approximator;
use crate::pqc::{argmax, softmax};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps between online-network updates.
    pub update_every: usize,
    /// Environment steps between target-network copies.
    pub target_sync_every: usize,
    pub loss: TdLoss,
    pub epsilon: EpsilonSchedule,
    /// Multiplies rewards before they enter the replay buffer, so Q-values
    /// stay within reach of the output weights. Leaves the greedy action
    /// unchanged; logged returns are unscaled.
    pub reward_scale: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            batch_size: 16,
            buffer_capacity: 10_000,
            update_every: 10,
            target_sync_every: 30,
            loss: TdLoss::Mse,
            epsilon: EpsilonSchedule::default(),
            reward_scale: 0.03,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::Config(format!(
                "batch size {} must be positive and fit in the replay buffer ({})",
                self.batch_size, self.buffer_capacity
            )));
        }
        if self.update_every == 0 || self.target_sync_every == 0 {
            return Err(Error::Config("update periods must be at least 1".into()));
        }
        if let TdLoss::Huber { delta } = self.loss {
            if !(delta > 0.0) {
                return Err(Error::Config("Huber delta must be positive".into()));
            }
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return Err(Error::Config("reward_scale must be positive".into()));
        }
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub seed: u64,
    pub learning_rates: LearningRates,
    pub adam: AdamConfig,
    pub dqn: DqnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 1500,
            gamma: 0.99,
            seed: 0,
            learning_rates: LearningRates::default(),
            adam: AdamConfig::default(),
            dqn: DqnConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        self.dqn.validate()
    }
}

/// One training episode: `epsilon` is empty for policy-gradient runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardLogRow {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub wait: f64,
    pub epsilon: Option<f64>,
}

fn check_shapes<M: Approximator>(env: &CloudEnv, model: &M) -> Result<()> {
    if model.n_inputs() != env.observation_len() {
        return Err(Error::Shape {
            what: "model inputs",
            expected: env.observation_len(),
            found: model.n_inputs(),
        });
    }
    if model.n_actions() != env.n_nodes() {
        return Err(Error::Shape {
            what: "model actions",
            expected: env.n_nodes(),
            found: model.n_actions(),
        });
    }
    Ok(())
}

/// Exploration randomness, independent of the task-stream seeds.
fn action_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn apply_update<M: Approximator>(model: &mut M, adam: &mut AdamState, grad: &[f64]) -> Result<()> {
    let mut flat = model.flat_params();
    adam.step(&mut flat, grad)?;
    if flat.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("parameters after update"));
    }
    model.set_flat_params(&flat)
}

/// REINFORCE: sample an episode from the softmax policy, then take one Adam
/// step on the episode's loss.
pub fn train_reinforce<M: Approximator>(
    env: &mut CloudEnv,
    model: &mut M,
    config: &TrainConfig,
) -> Result<Vec<RewardLogRow>> {
    config.validate()?;
    check_shapes(env, model)?;
    let mut rng = action_rng(config.seed);
    let mut adam = AdamState::for_groups(&model.param_groups(), &config.learning_rates, config.adam);
    let mut log = Vec::with_capacity(config.episodes);
    for (k, seed) in episode_seeds(config.seed, config.episodes).into_iter().enumerate() {
        let mut obs = env.reset(seed);
        let mut trajectory = Vec::with_capacity(env.config().episode_len);
        while !env.is_done() {
            let probs = softmax(&model.forward(&obs)?);
            let a = sample_index(&probs, &mut rng);
            let out = env.step(a)?;
            trajectory.push(Transition {
                s: obs,
                a,
                r: out.reward,
                s_next: out.observation.clone(),
                terminal: out.done,
            });
            obs = out.observation;
        }
        let (_, grad) = reinforce_loss_grad(model, &trajectory, config.gamma)?;
        apply_update(model, &mut adam, &grad)?;
        let (ret, wait) = cumulative_metrics(&env.trace(k));
        if (k + 1) % 50 == 0 {
            log::info!("reinforce episode {}: return {ret:.3}", k + 1);
        }
        log.push(RewardLogRow {
            episode: k,
            ret,
            wait,
            epsilon: None,
        });
    }
    Ok(log)
}

/// Deep Q-learning with experience replay and a periodically copied target
/// network. Exploration decays per episode.
pub fn train_dqn<M: Approximator>(
    env: &mut CloudEnv,
    model: &mut M,
    config: &TrainConfig,
) -> Result<Vec<RewardLogRow>> {
    config.validate()?;
    check_shapes(env, model)?;
    let dqn = &config.dqn;
    let mut rng = action_rng(config.seed);
    let mut adam = AdamState::for_groups(&model.param_groups(), &config.learning_rates, config.adam);
    let mut buffer = ReplayBuffer::new(dqn.buffer_capacity)?;
    let mut target = model.clone();
    let mut steps = 0usize;
    let mut log = Vec::with_capacity(config.episodes);
    for (k, seed) in episode_seeds(config.seed, config.episodes).into_iter().enumerate() {
        let eps = dqn.epsilon.value(k);
        let mut obs = env.reset(seed);
        while !env.is_done() {
            let a = if rng.gen::<f64>() < eps {
                rng.gen_range(0..env.n_nodes())
            } else {
                argmax(&model.forward(&obs)?)
            };
            let out = env.step(a)?;
            buffer.push(Transition {
                s: obs,
                a,
                r: dqn.reward_scale * out.reward,
                s_next: out.observation.clone(),
                terminal: out.done,
            });
            obs = out.observation;
            steps += 1;
            if steps % dqn.update_every == 0 && buffer.len() >= dqn.batch_size {
                let batch = buffer.sample(dqn.batch_size, &mut rng)?;
                let (_, grad) = dqn_loss_grad(model, &target, &batch, config.gamma, dqn.loss)?;
                apply_update(model, &mut adam, &grad)?;
            }
            if steps % dqn.target_sync_every == 0 {
                target = model.clone();
            }
        }
        let (ret, wait) = cumulative_metrics(&env.trace(k));
        if (k + 1) % 50 == 0 {
            log::info!("dqn episode {}: return {ret:.3}, epsilon {eps:.3}", k + 1);
        }
        log.push(RewardLogRow {
            episode: k,
            ret,
            wait,
            epsilon: Some(eps),
        });
    }
    Ok(log)
}
