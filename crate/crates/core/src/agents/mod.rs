//! Scheduling policies: the greedy baseline, PQC and MLP agents, their
//! training loops and paired evaluation.

mod mlp;
mod train;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{cumulative_metrics, CloudEnv, EpisodeTrace, QNode, QTask, Transition};
use crate::error::{Error, Result};
use crate::model::{Approximator, PqcModel};
use crate::pqc::argmax;

pub use mlp::{Activation, Mlp, MlpCheckpoint, DEFAULT_MLP_SHAPE, MLP_CHECKPOINT_KIND};
pub use train::{train_dqn, train_reinforce, DqnConfig, RewardLogRow, TrainConfig};

/// Least-loaded feasible node, lowest index on ties. With no feasible node,
/// the largest node (lowest index on ties); the environment then penalizes.
pub fn greedy_select(task: &QTask, nodes: &[QNode]) -> Result<usize> {
    if nodes.is_empty() {
        return Err(Error::NoNodes);
    }
    let best = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.fits(task))
        .min_by_key(|(i, n)| (n.pending_count, *i))
        .map(|(i, _)| i);
    Ok(best.unwrap_or_else(|| {
        nodes
            .iter()
            .enumerate()
            .max_by_key(|(i, n)| (n.n_qubits, std::cmp::Reverse(*i)))
            .map(|(i, _)| i)
            .expect("non-empty")
    }))
}

/// `eps(k) = max(min, start * decay^k)` for episode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub min: f64,
    pub decay: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            min: 0.01,
            decay: 0.99,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.min)
            && (self.min..=1.0).contains(&self.start)
            && self.decay > 0.0
            && self.decay <= 1.0;
        if !ok {
            return Err(Error::Config(format!("invalid epsilon schedule {self:?}")));
        }
        Ok(())
    }

    pub fn value(&self, episode: usize) -> f64 {
        let k = i32::try_from(episode).unwrap_or(i32::MAX);
        (self.start * self.decay.powi(k)).max(self.min)
    }
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Evicts the oldest transition once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `batch` distinct transitions drawn uniformly.
    pub fn sample(&self, batch: usize, rng: &mut impl Rng) -> Result<Vec<Transition>> {
        if batch == 0 || batch > self.items.len() {
            return Err(Error::Config(format!(
                "cannot sample {batch} transitions from {} stored",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect())
    }
}

/// A policy that can be evaluated: argmax over model outputs, or greedy.
#[derive(Debug, Clone)]
pub enum Agent {
    Greedy,
    Pqc(PqcModel),
    Mlp(Mlp),
}

impl Agent {
    pub fn select(&self, env: &CloudEnv, obs: &[f64]) -> Result<usize> {
        match self {
            Agent::Greedy => {
                let task = env.current_task().ok_or(Error::NoPendingTask)?;
                greedy_select(task, env.nodes())
            }
            Agent::Pqc(m) => Ok(argmax(&m.forward(obs)?)),
            Agent::Mlp(m) => Ok(argmax(&m.forward(obs)?)),
        }
    }
}

/// Per-episode environment seeds derived from one master seed. Agents
/// evaluated with the same master seed see the same task streams.
pub fn episode_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn run_episode(agent: &Agent, env: &mut CloudEnv, seed: u64, episode: usize) -> Result<EpisodeTrace> {
    let mut obs = env.reset(seed);
    while !env.is_done() {
        let action = agent.select(env, &obs)?;
        obs = env.step(action)?.observation;
    }
    Ok(env.trace(episode))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub wait: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mean_return: f64,
    pub mean_wait: f64,
    pub episodes: Vec<EpisodeSummary>,
    pub traces: Vec<EpisodeTrace>,
}

/// Runs `n_episodes` deterministic episodes on the task streams derived
/// from `seed`.
pub fn evaluate(agent: &Agent, env: &mut CloudEnv, n_episodes: usize, seed: u64) -> Result<EvalReport> {
    if n_episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut episodes = Vec::with_capacity(n_episodes);
    let mut traces = Vec::with_capacity(n_episodes);
    for (k, s) in episode_seeds(seed, n_episodes).into_iter().enumerate() {
        let trace = run_episode(agent, env, s, k)?;
        let (ret, wait) = cumulative_metrics(&trace);
        episodes.push(EpisodeSummary { episode: k, ret, wait });
        traces.push(trace);
    }
    let n = n_episodes as f64;
    Ok(EvalReport {
        mean_return: episodes.iter().map(|e| e.ret).sum::<f64>() / n,
        mean_wait: episodes.iter().map(|e| e.wait).sum::<f64>() / n,
        episodes,
        traces,
    })
}
