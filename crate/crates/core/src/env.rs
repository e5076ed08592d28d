//! The quantum-cloud scheduling environment.
//!
//! Each step presents one task; the action names the node it is sent to.
//! Nodes serve tasks FIFO, one at a time. A task sent to a node with too few
//! qubits is dropped with a fixed penalty and leaves the node untouched.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{TaskManifest, TaskRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub n_qubits: usize,
    /// Circuit layer operations per second.
    pub clops: f64,
    /// Error per layered gate; reported only.
    pub eplg: f64,
}

impl NodeSpec {
    pub fn new(name: &str, n_qubits: usize, clops: f64, eplg: f64) -> Self {
        NodeSpec {
            name: name.to_string(),
            n_qubits,
            clops,
            eplg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Config(format!("node {}: n_qubits must be positive", self.name)));
        }
        if !(self.clops.is_finite() && self.clops > 0.0) {
            return Err(Error::Config(format!("node {}: clops must be positive", self.name)));
        }
        if !(self.eplg.is_finite() && self.eplg >= 0.0) {
            return Err(Error::Config(format!("node {}: eplg must be non-negative", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTable {
    pub nodes: Vec<NodeSpec>,
}

impl Default for NodeTable {
    fn default() -> Self {
        NodeTable {
            nodes: vec![
                NodeSpec::new("ibm_marrakesh", 156, 180_000.0, 3.71e-3),
                NodeSpec::new("ibm_torino", 133, 200_000.0, 8.95e-3),
                NodeSpec::new("ibm_quebec", 127, 32_000.0, 1.67e-2),
                NodeSpec::new("ibm_brisbane", 127, 170_000.0, 1.82e-2),
                NodeSpec::new("ibm_kolkata", 27, 66_000.0, 1.5e-2),
            ],
        }
    }
}

impl NodeTable {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::NoNodes);
        }
        self.nodes.iter().try_for_each(NodeSpec::validate)
    }

    /// The first `n` nodes of the table.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.nodes.len() {
            return Err(Error::Config(format!(
                "cannot take {n} nodes from a table of {}",
                self.nodes.len()
            )));
        }
        Ok(NodeTable {
            nodes: self.nodes[..n].to_vec(),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: NodeTable = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        NodeTable::from_toml_str(&text).map_err(|e| Error::file(path, e))
    }
}

/// A node's live state inside an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct QNode {
    pub id: usize,
    pub name: String,
    pub n_qubits: usize,
    pub clops: f64,
    pub eplg: f64,
    pub busy_until: f64,
    /// Tasks accepted but not completed at the current clock.
    pub pending_count: usize,
    completions: Vec<f64>,
}

impl QNode {
    pub fn new(id: usize, spec: &NodeSpec) -> Self {
        QNode {
            id,
            name: spec.name.clone(),
            n_qubits: spec.n_qubits,
            clops: spec.clops,
            eplg: spec.eplg,
            busy_until: 0.0,
            pending_count: 0,
            completions: Vec::new(),
        }
    }

    pub fn fits(&self, task: &QTask) -> bool {
        task.n_qubits <= self.n_qubits
    }

    fn refresh(&mut self, now: f64) {
        self.completions.retain(|&c| c > now);
        self.pending_count = self.completions.len();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTask {
    pub id: u64,
    pub arrival_time: f64,
    pub n_qubits: usize,
    pub layers: usize,
    pub gate_count: usize,
    pub shots: u64,
}

impl QTask {
    pub fn from_record(record: &TaskRecord, arrival_time: f64) -> Self {
        QTask {
            id: record.id,
            arrival_time,
            n_qubits: record.n_qubits,
            layers: record.layers,
            gate_count: record.gate_count,
            shots: record.shots,
        }
    }
}

/// Seconds to run every shot of `task` on `node`.
pub fn execution_time(task: &QTask, node: &QNode) -> f64 {
    (task.shots as f64 * task.layers as f64) / node.clops
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Tasks per episode.
    pub episode_len: usize,
    /// Seconds between consecutive task arrivals.
    pub arrival_interval: f64,
    pub pending_cap: f64,
    pub width_cap: f64,
    /// Depth normalizer; the workload's maximum depth when unset.
    pub layers_cap: Option<f64>,
    pub infeasible_penalty: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            episode_len: 10,
            arrival_interval: 20.0,
            pending_cap: 20.0,
            width_cap: 50.0,
            layers_cap: None,
            infeasible_penalty: -10.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_len == 0 {
            return Err(Error::Config("episode_len must be at least 1".into()));
        }
        if !(self.arrival_interval.is_finite() && self.arrival_interval >= 0.0) {
            return Err(Error::Config("arrival_interval must be non-negative".into()));
        }
        for (what, cap) in [("pending_cap", self.pending_cap), ("width_cap", self.width_cap)] {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::Config(format!("{what} must be positive")));
            }
        }
        if let Some(cap) = self.layers_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::Config("layers_cap must be positive".into()));
            }
        }
        if !(self.infeasible_penalty.is_finite() && self.infeasible_penalty < 0.0) {
            return Err(Error::Config("infeasible_penalty must be negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
}

/// What happened to one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub task_id: u64,
    pub action: usize,
    pub reward: f64,
    /// Queueing delay before service; 0 for dropped tasks.
    pub wait: f64,
    pub executed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub record: StepRecord,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode: usize,
    pub records: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn task_ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.task_id).collect()
    }
}

/// Total return and total waiting time of an episode.
pub fn cumulative_metrics(trace: &EpisodeTrace) -> (f64, f64) {
    trace
        .records
        .iter()
        .fold((0.0, 0.0), |(ret, wait), r| (ret + r.reward, wait + r.wait))
}

/// Step-level CSV: `episode,step,task_id,action,reward,wait`.
pub fn write_trace_csv<W: Write>(writer: W, traces: &[EpisodeTrace]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["episode", "step", "task_id", "action", "reward", "wait"])?;
    for t in traces {
        for r in &t.records {
            w.write_record(&[
                t.episode.to_string(),
                r.step.to_string(),
                r.task_id.to_string(),
                r.action.to_string(),
                r.reward.to_string(),
                r.wait.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CloudEnv {
    specs: NodeTable,
    pool: Vec<TaskRecord>,
    config: EnvConfig,
    layers_cap: f64,
    nodes: Vec<QNode>,
    tasks: Vec<QTask>,
    cursor: usize,
    records: Vec<StepRecord>,
}

impl CloudEnv {
    pub fn new(specs: NodeTable, workload: TaskManifest, config: EnvConfig) -> Result<Self> {
        specs.validate()?;
        config.validate()?;
        if workload.is_empty() {
            return Err(Error::EmptyWorkload);
        }
        workload.validate()?;
        let layers_cap = config
            .layers_cap
            .unwrap_or_else(|| workload.max_layers().unwrap_or(1) as f64);
        let nodes = specs.nodes.iter().enumerate().map(|(i, s)| QNode::new(i, s)).collect();
        Ok(CloudEnv {
            specs,
            pool: workload.records,
            config,
            layers_cap,
            nodes,
            tasks: Vec::new(),
            cursor: 0,
            records: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn observation_len(&self) -> usize {
        self.nodes.len() + 3
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn node_table(&self) -> &NodeTable {
        &self.specs
    }

    pub fn nodes(&self) -> &[QNode] {
        &self.nodes
    }

    pub fn now(&self) -> f64 {
        self.cursor as f64 * self.config.arrival_interval
    }

    /// The task awaiting an action, if the episode is still running.
    pub fn current_task(&self) -> Option<&QTask> {
        self.tasks.get(self.cursor)
    }

    pub fn episode_tasks(&self) -> &[QTask] {
        &self.tasks
    }

    pub fn is_done(&self) -> bool {
        self.cursor >= self.tasks.len()
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn trace(&self, episode: usize) -> EpisodeTrace {
        EpisodeTrace {
            episode,
            records: self.records.clone(),
        }
    }

    /// Clears queues and the clock and draws the episode's tasks from the
    /// workload pool, uniformly with replacement.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dt = self.config.arrival_interval;
        self.tasks = (0..self.config.episode_len)
            .map(|i| QTask::from_record(&self.pool[rng.gen_range(0..self.pool.len())], i as f64 * dt))
            .collect();
        self.reset_with_tasks_unchecked();
        self.observation()
    }

    /// Starts an episode over an explicit task sequence. Arrival times must
    /// be non-decreasing.
    pub fn reset_with_tasks(&mut self, tasks: Vec<QTask>) -> Result<Vec<f64>> {
        if tasks.is_empty() {
            return Err(Error::EmptyWorkload);
        }
        if tasks.windows(2).any(|w| w[1].arrival_time < w[0].arrival_time) || tasks[0].arrival_time < 0.0 {
            return Err(Error::Config("task arrival times must be non-negative and non-decreasing".into()));
        }
        self.tasks = tasks;
        self.reset_with_tasks_unchecked();
        Ok(self.observation())
    }

    fn reset_with_tasks_unchecked(&mut self) {
        self.nodes = self.specs.nodes.iter().enumerate().map(|(i, s)| QNode::new(i, s)).collect();
        self.cursor = 0;
        self.records.clear();
        self.refresh_nodes();
    }

    fn clock(&self) -> f64 {
        match self.tasks.get(self.cursor) {
            Some(t) => t.arrival_time,
            None => self.tasks.last().map_or(0.0, |t| t.arrival_time) + self.config.arrival_interval,
        }
    }

    fn refresh_nodes(&mut self) {
        let now = self.clock();
        for node in &mut self.nodes {
            node.refresh(now);
        }
    }

    fn horizon(&self) -> f64 {
        self.config.episode_len as f64 * self.config.arrival_interval
    }

    /// Pending counts per node followed by arrival, width and depth of the
    /// current task, each scaled into `[0, 1]`. Task features are zero once
    /// the episode is over.
    pub fn observation(&self) -> Vec<f64> {
        let unit = |x: f64| x.clamp(0.0, 1.0);
        let mut obs: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| unit(n.pending_count as f64 / self.config.pending_cap))
            .collect();
        match self.current_task() {
            Some(t) => {
                let h = self.horizon();
                obs.push(if h > 0.0 { unit(t.arrival_time / h) } else { 0.0 });
                obs.push(unit(t.n_qubits as f64 / self.config.width_cap));
                obs.push(unit(t.layers as f64 / self.layers_cap));
            }
            None => obs.extend([0.0; 3]),
        }
        obs
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action >= self.nodes.len() {
            return Err(Error::ActionOutOfRange {
                action,
                n_nodes: self.nodes.len(),
            });
        }
        let task = *self.current_task().ok_or(Error::NoPendingTask)?;
        let node = &mut self.nodes[action];
        let (reward, wait, executed) = if node.fits(&task) {
            let start = task.arrival_time.max(node.busy_until);
            let wait = start - task.arrival_time;
            let exec = execution_time(&task, node);
            let completion = start + exec;
            node.busy_until = completion;
            node.completions.push(completion);
            (1.0 / (wait + exec), wait, true)
        } else {
            (self.config.infeasible_penalty, 0.0, false)
        };
        let record = StepRecord {
            step: self.cursor,
            task_id: task.id,
            action,
            reward,
            wait,
            executed,
        };
        self.records.push(record);
        self.cursor += 1;
        self.refresh_nodes();
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.is_done(),
            record,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, n_qubits: usize, layers: usize) -> TaskRecord {
        TaskRecord {
            id,
            n_qubits,
            layers,
            gate_count: layers,
            shots: 1024,
        }
    }

    fn task(id: u64, arrival: f64, n_qubits: usize, layers: usize) -> QTask {
        QTask::from_record(&record(id, n_qubits, layers), arrival)
    }

    fn env(config: EnvConfig) -> CloudEnv {
        let pool = TaskManifest::new(vec![record(0, 4, 400), record(1, 50, 1000), record(2, 10, 2)]).unwrap();
        CloudEnv::new(NodeTable::default(), pool, config).unwrap()
    }

    #[test]
    fn torino_execution_time() {
        let torino = QNode::new(1, &NodeTable::default().nodes[1]);
        assert_eq!(execution_time(&task(0, 0.0, 4, 400), &torino), 2.048);
        let mut single = task(0, 0.0, 4, 400);
        single.shots = 1;
        assert_eq!(execution_time(&single, &torino), 0.002);
    }

    #[test]
    fn idle_node_reward() {
        let mut e = env(EnvConfig::default());
        e.reset_with_tasks(vec![task(0, 0.0, 4, 400)]).unwrap();
        let out = e.step(1).unwrap();
        assert_eq!(out.reward, 0.48828125);
        assert!(out.done);
        assert_eq!(out.record.wait, 0.0);
    }

    #[test]
    fn infeasible_is_penalized_and_dropped() {
        let mut e = env(EnvConfig::default());
        e.reset_with_tasks(vec![task(0, 0.0, 50, 400), task(1, 0.5, 4, 400)]).unwrap();
        let out = e.step(4).unwrap();
        assert_eq!(out.reward, -10.0);
        assert!(!out.record.executed);
        assert_eq!(e.nodes()[4].busy_until, 0.0);
        assert_eq!(e.nodes()[4].pending_count, 0);
    }

    #[test]
    fn action_out_of_range_is_an_error() {
        let mut e = env(EnvConfig::default());
        e.reset(0);
        assert!(matches!(e.step(5), Err(Error::ActionOutOfRange { action: 5, n_nodes: 5 })));
    }

    #[test]
    fn step_after_episode_end_is_an_error() {
        let mut e = env(EnvConfig::default());
        e.reset_with_tasks(vec![task(0, 0.0, 4, 400)]).unwrap();
        e.step(0).unwrap();
        assert!(matches!(e.step(0), Err(Error::NoPendingTask)));
    }

    #[test]
    fn observation_shape_and_reset() {
        let mut e = env(EnvConfig::default());
        let a = e.reset(9);
        assert_eq!(a.len(), 8);
        assert!(a[..5].iter().all(|x| *x == 0.0));
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
        let tasks = e.episode_tasks().to_vec();
        assert_eq!(e.reset(9), a);
        assert_eq!(e.episode_tasks(), tasks.as_slice());
    }

    #[test]
    fn pending_counts_follow_the_clock() {
        let mut e = env(EnvConfig {
            arrival_interval: 1.0,
            ..Default::default()
        });
        // 2.048 s each on Torino
        e.reset_with_tasks(vec![task(0, 0.0, 4, 400), task(1, 1.0, 4, 400), task(2, 2.0, 4, 400), task(3, 5.0, 4, 400)])
            .unwrap();
        e.step(1).unwrap();
        assert_eq!(e.nodes()[1].pending_count, 1);
        e.step(1).unwrap();
        assert_eq!(e.nodes()[1].pending_count, 2);
        let out = e.step(1).unwrap();
        // at t = 5 the queue has drained up to 6.144
        assert_eq!(e.nodes()[1].pending_count, 1);
        assert_eq!(out.observation[1], 1.0 / 20.0);
    }

    #[test]
    fn terminal_observation_has_no_task_features() {
        let mut e = env(EnvConfig::default());
        e.reset_with_tasks(vec![task(0, 0.0, 4, 400)]).unwrap();
        let out = e.step(0).unwrap();
        assert_eq!(&out.observation[5..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn node_table_toml_round_trip() {
        let table = NodeTable::default();
        let text = table.to_toml_string().unwrap();
        assert_eq!(NodeTable::from_toml_str(&text).unwrap(), table);
        assert!(NodeTable::from_toml_str("nodes = []").is_err());
        let bad = text.replacen("clops = 180000.0", "clops = 0.0", 1);
        assert!(NodeTable::from_toml_str(&bad).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let mut e = env(EnvConfig::default());
        e.reset_with_tasks(vec![task(7, 0.0, 4, 400)]).unwrap();
        e.step(1).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[e.trace(3)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "episode,step,task_id,action,reward,wait\n3,0,7,1,0.48828125,0\n"
        );
    }

    #[test]
    fn bad_configs_rejected() {
        let pool = TaskManifest::new(vec![record(0, 4, 400)]).unwrap();
        for cfg in [
            EnvConfig { episode_len: 0, ..Default::default() },
            EnvConfig { arrival_interval: -1.0, ..Default::default() },
            EnvConfig { infeasible_penalty: 1.0, ..Default::default() },
        ] {
            assert!(CloudEnv::new(NodeTable::default(), pool.clone(), cfg).is_err());
        }
        assert!(CloudEnv::new(NodeTable::default(), TaskManifest::default(), EnvConfig::default()).is_err());
        assert!(CloudEnv::new(NodeTable { nodes: vec![] }, pool, EnvConfig::default()).is_err());
    }
}
