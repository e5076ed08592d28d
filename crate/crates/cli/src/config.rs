//! Experiment configuration. Every key is optional; the defaults are the
//! reference hyperparameters (5 PQC layers, 1500 episodes, Adam rates 0.03
//! for phi and w, 0.05 for lambda, epsilon decay 0.99).

use std::path::{Path, PathBuf};

use qcloud_core::agents::{DqnConfig, TrainConfig};
use qcloud_core::autograd::{AdamConfig, LearningRates};
use qcloud_core::env::EnvConfig;
use qcloud_core::workload::GeneratorConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUTPUT_DIR_VAR: &str = "QCLOUD_OUTPUT_DIR";
pub const FALLBACK_OUTPUT_DIR: &str = "qcloud-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    #[default]
    ReinforcePqc,
    DqnPqc,
    ReinforceMlp,
    DqnMlp,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::ReinforcePqc => "reinforce-pqc",
            Algorithm::DqnPqc => "dqn-pqc",
            Algorithm::ReinforceMlp => "reinforce-mlp",
            Algorithm::DqnMlp => "dqn-mlp",
        }
    }

    pub fn is_pqc(self) -> bool {
        matches!(self, Algorithm::ReinforcePqc | Algorithm::DqnPqc)
    }

    pub fn is_dqn(self) -> bool {
        matches!(self, Algorithm::DqnPqc | Algorithm::DqnMlp)
    }
}

/// Where episode tasks are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSource {
    Generate {
        #[serde(default = "default_pool_size")]
        n_tasks: usize,
        #[serde(default = "default_workload_seed")]
        seed: u64,
        #[serde(default)]
        generator: GeneratorConfig,
    },
    Manifest {
        path: PathBuf,
    },
    Qasm {
        dir: PathBuf,
        #[serde(default)]
        permissive: bool,
    },
}

fn default_pool_size() -> usize {
    1000
}

fn default_workload_seed() -> u64 {
    7
}

impl Default for WorkloadSource {
    fn default() -> Self {
        WorkloadSource::Generate {
            n_tasks: default_pool_size(),
            seed: default_workload_seed(),
            generator: GeneratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PqcSettings {
    pub layers: usize,
}

impl Default for PqcSettings {
    fn default() -> Self {
        PqcSettings { layers: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSettings {
    pub hidden: Vec<usize>,
}

impl Default for MlpSettings {
    fn default() -> Self {
        MlpSettings { hidden: vec![64, 64, 64] }
    }
}

/// Optimizer and loop settings; episode count and seed live at top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub gamma: f64,
    pub learning_rates: LearningRates,
    pub adam: AdamConfig,
    pub dqn: DqnConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSettings {
            gamma: t.gamma,
            learning_rates: t.learning_rates,
            adam: t.adam,
            dqn: t.dqn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    /// Amplitude-damping strength applied after every gate.
    pub amplitude_damping: f64,
    /// Depolarizing probability applied after every gate.
    pub depolarizing: f64,
    pub n_nodes: usize,
    pub layers: usize,
    pub episodes: usize,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        NoiseSettings {
            amplitude_damping: 0.01,
            depolarizing: 0.01,
            n_nodes: 2,
            layers: 1,
            episodes: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalAgentSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub label: Option<String>,
}

impl EvalAgentSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.label().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub episodes: usize,
    pub seed: u64,
    /// Agents in reporting order. Empty means greedy only.
    pub agents: Vec<EvalAgentSpec>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            episodes: 100,
            seed: 1000,
            agents: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub episodes: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Node table TOML; the five-device default table when unset.
    pub node_table: Option<PathBuf>,
    /// Keep only the first `n_nodes` rows of the node table.
    pub n_nodes: Option<usize>,
    /// Also write an SVG chart next to each curve CSV.
    pub svg: bool,
    pub workload: WorkloadSource,
    pub env: EnvConfig,
    pub pqc: PqcSettings,
    pub mlp: MlpSettings,
    pub train: TrainSettings,
    pub noise: NoiseSettings,
    pub eval: EvalSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::default(),
            episodes: 1500,
            seed: 0,
            output_dir: None,
            node_table: None,
            n_nodes: None,
            svg: false,
            workload: WorkloadSource::default(),
            env: EnvConfig::default(),
            pqc: PqcSettings::default(),
            mlp: MlpSettings::default(),
            train: TrainSettings::default(),
            noise: NoiseSettings::default(),
            eval: EvalSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            episodes: self.episodes,
            gamma: self.train.gamma,
            seed: self.seed,
            learning_rates: self.train.learning_rates,
            adam: self.train.adam,
            dqn: self.train.dqn.clone(),
        }
    }

    /// Explicit setting, then the environment variable, then a fixed name.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: &str| Err(CliError::Config(m.to_string()));
        if self.episodes == 0 {
            return fail("episodes must be at least 1");
        }
        if self.pqc.layers == 0 {
            return fail("pqc.layers must be at least 1");
        }
        if self.mlp.hidden.contains(&0) {
            return fail("mlp.hidden sizes must be positive");
        }
        if self.n_nodes == Some(0) {
            return fail("n_nodes must be at least 1");
        }
        if self.eval.episodes == 0 {
            return fail("eval.episodes must be at least 1");
        }
        for agent in &self.eval.agents {
            if agent.algorithm != Algorithm::Greedy && agent.checkpoint.is_none() {
                return Err(CliError::Config(format!(
                    "eval agent `{}` needs a checkpoint",
                    agent.label()
                )));
            }
        }
        let n = &self.noise;
        for (what, v) in [("amplitude_damping", n.amplitude_damping), ("depolarizing", n.depolarizing)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!("noise.{what} must lie in [0, 1], got {v}")));
            }
        }
        if n.n_nodes == 0 || n.layers == 0 || n.episodes == 0 {
            return fail("noise.n_nodes, noise.layers and noise.episodes must be at least 1");
        }
        self.env.validate().map_err(CliError::from_core_config)?;
        self.train_config().validate().map_err(CliError::from_core_config)
    }
}
