//! Experiment driver: configuration, training and evaluation commands, and
//! the CSV/SVG reporting they produce.

pub mod commands;
pub mod config;
pub mod curve;

use std::fmt::Display;
use std::path::Path;

pub use commands::{
    build_env, cmd_eval, cmd_gen_workload, cmd_inspect_checkpoint, cmd_noisy, cmd_parse_qasm,
    cmd_train, EvalSummaryRow, NoisySummary, TrainSummary, TRAIN_WINDOW, EVAL_WINDOW,
};
pub use config::{Algorithm, EvalAgentSpec, ExperimentConfig, WorkloadSource};
pub use curve::{moving_average, CurveFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn runtime(err: impl Display) -> Self {
        CliError::Runtime(err.to_string())
    }

    pub fn io(path: &Path, err: impl Display) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }

    pub fn from_core_config(err: qcloud_core::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<qcloud_core::Error> for CliError {
    fn from(err: qcloud_core::Error) -> Self {
        use qcloud_core::Error as E;
        match err {
            E::Config(_) | E::Architecture(_) | E::File { .. } | E::EmptyWorkload | E::NoNodes => {
                CliError::Config(err.to_string())
            }
            _ => CliError::Runtime(err.to_string()),
        }
    }
}
