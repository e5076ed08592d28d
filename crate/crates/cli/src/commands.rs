use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qcloud_core::agents::{
    episode_seeds, evaluate, run_episode, train_dqn, train_reinforce, Agent, Mlp, MlpCheckpoint,
    RewardLogRow, MLP_CHECKPOINT_KIND,
};
use qcloud_core::env::{cumulative_metrics, write_trace_csv, CloudEnv, NodeTable};
use qcloud_core::model::{Approximator, PqcModel};
use qcloud_core::pqc::{
    Backend, InputMode, ParameterSet, PqcArchitecture, PqcCheckpoint, PQC_CHECKPOINT_KIND,
};
use qcloud_core::workload::{generate_workload, ingest_directory, parse_qasm_subset, GeneratorConfig, TaskManifest};
use qcloud_sim::NoiseModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Algorithm, EvalAgentSpec, ExperimentConfig, WorkloadSource};
use crate::curve::CurveFile;
use crate::CliError;

/// Moving-average window for training curves.
pub const TRAIN_WINDOW: usize = 20;
/// Moving-average window for evaluation curves.
pub const EVAL_WINDOW: usize = 10;
/// Training episodes averaged at the end of a noisy run.
pub const NOISY_TAIL: usize = 50;

pub fn load_workload(source: &WorkloadSource) -> Result<TaskManifest, CliError> {
    Ok(match source {
        WorkloadSource::Generate { n_tasks, seed, generator } => generate_workload(*n_tasks, *seed, generator)?,
        WorkloadSource::Manifest { path } => TaskManifest::load(path)?,
        WorkloadSource::Qasm { dir, permissive } => ingest_directory(dir, *permissive)?.0,
    })
}

/// The environment described by `config`, optionally cut to `n_nodes`.
pub fn build_env(config: &ExperimentConfig, n_nodes: Option<usize>) -> Result<CloudEnv, CliError> {
    let mut table = match &config.node_table {
        Some(path) => NodeTable::load(path)?,
        None => NodeTable::default(),
    };
    if let Some(n) = n_nodes.or(config.n_nodes) {
        table = table.truncated(n)?;
    }
    Ok(CloudEnv::new(table, load_workload(&config.workload)?, config.env.clone())?)
}

/// Initial weights come from their own stream of the run seed.
fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

#[derive(Debug, Clone)]
enum Trainable {
    Pqc(PqcModel),
    Mlp(Mlp),
}

fn build_model(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    env: &CloudEnv,
    layers: usize,
    backend: Backend,
) -> Result<Trainable, CliError> {
    let mut rng = init_rng(config.seed);
    match algorithm {
        Algorithm::Greedy => Err(CliError::Config("the greedy baseline has nothing to train".into())),
        Algorithm::ReinforcePqc | Algorithm::DqnPqc => {
            let arch = PqcArchitecture::new(env.observation_len(), layers, env.n_nodes())?;
            let params = ParameterSet::init(&arch, &mut rng);
            // Q-values see squashed inputs; policies see raw ones
            let mode = if algorithm.is_dqn() { InputMode::Squashed } else { InputMode::Raw };
            Ok(Trainable::Pqc(PqcModel::new(arch, params, mode, backend)?))
        }
        Algorithm::ReinforceMlp | Algorithm::DqnMlp => {
            let mut sizes = vec![env.observation_len()];
            sizes.extend(&config.mlp.hidden);
            sizes.push(env.n_nodes());
            Ok(Trainable::Mlp(Mlp::init(&sizes, &mut rng)?))
        }
    }
}

fn train_model<M: Approximator>(
    algorithm: Algorithm,
    env: &mut CloudEnv,
    model: &mut M,
    config: &ExperimentConfig,
    episodes: usize,
) -> Result<Vec<RewardLogRow>, CliError> {
    let mut tc = config.train_config();
    tc.episodes = episodes;
    let rows = if algorithm.is_dqn() {
        train_dqn(env, model, &tc)?
    } else {
        train_reinforce(env, model, &tc)?
    };
    Ok(rows)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `episode,return,wait,epsilon`; epsilon is blank for policy-gradient runs.
pub fn write_reward_log(path: &Path, rows: &[RewardLogRow]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    w.write_record(["episode", "return", "wait", "epsilon"]).map_err(CliError::runtime)?;
    for r in rows {
        let eps = r.epsilon.map(|e| e.to_string()).unwrap_or_default();
        w.write_record(&[r.episode.to_string(), r.ret.to_string(), r.wait.to_string(), eps])
            .map_err(CliError::runtime)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn save_curve(curve: &CurveFile, path: &Path, svg: bool, title: &str) -> Result<(), CliError> {
    curve.save(path)?;
    if svg {
        write_file(&path.with_extension("svg"), curve.to_svg(title).as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub algorithm: Algorithm,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub curve: PathBuf,
    pub rows: Vec<RewardLogRow>,
}

fn train_and_save(
    config: &ExperimentConfig,
    env: &mut CloudEnv,
    layers: usize,
    backend: Backend,
    episodes: usize,
    prefix: &str,
) -> Result<TrainSummary, CliError> {
    let algorithm = config.algorithm;
    let dir = config.resolved_output_dir();
    ensure_dir(&dir)?;
    let stem = format!("{prefix}{}", algorithm.label());
    let checkpoint = dir.join(format!("{stem}_checkpoint.json"));
    let (rows, json) = match build_model(config, algorithm, env, layers, backend)? {
        Trainable::Pqc(mut m) => {
            let rows = train_model(algorithm, env, &mut m, config, episodes)?;
            (rows, PqcCheckpoint::new(&m.arch, &m.params, m.mode).to_json()?)
        }
        Trainable::Mlp(mut m) => {
            let rows = train_model(algorithm, env, &mut m, config, episodes)?;
            (rows, MlpCheckpoint::new(&m).to_json()?)
        }
    };
    write_file(&checkpoint, json.as_bytes())?;
    let log = dir.join(format!("{stem}_train_log.csv"));
    write_reward_log(&log, &rows)?;
    let curve_path = dir.join(format!("{stem}_train_curve.csv"));
    let curve = CurveFile::new(rows.iter().map(|r| r.ret).collect(), TRAIN_WINDOW)?;
    save_curve(&curve, &curve_path, config.svg, &format!("{stem} training return"))?;
    log::info!("{stem}: wrote {}", dir.display());
    Ok(TrainSummary {
        algorithm,
        checkpoint,
        log,
        curve: curve_path,
        rows,
    })
}

/// Trains `config.algorithm` and writes its checkpoint, reward log and
/// training curve into the output directory.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainSummary, CliError> {
    config.validate()?;
    let mut env = build_env(config, None)?;
    train_and_save(config, &mut env, config.pqc.layers, Backend::Statevector, config.episodes, "")
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySummary {
    pub train: TrainSummary,
    /// Mean training return over the final episodes.
    pub final_mean: f64,
    /// Greedy return on the same task streams as those final episodes.
    pub greedy_final_mean: f64,
    pub summary: PathBuf,
}

/// PQC training with amplitude damping and depolarizing noise after every
/// gate, on a reduced node table and a shallow circuit.
pub fn cmd_noisy(config: &ExperimentConfig) -> Result<NoisySummary, CliError> {
    config.validate()?;
    if !config.algorithm.is_pqc() {
        return Err(CliError::Config(format!(
            "noisy training needs a PQC algorithm, not `{}`",
            config.algorithm.label()
        )));
    }
    let n = &config.noise;
    let noise = NoiseModel::damping_and_depolarizing(n.amplitude_damping, n.depolarizing)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut env = build_env(config, Some(n.n_nodes))?;
    let train = train_and_save(config, &mut env, n.layers, Backend::Noisy(noise), n.episodes, "noisy_")?;

    let tail = NOISY_TAIL.min(train.rows.len());
    let start = train.rows.len() - tail;
    let final_mean = train.rows[start..].iter().map(|r| r.ret).sum::<f64>() / tail as f64;
    let mut greedy_total = 0.0;
    for (k, seed) in episode_seeds(config.seed, n.episodes).into_iter().enumerate().skip(start) {
        greedy_total += cumulative_metrics(&run_episode(&Agent::Greedy, &mut env, seed, k)?).0;
    }
    let greedy_final_mean = greedy_total / tail as f64;

    let summary = config
        .resolved_output_dir()
        .join(format!("noisy_{}_summary.txt", config.algorithm.label()));
    let text = format_table(
        &["agent", "final_mean_return", "episodes"],
        &[
            vec![config.algorithm.label().to_string(), format!("{final_mean:.6}"), tail.to_string()],
            vec!["greedy".to_string(), format!("{greedy_final_mean:.6}"), tail.to_string()],
        ],
    );
    write_file(&summary, text.as_bytes())?;
    Ok(NoisySummary {
        train,
        final_mean,
        greedy_final_mean,
        summary,
    })
}

/// Loads a checkpoint written by `train`, checking it against the
/// environment's observation and action sizes.
pub fn load_agent(spec: &EvalAgentSpec, env: &CloudEnv) -> Result<Agent, CliError> {
    if spec.algorithm == Algorithm::Greedy {
        return Ok(Agent::Greedy);
    }
    let path = spec
        .checkpoint
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("agent `{}` needs a checkpoint", spec.label())))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let agent = match checkpoint_kind(&text, path)?.as_str() {
        PQC_CHECKPOINT_KIND if spec.algorithm.is_pqc() => {
            let ckpt = PqcCheckpoint::from_json(&text)?;
            let model = PqcModel::new(ckpt.architecture()?, ckpt.parameters()?, ckpt.mode, Backend::Statevector)?;
            Agent::Pqc(model)
        }
        MLP_CHECKPOINT_KIND if !spec.algorithm.is_pqc() => Agent::Mlp(MlpCheckpoint::from_json(&text)?.model()?),
        kind => {
            return Err(CliError::Config(format!(
                "{}: `{kind}` checkpoint does not fit algorithm `{}`",
                path.display(),
                spec.algorithm.label()
            )))
        }
    };
    let (inputs, actions) = match &agent {
        Agent::Pqc(m) => (m.n_inputs(), m.n_actions()),
        Agent::Mlp(m) => (m.n_inputs(), m.n_actions()),
        Agent::Greedy => unreachable!(),
    };
    if inputs != env.observation_len() || actions != env.n_nodes() {
        return Err(CliError::Config(format!(
            "{}: checkpoint expects {inputs} inputs and {actions} actions, environment has {} and {}",
            path.display(),
            env.observation_len(),
            env.n_nodes()
        )));
    }
    Ok(agent)
}

fn checkpoint_kind(text: &str, path: &Path) -> Result<String, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Config(format!("{}: checkpoint has no `kind`", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummaryRow {
    pub label: String,
    pub mean_return: f64,
    pub mean_wait: f64,
}

/// Evaluates every configured agent on the same task streams and writes
/// per-agent curves, step traces and a summary table.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<Vec<EvalSummaryRow>, CliError> {
    config.validate()?;
    let mut env = build_env(config, None)?;
    let specs = if config.eval.agents.is_empty() {
        vec![EvalAgentSpec {
            algorithm: Algorithm::Greedy,
            checkpoint: None,
            label: None,
        }]
    } else {
        config.eval.agents.clone()
    };
    let agents = specs
        .iter()
        .map(|s| load_agent(s, &env))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = config.resolved_output_dir();
    ensure_dir(&dir)?;

    let mut rows = Vec::with_capacity(agents.len());
    let mut reference: Option<Vec<Vec<u64>>> = None;
    for (spec, agent) in specs.iter().zip(&agents) {
        let label = spec.label();
        log::info!("evaluating {label} on {} episodes", config.eval.episodes);
        let report = evaluate(agent, &mut env, config.eval.episodes, config.eval.seed)?;
        let streams: Vec<Vec<u64>> = report.traces.iter().map(|t| t.task_ids()).collect();
        match &reference {
            None => reference = Some(streams),
            Some(r) if *r != streams => {
                return Err(CliError::Runtime(format!("agent `{label}` saw a different task stream")))
            }
            Some(_) => {}
        }
        let returns = CurveFile::new(report.episodes.iter().map(|e| e.ret).collect(), EVAL_WINDOW)?;
        save_curve(&returns, &dir.join(format!("eval_{label}_returns.csv")), config.svg, &format!("{label} return"))?;
        let waits = CurveFile::new(report.episodes.iter().map(|e| e.wait).collect(), EVAL_WINDOW)?;
        save_curve(&waits, &dir.join(format!("eval_{label}_waits.csv")), config.svg, &format!("{label} waiting time"))?;
        let steps = dir.join(format!("eval_{label}_steps.csv"));
        let file = fs::File::create(&steps).map_err(|e| CliError::io(&steps, e))?;
        write_trace_csv(std::io::BufWriter::new(file), &report.traces)?;
        rows.push(EvalSummaryRow {
            label,
            mean_return: report.mean_return,
            mean_wait: report.mean_wait,
        });
    }

    let mut csv_text = String::from("agent,mean_return,mean_wait\n");
    for r in &rows {
        let _ = writeln!(csv_text, "{},{},{}", r.label, r.mean_return, r.mean_wait);
    }
    write_file(&dir.join("eval_summary.csv"), csv_text.as_bytes())?;
    let table = format_table(
        &["agent", "mean_return", "mean_wait"],
        &rows
            .iter()
            .map(|r| vec![r.label.clone(), format!("{:.4}", r.mean_return), format!("{:.4}", r.mean_wait)])
            .collect::<Vec<_>>(),
    );
    write_file(&dir.join("eval_summary.txt"), table.as_bytes())?;
    Ok(rows)
}

/// Left-aligned first column, right-aligned numbers.
pub fn format_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec()) + "\n";
    out += &(line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()) + "\n");
    for row in rows {
        out += &(line(row.iter().map(String::as_str).collect()) + "\n");
    }
    out
}

pub fn cmd_gen_workload(n_tasks: usize, seed: u64, generator: &GeneratorConfig, out: &Path) -> Result<TaskManifest, CliError> {
    let manifest = generate_workload(n_tasks, seed, generator)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    manifest.save(out)?;
    Ok(manifest)
}

/// Summarizes one QASM file, or ingests a directory into a manifest.
pub fn cmd_parse_qasm(path: &Path, permissive: bool, out: Option<&Path>) -> Result<String, CliError> {
    if path.is_dir() {
        let (manifest, failures) = ingest_directory(path, permissive)?;
        let mut buf = Vec::new();
        manifest.write_csv(&mut buf)?;
        if let Some(out) = out {
            write_file(out, &buf)?;
        }
        let mut text = String::from_utf8(buf).map_err(CliError::runtime)?;
        for f in failures {
            let _ = writeln!(text, "# skipped {}: {}", f.path.display(), f.message);
        }
        return Ok(text);
    }
    let source = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let s = parse_qasm_subset(&source).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(format!("n_qubits {}\ndepth {}\ngate_count {}\n", s.n_qubits, s.depth, s.gate_count))
}

pub fn cmd_inspect_checkpoint(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = String::new();
    match checkpoint_kind(&text, path)?.as_str() {
        PQC_CHECKPOINT_KIND => {
            let c = PqcCheckpoint::from_json(&text)?;
            let arch = c.architecture()?;
            let _ = writeln!(out, "kind pqc");
            let _ = writeln!(out, "mode {:?}", c.mode);
            let _ = writeln!(out, "qubits {}", arch.n_qubits);
            let _ = writeln!(out, "layers {}", arch.n_layers);
            let _ = writeln!(out, "actions {}", arch.n_actions);
            let _ = writeln!(
                out,
                "parameters {} (phi {}, lambda {}, w {})",
                arch.n_params(),
                arch.n_phi(),
                arch.n_lambda(),
                arch.n_actions
            );
            let _ = writeln!(out, "w {:?}", c.w);
        }
        MLP_CHECKPOINT_KIND => {
            let m = MlpCheckpoint::from_json(&text)?.model()?;
            let _ = writeln!(out, "kind mlp");
            let _ = writeln!(out, "sizes {:?}", m.sizes());
            let _ = writeln!(out, "activation {:?}", m.activation());
            let _ = writeln!(out, "parameters {}", m.n_params());
        }
        kind => return Err(CliError::Config(format!("{}: unknown checkpoint kind `{kind}`", path.display()))),
    }
    Ok(out)
}

/// Writes `text` to stdout, ignoring a closed pipe.
pub fn print(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}
