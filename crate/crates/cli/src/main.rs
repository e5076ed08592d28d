use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcloud_cli::commands::print;
use qcloud_cli::{
    cmd_eval, cmd_gen_workload, cmd_inspect_checkpoint, cmd_noisy, cmd_parse_qasm, cmd_train,
    Algorithm, CliError, EvalAgentSpec, ExperimentConfig,
};
use qcloud_core::workload::GeneratorConfig;

#[derive(Parser)]
#[command(name = "qcloud", version, about = "Train and evaluate quantum-cloud scheduling agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its checkpoint, reward log and curve.
    Train(RunArgs),
    /// Evaluate greedy and trained agents on shared task streams.
    Eval(EvalArgs),
    /// Train a PQC agent under gate noise on a reduced node table.
    Noisy(RunArgs),
    /// Write a synthetic workload manifest.
    GenWorkload {
        #[arg(long, default_value_t = 1000)]
        n_tasks: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Summarize a QASM file, or ingest a directory into a manifest.
    ParseQasm {
        path: PathBuf,
        /// Skip unparsable files instead of failing.
        #[arg(long)]
        permissive: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the architecture stored in a checkpoint.
    InspectCheckpoint { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "QCLOUD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// PQC layer count.
    #[arg(long)]
    layers: Option<usize>,
    /// TOML node table replacing the built-in one.
    #[arg(long)]
    node_table: Option<PathBuf>,
    /// Also write SVG charts next to the CSV curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `algorithm[:checkpoint]`, repeatable.
    #[arg(long = "agent")]
    agents: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
            cfg.noise.episodes = e;
            cfg.eval.episodes = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = Some(d.clone());
        }
        if let Some(l) = self.layers {
            cfg.pqc.layers = l;
            cfg.noise.layers = l;
        }
        if let Some(t) = &self.node_table {
            cfg.node_table = Some(t.clone());
        }
        cfg.svg |= self.svg;
        Ok(cfg)
    }
}

fn parse_agent(text: &str) -> Result<EvalAgentSpec, CliError> {
    use clap::ValueEnum;
    let (name, path) = match text.split_once(':') {
        Some((n, p)) => (n, Some(PathBuf::from(p))),
        None => (text, None),
    };
    let algorithm = Algorithm::from_str(name, true).map_err(|_| CliError::Config(format!("unknown algorithm `{name}`")))?;
    Ok(EvalAgentSpec {
        algorithm,
        checkpoint: path,
        label: None,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            let s = cmd_train(&args.resolve()?)?;
            let last = s.rows.last().map(|r| r.ret).unwrap_or(0.0);
            print(&format!(
                "trained {} for {} episodes, final return {last:.4}\ncheckpoint {}\n",
                s.algorithm.label(),
                s.rows.len(),
                s.checkpoint.display()
            ));
        }
        Command::Noisy(args) => {
            let s = cmd_noisy(&args.resolve()?)?;
            print(&format!(
                "noisy {}: final mean return {:.4}, greedy {:.4}\nsummary {}\n",
                s.train.algorithm.label(),
                s.final_mean,
                s.greedy_final_mean,
                s.summary.display()
            ));
        }
        Command::Eval(args) => {
            let mut cfg = args.run.resolve()?;
            if !args.agents.is_empty() {
                cfg.eval.agents = args.agents.iter().map(|a| parse_agent(a)).collect::<Result<_, _>>()?;
            }
            for r in cmd_eval(&cfg)? {
                print(&format!("{}: mean return {:.4}, mean wait {:.4}\n", r.label, r.mean_return, r.mean_wait));
            }
        }
        Command::GenWorkload { n_tasks, seed, out } => {
            let m = cmd_gen_workload(n_tasks, seed, &GeneratorConfig::default(), &out)?;
            print(&format!("wrote {} tasks to {}\n", m.len(), out.display()));
        }
        Command::ParseQasm { path, permissive, out } => print(&cmd_parse_qasm(&path, permissive, out.as_deref())?),
        Command::InspectCheckpoint { path } => print(&cmd_inspect_checkpoint(&path)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
