//! `obsp` — experiment harness for the warehouse batching/sequencing
//! laboratory.
//!
//! Usage sketch:
//!
//! ```text
//! obsp generate --seed 1 --count 100 --out-dir runs/instances
//! obsp bench    --seed 1 --set instance.orders=300 --set instance.shuttles=10 --out-dir runs/bench
//! obsp train    --seed 1 --config exp.cfg --out-dir runs/train
//! obsp eval     --seed 2 --checkpoint runs/train/policy.ckpt --out-dir runs/eval
//! obsp trace    --seed 1 --batching lst-posb --sequencing lst --out-dir runs/trace
//! ```
//!
//! Config comes from `--config <file>` (built-in defaults when omitted)
//! with `--set section.key=value` overrides on top. Seeds are always
//! explicit: there is no wall-clock seeding anywhere, so rerunning a
//! command reproduces its outputs byte for byte.

mod commands;
mod meta;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use obsp_core::config::ExperimentConfig;
use obsp_core::heuristics::{BatchRule, SeqRule};

use commands::{cmd_bench, cmd_eval, cmd_generate, cmd_trace, cmd_train, CliError, EvalPolicy};

#[derive(Parser)]
#[command(
    name = "obsp",
    version,
    about = "Order batching and sequencing laboratory: seeded instances, heuristic benchmarks, policy training, evaluation, and episode traces."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file; built-in defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set instance.orders=500. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse_str(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let (path, value) = kv.split_once('=').ok_or_else(|| {
                CliError::BadArg(format!("--set expects SECTION.KEY=VALUE, got {kv:?}"))
            })?;
            let (section, key) = path.split_once('.').ok_or_else(|| {
                CliError::BadArg(format!("--set key must be SECTION.KEY, got {path:?}"))
            })?;
            cfg.apply_kv(section.trim(), key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Feasibility-masked argmax over the policy logits.
    Greedy,
    /// Sample from the full softmax, infeasible picks included.
    Sampled,
    /// Uniform over the feasible actions; no checkpoint needed.
    Random,
}

impl From<PolicyArg> for EvalPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Greedy => EvalPolicy::Greedy,
            PolicyArg::Sampled => EvalPolicy::Sampled,
            PolicyArg::Random => EvalPolicy::Random,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write seeded problem instances as CSV files.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Root seed for the instance stream.
        #[arg(long)]
        seed: u64,
        /// How many instances; defaults to bench.instances from the config.
        #[arg(long)]
        count: Option<u32>,
        /// Directory for the output files; created if missing.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Run every batching x sequencing rule pair over seeded instances.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Root seed for the instance stream.
        #[arg(long)]
        seed: u64,
        /// Directory for the output files; created if missing.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Train a policy; writes a checkpoint and a per-update log.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Root seed; network init, instances and action sampling draw
        /// from separate streams derived from it.
        #[arg(long)]
        seed: u64,
        /// Directory for the output files; created if missing.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint (or the random-feasible baseline).
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Root seed for eval instances and action sampling.
        #[arg(long)]
        seed: u64,
        /// Checkpoint written by `train`; required unless --policy random.
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Greedy)]
        policy: PolicyArg,
        /// Directory for the output files; created if missing.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Play one heuristic episode and dump its event trace.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed for the traced instance.
        #[arg(long)]
        seed: u64,
        /// Batching rule: gr, lst, posb, or lst-posb.
        #[arg(long, default_value = "gr")]
        batching: BatchRule,
        /// Sequencing rule: edd, lpt, spt, maxtp, or lst.
        #[arg(long, default_value = "edd")]
        sequencing: SeqRule,
        /// Directory for the output files; created if missing.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Generate { config, seed, count, out_dir } => {
            let cfg = config.load()?;
            let count = count.unwrap_or(cfg.bench.instances);
            cmd_generate(&cfg, seed, count, &out_dir)
        }
        Cmd::Bench { config, seed, out_dir } => {
            let cfg = config.load()?;
            cmd_bench(&cfg, seed, &out_dir)
        }
        Cmd::Train { config, seed, out_dir } => {
            let cfg = config.load()?;
            cmd_train(&cfg, seed, &out_dir)
        }
        Cmd::Eval { config, seed, checkpoint, policy, out_dir } => {
            let cfg = config.load()?;
            cmd_eval(&cfg, seed, checkpoint.as_deref(), policy.into(), &out_dir)
        }
        Cmd::Trace { config, seed, batching, sequencing, out_dir } => {
            let cfg = config.load()?;
            cmd_trace(&cfg, seed, batching, sequencing, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
