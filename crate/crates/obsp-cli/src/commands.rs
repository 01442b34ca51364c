//! The five subcommands: generate, bench, train, eval, trace.
//!
//! Every command takes a fully-resolved [`ExperimentConfig`] plus an
//! explicit root seed and writes its results into one output directory:
//! CSV files stamped with the config hash, a binary checkpoint where it
//! applies, and a `manifest.txt` recording the provenance. All randomness
//! is derived from the root seed through named streams ("instance",
//! "policy", "rollout") so the same command line always reproduces the
//! same bytes.

use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use obsp_core::config::{ConfigError, ExperimentConfig};
use obsp_core::env::{ACTION_COUNT, STATE_DIM};
use obsp_core::fsio::write_atomic;
use obsp_core::heuristics::{drive_heuristic, run_heuristic, BatchRule, SeqRule};
use obsp_core::instance::{generate_instance, render_instance, InstanceError, ProblemInstance};
use obsp_core::nn::{load_checkpoint, save_checkpoint, NnError, PolicyValueNet};
use obsp_core::ppo::{
    evaluate_policy, evaluate_random_feasible, EpisodeSource, EvalReport, PolicyMode, PpoError,
    Trainer,
};
use obsp_core::seeds::{mix_seed, stream_seed};
use obsp_core::sim::{render_trace_csv, SimError, Simulator};

use crate::meta::{config_hash, stamp_line, Manifest};

#[derive(Debug)]
pub enum CliError {
    BadArg(String),
    Config(ConfigError),
    Instance(InstanceError),
    Sim(SimError),
    Net(NnError),
    Train(PpoError),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::BadArg(m) => write!(f, "{m}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Instance(e) => write!(f, "{e}"),
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Net(e) => write!(f, "{e}"),
            CliError::Train(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::Instance(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Net(e)
    }
}

impl From<PpoError> for CliError {
    fn from(e: PpoError) -> Self {
        CliError::Train(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Appends the experiment hash to an instance file's metadata line so the
/// file still parses but carries its provenance.
fn stamp_instance(text: &str, hash: &str) -> String {
    match text.split_once('\n') {
        Some((meta, rest)) => format!("{meta} config={hash}\n{rest}"),
        None => format!("{text} config={hash}"),
    }
}

fn manifest(
    cfg: &ExperimentConfig,
    command: &'static str,
    hash: &str,
    seed: u64,
    files: Vec<String>,
) -> Manifest {
    Manifest {
        command,
        config_hash: hash.to_string(),
        seed,
        scenario: cfg.instance.scenario.as_str(),
        setting: cfg.setting_label(),
        files,
    }
}

pub fn cmd_generate(
    cfg: &ExperimentConfig,
    seed: u64,
    count: u32,
    out_dir: &Path,
) -> Result<(), CliError> {
    if count == 0 {
        return Err(CliError::BadArg("--count must be at least 1".to_string()));
    }
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_render());
    let root = stream_seed(seed, "instance");
    let mut files = Vec::with_capacity(count as usize);
    for i in 0..count {
        let params = cfg.generate_params(mix_seed(root, u64::from(i)));
        let instance = generate_instance(&params)?;
        let name = format!("instance_{i:04}.csv");
        let text = stamp_instance(&render_instance(&instance), &hash);
        write_atomic(&out_dir.join(&name), text.as_bytes())?;
        files.push(name);
    }
    manifest(cfg, "generate", &hash, seed, files).write(out_dir)?;
    println!("wrote {count} instances to {}", out_dir.display());
    Ok(())
}

/// One per-instance result line of the benchmark grid.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub scenario: &'static str,
    pub setting: String,
    pub batching: BatchRule,
    pub sequencing: SeqRule,
    pub seed: u64,
    pub tardy_pct: f64,
    pub n_shipped: u32,
    pub n_tardy: u32,
    pub m_unprocessed: u32,
}

pub fn render_bench_csv(rows: &[BenchRow]) -> String {
    let mut out =
        String::from("scenario,setting,batching,sequencing,seed,tardy_pct,n_shipped,n_tardy,m_unprocessed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.setting,
            r.batching.as_str(),
            r.sequencing.as_str(),
            r.seed,
            r.tardy_pct,
            r.n_shipped,
            r.n_tardy,
            r.m_unprocessed
        ));
    }
    out
}

/// Mean tardy % per (batching, sequencing) cell, computed from exactly the
/// per-instance rows that end up in the CSV.
pub fn cell_means(rows: &[BenchRow]) -> Vec<(BatchRule, SeqRule, f64)> {
    let mut means = Vec::with_capacity(BatchRule::ALL.len() * SeqRule::ALL.len());
    for b in BatchRule::ALL {
        for s in SeqRule::ALL {
            let cell: Vec<f64> = rows
                .iter()
                .filter(|r| r.batching == b && r.sequencing == s)
                .map(|r| r.tardy_pct)
                .collect();
            if !cell.is_empty() {
                means.push((b, s, cell.iter().sum::<f64>() / cell.len() as f64));
            }
        }
    }
    means
}

fn print_grid(rows: &[BenchRow], n_instances: u32) {
    let means = cell_means(rows);
    println!("mean tardy % over {n_instances} instances");
    print!("{:>10}", "");
    for s in SeqRule::ALL {
        print!("{:>9}", s.as_str());
    }
    println!();
    for b in BatchRule::ALL {
        print!("{:>10}", b.as_str());
        for s in SeqRule::ALL {
            let m = means
                .iter()
                .find(|(mb, ms, _)| *mb == b && *ms == s)
                .map(|(_, _, m)| *m)
                .unwrap_or(f64::NAN);
            print!("{m:>9.2}");
        }
        println!();
    }
}

pub fn cmd_bench(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_render());
    let root = stream_seed(seed, "instance");
    let sim_cfg = cfg.sim_config();
    let n = cfg.bench.instances;
    // One worker per instance; each plays the full rule grid on its own
    // simulator. Results are collected back in instance order, so thread
    // scheduling never shows up in the output.
    let per_instance: Vec<Vec<BenchRow>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<BenchRow>, CliError> {
            let params = cfg.generate_params(mix_seed(root, u64::from(i)));
            let instance = generate_instance(&params)?;
            let mut rows = Vec::with_capacity(BatchRule::ALL.len() * SeqRule::ALL.len());
            for b in BatchRule::ALL {
                for s in SeqRule::ALL {
                    let out = run_heuristic(&instance, sim_cfg, b, s)?;
                    rows.push(BenchRow {
                        scenario: cfg.instance.scenario.as_str(),
                        setting: cfg.setting_label(),
                        batching: b,
                        sequencing: s,
                        seed: instance.seed,
                        tardy_pct: out.tardy_pct,
                        n_shipped: out.processed,
                        n_tardy: out.tardy,
                        m_unprocessed: out.unprocessed,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, CliError>>()?;
    // Cell-major layout: each rule pair's rows sit together, instances in
    // index order within the cell.
    let grid = BatchRule::ALL.len() * SeqRule::ALL.len();
    let mut rows = Vec::with_capacity(per_instance.len() * grid);
    for cell in 0..grid {
        for inst in &per_instance {
            rows.push(inst[cell].clone());
        }
    }
    let csv = format!("{}{}", stamp_line(&hash, seed), render_bench_csv(&rows));
    write_atomic(&out_dir.join("bench.csv"), csv.as_bytes())?;
    manifest(cfg, "bench", &hash, seed, vec!["bench.csv".to_string()]).write(out_dir)?;
    print_grid(&rows, n);
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_render());
    let net = PolicyValueNet::new(
        STATE_DIM,
        cfg.ppo.hidden1,
        cfg.ppo.hidden2,
        ACTION_COUNT,
        stream_seed(seed, "policy"),
    );
    let mut trainer = Trainer::new(net, cfg.ppo_config(), stream_seed(seed, "rollout"))?;
    let mut source =
        EpisodeSource::new(cfg.generate_params(stream_seed(seed, "instance")), cfg.sim_config());
    let rows = trainer.train(&mut source, cfg.train.total_steps, |row| {
        eprintln!(
            "update {:>5}  steps {:>9}  episodes {:>5}  return {:>9.4}  entropy {:.4}",
            row.update, row.env_steps, row.episodes_completed, row.mean_episode_return, row.entropy
        );
    })?;
    let mut csv = stamp_line(&hash, seed);
    csv.push_str(
        "update,env_steps,episodes_completed,mean_episode_return,policy_loss,value_loss,entropy,clip_fraction\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.update,
            r.env_steps,
            r.episodes_completed,
            r.mean_episode_return,
            r.policy_loss,
            r.value_loss,
            r.entropy,
            r.clip_fraction
        ));
    }
    write_atomic(&out_dir.join("train_log.csv"), csv.as_bytes())?;
    save_checkpoint(&out_dir.join("policy.ckpt"), &trainer.net, Some(&trainer.adam))?;
    manifest(
        cfg,
        "train",
        &hash,
        seed,
        vec!["train_log.csv".to_string(), "policy.ckpt".to_string()],
    )
    .write(out_dir)?;
    println!(
        "trained {} env steps over {} updates; checkpoint at {}",
        trainer.env_steps,
        rows.len(),
        out_dir.join("policy.ckpt").display()
    );
    Ok(())
}

/// Action selection for `eval`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPolicy {
    Greedy,
    Sampled,
    Random,
}

pub fn cmd_eval(
    cfg: &ExperimentConfig,
    seed: u64,
    checkpoint: Option<&Path>,
    policy: EvalPolicy,
    out_dir: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_render());
    let sim_cfg = cfg.sim_config();
    let root = stream_seed(seed, "instance");
    let instances: Vec<ProblemInstance> = (0..cfg.eval.episodes)
        .map(|i| Ok(generate_instance(&cfg.generate_params(mix_seed(root, u64::from(i))))?))
        .collect::<Result<_, CliError>>()?;
    let rollout_seed = stream_seed(seed, "rollout");

    let net = match policy {
        EvalPolicy::Random => None,
        _ => {
            let path = checkpoint.ok_or_else(|| {
                CliError::BadArg("--checkpoint is required unless --policy random".to_string())
            })?;
            let net = load_checkpoint(path)?.net;
            if net.input != STATE_DIM || net.actions != ACTION_COUNT {
                return Err(CliError::BadArg(format!(
                    "checkpoint {} has layout {}-{}-{}-{}, this tool needs {} inputs and {} actions",
                    path.display(),
                    net.input,
                    net.hidden1,
                    net.hidden2,
                    net.actions,
                    STATE_DIM,
                    ACTION_COUNT
                )));
            }
            Some(net)
        }
    };

    // One worker per episode, each with a seed derived from the episode
    // index; joining in index order keeps the report deterministic.
    let reports: Vec<EvalReport> = instances
        .par_iter()
        .enumerate()
        .map(|(i, instance)| {
            let episode_seed = mix_seed(rollout_seed, i as u64);
            let one = std::slice::from_ref(instance);
            match (&net, policy) {
                (None, _) => evaluate_random_feasible(one, sim_cfg, episode_seed),
                (Some(net), EvalPolicy::Greedy) => {
                    evaluate_policy(net, one, sim_cfg, PolicyMode::Greedy, episode_seed)
                }
                (Some(net), _) => {
                    evaluate_policy(net, one, sim_cfg, PolicyMode::Sampled, episode_seed)
                }
            }
        })
        .collect::<Result<_, PpoError>>()?;
    let mut report = EvalReport::default();
    for r in reports {
        report.episodes.extend(r.episodes);
    }

    let mut csv = stamp_line(&hash, seed);
    csv.push_str("episode,instance_seed,steps,total_reward,tardy,unprocessed,n_total,tardy_pct,score\n");
    for (i, e) in report.episodes.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            i,
            e.instance_seed,
            e.steps,
            e.total_reward,
            e.tardy,
            e.unprocessed,
            e.n_total,
            e.tardy_pct,
            e.score
        ));
    }
    write_atomic(&out_dir.join("eval.csv"), csv.as_bytes())?;
    manifest(cfg, "eval", &hash, seed, vec!["eval.csv".to_string()]).write(out_dir)?;
    println!(
        "{} episodes  mean return {:.4}  mean tardy {:.2}%  mean score {:.4}",
        report.episodes.len(),
        report.mean_return(),
        report.mean_tardy_pct(),
        report.mean_score()
    );
    Ok(())
}

pub fn cmd_trace(
    cfg: &ExperimentConfig,
    seed: u64,
    batching: BatchRule,
    sequencing: SeqRule,
    out_dir: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_render());
    let params = cfg.generate_params(stream_seed(seed, "instance"));
    let instance = generate_instance(&params)?;
    let mut sim = Simulator::new(&instance, cfg.sim_config())?;
    sim.set_trace(true);
    sim.reset(); // replay the window-start arrivals with tracing on
    let outcome = drive_heuristic(&mut sim, batching, sequencing)?;
    let csv = format!("{}{}", stamp_line(&hash, seed), render_trace_csv(sim.trace()));
    write_atomic(&out_dir.join("trace.csv"), csv.as_bytes())?;
    manifest(cfg, "trace", &hash, seed, vec!["trace.csv".to_string()]).write(out_dir)?;
    println!(
        "{} events; {} shipped ({} tardy), {} written off; makespan {:.0} s",
        sim.trace().len(),
        outcome.processed,
        outcome.tardy,
        outcome.unprocessed,
        outcome.makespan_s
    );
    Ok(())
}
