//! Experiment orchestration: configuration, training, evaluation and
//! transfer protocols.
//!
//! Every episode derives its own random stream from the master seed, the
//! epoch and the instance index, so results are identical for any worker
//! count and an interrupted training run resumes bit-exactly from its last
//! checkpoint.

pub mod report;
pub mod stats;

use crate::agent::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::agent::ppo::{ppo_update, Adam, PpoConfig, Trajectory};
use crate::agent::{sample_action, AgentError, NetworkParams};
use crate::baselines::{as_star, run_rand_das, run_single, EpisodeResult};
use crate::bench::{
    generate_instance_set, load_instance_set, BenchError, InstanceSet, InstanceSpec, ProblemClass,
    SetRole,
};
use crate::de::{AlgorithmId, POOL_SIZE};
use crate::env::{finalize_rewards, reset, EnvConfig, RewardScheme};
use crate::rng::{rng_from_seed, split_seed, split_seed2, split_seed3};
use rand::Rng;
use rayon::prelude::*;
use report::{
    mean_std, median, verdict_mark, EvalOutcome, MethodRow, RawResults, ResultTable, RunRecord,
    METHOD_NAMES, METHOD_RL,
};
use serde::{Deserialize, Serialize};
use stats::wilcoxon_rank_sum;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub const K_FOLDS: usize = 4;

// stream tags for seed derivation
const TAG_TRAIN_SET: u64 = 1;
const TAG_TEST_SET: u64 = 2;
const TAG_NET_INIT: u64 = 3;
const TAG_ORDER: u64 = 4;
const TAG_ROLLOUT: u64 = 5;
const TAG_VALIDATION: u64 = 6;
const TAG_EVAL: u64 = 7;

fn default_term_error() -> f64 {
    1e-8
}
fn default_k_factor() -> f64 {
    0.3
}
fn default_clip() -> f64 {
    0.2
}
fn default_gamma() -> f64 {
    0.99
}
fn default_true() -> bool {
    true
}

/// One experiment description; serializes to TOML.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub class: String,
    pub dim: usize,
    pub max_fes: u64,
    pub delta: u64,
    #[serde(default = "default_term_error")]
    pub term_error: f64,
    pub reward: RewardScheme,
    #[serde(default = "default_true")]
    pub use_la: bool,
    #[serde(default = "default_true")]
    pub use_ah: bool,
    #[serde(default = "default_true")]
    pub use_context: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    #[serde(default = "default_clip")]
    pub clip: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_k_factor")]
    pub k_factor: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub eval_runs: usize,
    pub seed: u64,
    pub checkpoint_dir: PathBuf,
    #[serde(default)]
    pub train_set: Option<PathBuf>,
    #[serde(default)]
    pub test_set: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Desk-scale profile: small instance counts and budget so a full
    /// train-plus-evaluate cycle finishes on a workstation.
    pub fn desk(class: &str, seed: u64, checkpoint_dir: PathBuf) -> RunConfig {
        RunConfig {
            class: class.to_string(),
            dim: 10,
            max_fes: 50_000,
            delta: 2_500,
            term_error: 1e-8,
            reward: RewardScheme::Adjusted,
            use_la: true,
            use_ah: true,
            use_context: true,
            epochs: 20,
            batch_size: 16,
            lr: 1e-3,
            clip: 0.2,
            gamma: 0.99,
            k_factor: 0.3,
            train_count: 64,
            test_count: 32,
            eval_runs: 5,
            seed,
            checkpoint_dir,
            train_set: None,
            test_set: None,
            workers: None,
        }
    }

    /// Full-scale profile for 10-dimensional problems.
    pub fn full10(class: &str, seed: u64, checkpoint_dir: PathBuf) -> RunConfig {
        RunConfig {
            max_fes: 200_000,
            delta: 2_500,
            epochs: 200,
            lr: 1e-5,
            train_count: 2048,
            test_count: 2048,
            eval_runs: 30,
            ..RunConfig::desk(class, seed, checkpoint_dir)
        }
    }

    /// Full-scale profile for 20-dimensional problems.
    pub fn full20(class: &str, seed: u64, checkpoint_dir: PathBuf) -> RunConfig {
        RunConfig {
            dim: 20,
            max_fes: 1_000_000,
            delta: 8_000,
            ..RunConfig::full10(class, seed, checkpoint_dir)
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        let mut cfg = EnvConfig::new(self.max_fes, self.delta);
        cfg.term_error = self.term_error;
        cfg.reward_scheme = self.reward;
        cfg.use_la = self.use_la;
        cfg.use_ah = self.use_ah;
        cfg.use_context = self.use_context;
        cfg
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            clip: self.clip,
            gamma: self.gamma,
            k_factor: self.k_factor,
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
        }
    }

    pub fn problem_class(&self) -> Result<ProblemClass, HarnessError> {
        ProblemClass::parse(&self.class)
            .ok_or_else(|| HarnessError::Config(format!("unknown problem class {}", self.class)))
    }

    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Run a closure on a pool with a fixed worker count (or the global pool).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("worker pool")
            .install(f),
    }
}

/// Play one episode under the given policy parameters. Action sampling
/// draws from the episode's own stream, so the whole rollout is a pure
/// function of (parameters, instance, seed).
pub fn rollout_policy(
    params: &NetworkParams,
    inst: &InstanceSpec,
    env_cfg: &EnvConfig,
    gamma: f64,
    seed: u64,
) -> (Trajectory, EpisodeResult) {
    let (mut state, mut ep) = reset(inst, env_cfg, seed);
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut logps = Vec::new();
    let mut adcs = Vec::new();
    while !ep.done {
        let pi = params.policy(&state);
        let (a, logp) = sample_action(&pi, &mut ep.rng);
        let alg = AlgorithmId::from_index(a).expect("action within pool");
        let (next, adc, _, _) = ep.step(alg).expect("episode active");
        states.push(state);
        actions.push(a);
        logps.push(logp);
        adcs.push(adc);
        state = next;
    }
    let rewards = finalize_rewards(&adcs, ep.fes_end(), env_cfg.max_fes, env_cfg.reward_scheme)
        .unwrap_or_default();
    let traj = Trajectory::build(params, states, actions, logps, rewards, gamma);
    let result = EpisodeResult {
        cost0: ep.initial_best,
        cost_end: ep.pop.best_cost,
        descent_pct: ep.descent_pct(),
        fes_end: ep.fes_end(),
        fe_raw: ep.pop.fe_used,
        steps: ep.step_count,
        trace: ep.trace.clone(),
    };
    (traj, result)
}

fn epoch_order(count: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = rng_from_seed(split_seed2(seed, TAG_ORDER, epoch as u64));
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}

fn checkpoint_path(dir: &Path, completed_epochs: usize) -> PathBuf {
    dir.join(format!("ckpt_epoch_{completed_epochs:03}.bin"))
}

/// Latest checkpoint in a directory by completed-epoch count.
pub fn find_latest_checkpoint(dir: &Path) -> Result<Option<(usize, Checkpoint)>, HarnessError> {
    if !dir.exists() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        if let Some(num) = name
            .strip_prefix("ckpt_epoch_")
            .and_then(|s| s.strip_suffix(".bin"))
        {
            if let Ok(e) = num.parse::<usize>() {
                if best.as_ref().map_or(true, |(b, _)| e > *b) {
                    best = Some((e, path.clone()));
                }
            }
        }
    }
    match best {
        Some((e, path)) => Ok(Some((e, load_checkpoint(&path)?))),
        None => Ok(None),
    }
}

/// Load the configured train set or generate it from the master seed.
pub fn train_instances(cfg: &RunConfig) -> Result<InstanceSet, HarnessError> {
    match &cfg.train_set {
        Some(path) => Ok(load_instance_set(path)?),
        None => Ok(generate_instance_set(
            cfg.problem_class()?,
            cfg.dim,
            cfg.train_count,
            split_seed(cfg.seed, TAG_TRAIN_SET),
            K_FOLDS,
            SetRole::Train,
        )),
    }
}

/// Load the configured test set or generate it from the master seed.
pub fn test_instances(cfg: &RunConfig) -> Result<InstanceSet, HarnessError> {
    match &cfg.test_set {
        Some(path) => Ok(load_instance_set(path)?),
        None => Ok(generate_instance_set(
            cfg.problem_class()?,
            cfg.dim,
            cfg.test_count,
            split_seed(cfg.seed, TAG_TEST_SET),
            K_FOLDS,
            SetRole::Test,
        )),
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub final_checkpoint: PathBuf,
    /// (epoch, mean validation descent %) rows produced by this call.
    pub validation: Vec<(usize, f64)>,
}

/// Train over epochs of batched episodes; one checkpoint per epoch plus a
/// validation-descent log. Resumes from the latest checkpoint in the
/// configured directory.
pub fn train(cfg: &RunConfig) -> Result<TrainOutput, HarnessError> {
    std::fs::create_dir_all(&cfg.checkpoint_dir)?;
    let set = train_instances(cfg)?;
    let env_cfg = cfg.env_config();
    let ppo = cfg.ppo_config();

    let (mut start_epoch, mut params, mut adam) =
        match find_latest_checkpoint(&cfg.checkpoint_dir)? {
            Some((completed, ck)) => {
                let adam = ck.adam.clone().unwrap_or_else(|| Adam::new(&ck.params));
                (completed, ck.params, adam)
            }
            None => {
                let params =
                    NetworkParams::new(cfg.dim, POOL_SIZE, split_seed(cfg.seed, TAG_NET_INIT));
                let adam = Adam::new(&params);
                (0, params, adam)
            }
        };
    if start_epoch >= cfg.epochs {
        start_epoch = cfg.epochs;
    }

    let val_idx = set.fold_indices(0);
    let mut validation = Vec::new();
    let log_path = cfg.checkpoint_dir.join("validation.csv");
    if start_epoch == 0 {
        std::fs::write(&log_path, "epoch,mean_descent_pct\n")?;
    }

    for epoch in start_epoch..cfg.epochs {
        let order = epoch_order(set.instances.len(), cfg.seed, epoch);
        for chunk in order.chunks(cfg.batch_size) {
            let frozen = &params;
            let trajs: Vec<Trajectory> = chunk
                .par_iter()
                .map(|&idx| {
                    let seed = split_seed3(cfg.seed, TAG_ROLLOUT, epoch as u64, idx as u64);
                    rollout_policy(frozen, &set.instances[idx], &env_cfg, ppo.gamma, seed).0
                })
                .collect();
            let nonempty: Vec<Trajectory> =
                trajs.into_iter().filter(|t| !t.is_empty()).collect();
            if !nonempty.is_empty() {
                ppo_update(&mut params, &mut adam, &nonempty, &ppo)?;
            }
        }

        let frozen = &params;
        let descents: Vec<f64> = val_idx
            .par_iter()
            .map(|&i| {
                let seed = split_seed3(cfg.seed, TAG_VALIDATION, epoch as u64, i as u64);
                rollout_policy(frozen, &set.instances[i], &env_cfg, ppo.gamma, seed)
                    .1
                    .descent_pct
            })
            .collect();
        let mean_descent = descents.iter().sum::<f64>() / descents.len().max(1) as f64;
        validation.push((epoch, mean_descent));
        append_line(&log_path, &format!("{epoch},{mean_descent:.4}\n"))?;

        let ck = Checkpoint {
            params: params.clone(),
            cfg: ppo,
            adam: Some(adam.clone()),
            epoch: (epoch + 1) as u32,
        };
        save_checkpoint(&ck, &checkpoint_path(&cfg.checkpoint_dir, epoch + 1))?;
    }

    Ok(TrainOutput {
        final_checkpoint: checkpoint_path(&cfg.checkpoint_dir, cfg.epochs),
        validation,
    })
}

fn append_line(path: &Path, line: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    f.write_all(line.as_bytes())
}

struct Bundle {
    instance: usize,
    run: usize,
    results: [EpisodeResult; 6],
    rl_trace: Vec<crate::env::TraceRow>,
    rand_trace: Vec<crate::env::TraceRow>,
}

/// Evaluate the policy and every baseline on an instance set with shared
/// per-(instance, run) seeds, and test each competitor against the policy.
pub fn evaluate(
    params: &NetworkParams,
    set: &InstanceSet,
    env_cfg: &EnvConfig,
    runs: usize,
    seed: u64,
    alpha: f64,
) -> EvalOutcome {
    let tasks: Vec<(usize, usize)> = (0..set.instances.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    let bundles: Vec<Bundle> = tasks
        .par_iter()
        .map(|&(i, r)| {
            let inst = &set.instances[i];
            let ep_seed = split_seed3(seed, TAG_EVAL, i as u64, r as u64);
            let (_, rl) = rollout_policy(params, inst, env_cfg, 0.99, ep_seed);
            let rand = run_rand_das(inst, env_cfg, ep_seed);
            let singles: Vec<EpisodeResult> = AlgorithmId::ALL
                .iter()
                .map(|&alg| run_single(alg, inst, env_cfg, ep_seed, None))
                .collect();
            let (_, star) = as_star(&singles).expect("all backbones present");
            let rl_trace = rl.trace.clone();
            let rand_trace = rand.trace.clone();
            let results = [
                rl,
                rand,
                singles[0].clone(),
                singles[1].clone(),
                singles[2].clone(),
                star,
            ];
            Bundle {
                instance: i,
                run: r,
                results,
                rl_trace,
                rand_trace,
            }
        })
        .collect();

    let mut records: Vec<Vec<RunRecord>> = vec![Vec::new(); METHOD_NAMES.len()];
    let mut rl_traces = Vec::new();
    let mut rand_traces = Vec::new();
    for b in &bundles {
        for (m, res) in b.results.iter().enumerate() {
            records[m].push(RunRecord {
                instance: b.instance,
                run: b.run,
                cost0: res.cost0,
                cost_end: res.cost_end,
                descent_pct: res.descent_pct,
                fes_end: res.fes_end,
            });
        }
        rl_traces.push((b.instance, b.run, b.rl_trace.clone()));
        rand_traces.push((b.instance, b.run, b.rand_trace.clone()));
    }
    let raw = RawResults { records };

    let rl_descents = raw.descents(METHOD_RL);
    let rl_fes = raw.fes(METHOD_RL);
    let rows = METHOD_NAMES
        .iter()
        .enumerate()
        .map(|(m, &name)| {
            let costs: Vec<f64> = raw.records[m].iter().map(|r| r.cost_end).collect();
            let descents = raw.descents(m);
            let fes = raw.fes(m);
            let (mean_cost, std_cost) = mean_std(&costs);
            let (mean_descent, _) = mean_std(&descents);
            let (mean_fes, _) = mean_std(&fes);
            let (mark_descent, p_descent, mark_fes, p_fes) = if m == METHOD_RL {
                ('~', 1.0, '~', 1.0)
            } else {
                let d = wilcoxon_rank_sum(&descents, &rl_descents, alpha)
                    .map(|o| (verdict_mark(o.verdict, true), o.p_value))
                    .unwrap_or(('~', 1.0));
                let f = wilcoxon_rank_sum(&fes, &rl_fes, alpha)
                    .map(|o| (verdict_mark(o.verdict, false), o.p_value))
                    .unwrap_or(('~', 1.0));
                (d.0, d.1, f.0, f.1)
            };
            MethodRow {
                method: name,
                mean_cost,
                std_cost,
                mean_descent,
                median_descent: median(&descents),
                mean_fes,
                mark_descent,
                p_descent,
                mark_fes,
                p_fes,
            }
        })
        .collect();

    EvalOutcome {
        table: ResultTable {
            class: set.class.name(),
            dim: set.dim,
            runs_per_instance: runs,
            rows,
        },
        raw,
        rl_traces,
        rand_traces,
    }
}

/// Transfer evaluation is plain evaluation of a checkpoint on another set;
/// no parameters are updated.
pub fn transfer_eval(
    params: &NetworkParams,
    target_set: &InstanceSet,
    env_cfg: &EnvConfig,
    runs: usize,
    seed: u64,
    alpha: f64,
) -> EvalOutcome {
    evaluate(params, target_set, env_cfg, runs, seed, alpha)
}

/// Class partitions of the transfer settings: train-fraction 2:8, 5:5, 8:2.
pub fn transfer_split(setting: usize) -> Option<(Vec<ProblemClass>, Vec<ProblemClass>)> {
    let all = ProblemClass::CONCRETE;
    let split = match setting {
        1 => 2,
        2 => 5,
        3 => 8,
        _ => return None,
    };
    Some((all[..split].to_vec(), all[split..].to_vec()))
}

pub use stats::{RankSumOutcome, StatsError};
pub use report::emit_report;

#[cfg(test)]
mod tests;
