//! Experiment drivers: single runs, the random baseline, alpha sweeps, the
//! goal-reaching sanity task, and policy flow fields.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use homeostat_core::ddpg::Actor;
use homeostat_core::eval::{eval_forward_mse, flow_summary, greedy_rollout, policy_flow_field, FlowSummary, FlowVector, TopRoomCounter};
use homeostat_core::rng::{stream, Stream};
use homeostat_core::{ExperimentConfig, Layout, Point, RewardSource, StartStrategy, Trainer};

use crate::checkpoint;
use crate::error::{LabError, Result};
use crate::metrics::{MetricsRow, MetricsWriter};
use crate::run_dir::{run_name, RunDir};

/// Distance from a door center within which flow-field nodes count as
/// "near the door".
pub const DOOR_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Epsilon as configured.
    Curious,
    /// Epsilon forced to 1; everything else identical.
    RandomBaseline,
}

pub struct RunResult {
    pub trainer: Trainer,
    pub top_room_total: u64,
    pub validation_mse: f64,
    pub elapsed: Duration,
}

/// Writes every network of `trainer` into `dir`.
pub fn save_checkpoints(trainer: &Trainer, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let agent = trainer.agent();
    for (name, net) in [
        ("forward.ckpt", trainer.forward_model().net()),
        ("extended.ckpt", trainer.extended_model().net()),
        ("actor.ckpt", agent.actor().net()),
        ("critic.ckpt", agent.critic().net()),
        ("actor_target.ckpt", agent.actor_target().net()),
        ("critic_target.ckpt", agent.critic_target().net()),
    ] {
        checkpoint::save(net, &dir.join(name))?;
    }
    Ok(())
}

/// Trains for `config.episodes` episodes, then measures the forward model on
/// the validation pool. With `dir`, writes metrics, timing, and checkpoints
/// there (periodic ones under `checkpoints/episode_<n>/`).
pub fn run(config: &ExperimentConfig, mode: Mode, dir: Option<&Path>) -> Result<RunResult> {
    let mut config = config.clone();
    if mode == Mode::RandomBaseline {
        config.epsilon = 1.0;
    }
    let mut trainer = Trainer::new(config.clone())?;
    let mut writer = dir.map(MetricsWriter::create).transpose()?;
    let mut counter = TopRoomCounter::default();
    let start = Instant::now();
    for _ in 0..config.episodes {
        let report = trainer.run_episode()?;
        counter.record(trainer.layout(), &report.states);
        if let Some(w) = writer.as_mut() {
            w.record(&MetricsRow::new(&report, counter.total()), start.elapsed())?;
        }
        let done = trainer.episodes_done();
        if let Some(dir) = dir {
            if config.checkpoint_interval > 0 && done % config.checkpoint_interval == 0 && done < config.episodes {
                save_checkpoints(&trainer, &dir.join("checkpoints").join(format!("episode_{done}")))?;
            }
        }
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    if let Some(dir) = dir {
        save_checkpoints(&trainer, dir)?;
    }
    let validation_mse = eval_forward_mse(
        trainer.forward_model(),
        trainer.layout(),
        config.max_step_len,
        config.validation_pool,
        config.seed,
    )?;
    Ok(RunResult {
        trainer,
        top_room_total: counter.total(),
        validation_mse,
        elapsed: start.elapsed(),
    })
}

pub fn run_training(config: &ExperimentConfig, dir: Option<&Path>) -> Result<RunResult> {
    run(config, Mode::Curious, dir)
}

pub fn random_baseline(config: &ExperimentConfig, dir: Option<&Path>) -> Result<RunResult> {
    run(config, Mode::RandomBaseline, dir)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub seed: u64,
    pub episodes: u64,
    /// `(validation_mse, top_room_total)`, or the failure message.
    pub outcome: std::result::Result<(f64, u64), String>,
}

/// Runs every `(alpha, seed)` pair, in parallel, each with its own streams.
/// Failed runs are recorded and do not stop the sweep. Rows come back
/// sorted by alpha, then seed. With `dir`, each run writes into
/// `dir/train_<alpha>_<seed>_<timestamp>`.
pub fn alpha_sweep(base: &ExperimentConfig, alphas: &[f64], seeds: &[u64], dir: Option<&Path>, timestamp: u64) -> Vec<SweepRow> {
    let jobs: Vec<(f64, u64)> = alphas.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let mut rows: Vec<SweepRow> = jobs
        .into_par_iter()
        .map(|(alpha, seed)| {
            let cfg = ExperimentConfig {
                alpha,
                seed,
                ..base.clone()
            };
            let outcome = (|| {
                let run_dir = dir
                    .map(|d| RunDir::create(d, "train", &cfg, timestamp))
                    .transpose()?;
                let r = run_training(&cfg, run_dir.as_ref().map(|r| r.path.as_path()))?;
                Ok::<_, LabError>((r.validation_mse, r.top_room_total))
            })()
            .map_err(|e| e.to_string());
            SweepRow {
                alpha,
                seed,
                episodes: cfg.episodes,
                outcome,
            }
        })
        .collect();
    sort_rows(&mut rows);
    rows
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.seed.cmp(&b.seed)));
}

pub const SWEEP_HEADER: &str = "alpha,seed,episodes,validation_mse,top_room_total";

/// Failed runs leave the two measurement fields empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = match &r.outcome {
            Ok((mse, top)) => writeln!(out, "{},{},{},{},{}", r.alpha, r.seed, r.episodes, mse, top),
            Err(_) => writeln!(out, "{},{},{},,", r.alpha, r.seed, r.episodes),
        };
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStats {
    pub alpha: f64,
    pub runs: usize,
    pub failures: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub top_room_mean: f64,
    pub top_room_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation per alpha over successful runs,
/// in order of first appearance.
pub fn alpha_stats(rows: &[SweepRow]) -> Vec<AlphaStats> {
    let mut alphas: Vec<f64> = Vec::new();
    for r in rows {
        if !alphas.iter().any(|a| a.to_bits() == r.alpha.to_bits()) {
            alphas.push(r.alpha);
        }
    }
    alphas
        .into_iter()
        .map(|alpha| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.alpha.to_bits() == alpha.to_bits()).collect();
            let ok: Vec<(f64, u64)> = group.iter().filter_map(|r| r.outcome.clone().ok()).collect();
            let (mse_mean, mse_std) = mean_std(&ok.iter().map(|o| o.0).collect::<Vec<_>>());
            let (top_room_mean, top_room_std) = mean_std(&ok.iter().map(|o| o.1 as f64).collect::<Vec<_>>());
            AlphaStats {
                alpha,
                runs: ok.len(),
                failures: group.len() - ok.len(),
                mse_mean,
                mse_std,
                top_room_mean,
                top_room_std,
            }
        })
        .collect()
}

pub const ALPHA_STATS_HEADER: &str = "alpha,runs,failures,validation_mse_mean,validation_mse_std,top_room_mean,top_room_std";

pub fn alpha_stats_csv(stats: &[AlphaStats]) -> String {
    let mut out = format!("{ALPHA_STATS_HEADER}\n");
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.alpha, s.runs, s.failures, s.mse_mean, s.mse_std, s.top_room_mean, s.top_room_std
        );
    }
    out
}

/// Writes `sweep_summary.csv`, `sweep_alpha_stats.csv`, and, when any run
/// failed, `sweep_errors.txt`.
pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| LabError::io(&p, e))
    };
    write("sweep_summary.csv", sweep_csv(rows))?;
    write("sweep_alpha_stats.csv", alpha_stats_csv(&alpha_stats(rows)))?;
    let errors: String = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("{}: {e}\n", run_name("train", r.alpha, r.seed, 0))))
        .collect();
    if !errors.is_empty() {
        write("sweep_errors.txt", errors)?;
    }
    Ok(())
}

/// Learning curve of the extrinsic goal-reaching task.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSanity {
    pub seed: u64,
    /// `(episodes trained, mean final distance)` at each evaluation.
    pub curve: Vec<(u64, f64)>,
    /// First evaluation at which the mean final distance fell below the
    /// threshold.
    pub reached_at: Option<u64>,
}

/// Mean distance to `goal` after a greedy episode, over `starts`.
pub fn mean_final_distance(layout: &Layout, actor: &Actor, starts: &[Point], steps: u32, goal: Point) -> f64 {
    let total: f64 = starts
        .iter()
        .map(|&s| greedy_rollout(layout, actor, s, steps).last().map_or(f64::NAN, |p| p.distance(goal)))
        .sum();
    total / starts.len() as f64
}

/// Trains DDPG on reward `-|s' - goal| / 40` in an empty arena and
/// evaluates the greedy policy from `eval_episodes` fixed starts every
/// `eval_every` episodes. Stops early once the mean final distance drops
/// below `threshold`.
pub fn goal_sanity(
    base: &ExperimentConfig,
    goal: Point,
    eval_every: u64,
    eval_episodes: usize,
    threshold: f64,
) -> Result<GoalSanity> {
    let layout = Layout::empty();
    let mut trainer = Trainer::with_reward(base.clone(), layout.clone(), RewardSource::GoalDistance(goal))?;
    let mut rng = stream(base.seed, Stream::Evaluation);
    let starts = (0..eval_episodes)
        .map(|_| layout.reset(StartStrategy::UniformAnywhere, &mut rng))
        .collect::<homeostat_core::Result<Vec<_>>>()?;
    let mut curve = Vec::new();
    let mut reached_at = None;
    while trainer.episodes_done() < base.episodes {
        trainer.run_episode()?;
        let done = trainer.episodes_done();
        if done % eval_every == 0 || done == base.episodes {
            let d = mean_final_distance(&layout, trainer.agent().actor(), &starts, base.steps_per_episode, goal);
            curve.push((done, d));
            if d < threshold {
                reached_at = Some(done);
                break;
            }
        }
    }
    Ok(GoalSanity {
        seed: base.seed,
        curve,
        reached_at,
    })
}

pub const FLOW_HEADER: &str = "x,y,dx,dy";

pub fn flowfield_csv(field: &[FlowVector]) -> String {
    let mut out = format!("{FLOW_HEADER}\n");
    for v in field {
        let _ = writeln!(out, "{},{},{},{}", v.x, v.y, v.dx, v.dy);
    }
    out
}

/// Flow field of `actor` on the config's grid plus its near-door summary.
pub fn flowfield(actor: &Actor, config: &ExperimentConfig) -> Result<(Vec<FlowVector>, FlowSummary)> {
    let layout = config.layout()?;
    let field = policy_flow_field(actor, &layout, config.flow_grid_step);
    let summary = flow_summary(&field, &layout, DOOR_RADIUS);
    Ok((field, summary))
}

pub fn flow_report(summary: &FlowSummary) -> String {
    format!(
        "mean |action| within {DOOR_RADIUS} of door centers: {:.4} ({} nodes)\nmean |action| over the arena: {:.4} ({} nodes)",
        summary.near_door_mean, summary.near_door_nodes, summary.arena_mean, summary.arena_nodes
    )
}
