//! Flat `key=value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored,
//! unknown keys are rejected. Lists are comma separated. Every key has the
//! default of [`ExperimentConfig::default`]; [`render`] writes all of them.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use homeostat_core::{ExperimentConfig, StartStrategy};

use crate::error::{LabError, Result};

pub const KEYS: &[&str] = &[
    "alpha",
    "episodes",
    "steps_per_episode",
    "max_step_len",
    "epsilon",
    "start_strategy",
    "seed",
    "gamma",
    "tau",
    "batch_size",
    "buffer_capacity",
    "warmup",
    "lr_forward",
    "lr_extended",
    "lr_critic",
    "lr_actor",
    "validation_pool",
    "checkpoint_interval",
    "lower_wall_y",
    "lower_door_lo",
    "lower_door_hi",
    "upper_wall_y",
    "upper_door_lo",
    "upper_door_hi",
    "sweep_alphas",
    "sweep_seeds",
    "flow_grid_step",
];

pub fn strategy_name(s: StartStrategy) -> &'static str {
    match s {
        StartStrategy::UniformAnywhere => "uniform_anywhere",
        StartStrategy::UniformBottomRoom => "uniform_bottom_room",
    }
}

fn parse_strategy(v: &str) -> Option<StartStrategy> {
    match v {
        "uniform_anywhere" => Some(StartStrategy::UniformAnywhere),
        "uniform_bottom_room" => Some(StartStrategy::UniformBottomRoom),
        _ => None,
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| LabError::config(key, format!("cannot parse `{v}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|item| value(key, item.trim())).collect()
}

/// Assigns one key. Does not range-check; see [`finish`].
pub fn set(cfg: &mut ExperimentConfig, key: &str, v: &str) -> Result<()> {
    let v = v.trim();
    match key {
        "alpha" => cfg.alpha = value(key, v)?,
        "episodes" => cfg.episodes = value(key, v)?,
        "steps_per_episode" => cfg.steps_per_episode = value(key, v)?,
        "max_step_len" => cfg.max_step_len = value(key, v)?,
        "epsilon" => cfg.epsilon = value(key, v)?,
        "start_strategy" => {
            cfg.start_strategy = parse_strategy(v).ok_or_else(|| {
                LabError::config(key, format!("`{v}` is not uniform_anywhere or uniform_bottom_room"))
            })?
        }
        "seed" => cfg.seed = value(key, v)?,
        "gamma" => cfg.gamma = value(key, v)?,
        "tau" => cfg.tau = value(key, v)?,
        "batch_size" => cfg.batch_size = value(key, v)?,
        "buffer_capacity" => cfg.buffer_capacity = value(key, v)?,
        "warmup" => cfg.warmup = value(key, v)?,
        "lr_forward" => cfg.lr_forward = value(key, v)?,
        "lr_extended" => cfg.lr_extended = value(key, v)?,
        "lr_critic" => cfg.lr_critic = value(key, v)?,
        "lr_actor" => cfg.lr_actor = value(key, v)?,
        "validation_pool" => cfg.validation_pool = value(key, v)?,
        "checkpoint_interval" => cfg.checkpoint_interval = value(key, v)?,
        "lower_wall_y" => cfg.walls[0].y = value(key, v)?,
        "lower_door_lo" => cfg.walls[0].door_lo = value(key, v)?,
        "lower_door_hi" => cfg.walls[0].door_hi = value(key, v)?,
        "upper_wall_y" => cfg.walls[1].y = value(key, v)?,
        "upper_door_lo" => cfg.walls[1].door_lo = value(key, v)?,
        "upper_door_hi" => cfg.walls[1].door_hi = value(key, v)?,
        "sweep_alphas" => cfg.sweep_alphas = list(key, v)?,
        "sweep_seeds" => cfg.sweep_seeds = list(key, v)?,
        "flow_grid_step" => cfg.flow_grid_step = value(key, v)?,
        _ => return Err(LabError::config(key, "unknown key")),
    }
    Ok(())
}

/// Applies the assignments in `text` on top of `cfg`.
pub fn apply_text(cfg: &mut ExperimentConfig, text: &str) -> Result<()> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::config(line, format!("line {} is not key=value", n + 1)))?;
        set(cfg, key.trim(), v)?;
    }
    Ok(())
}

/// Range-checks a finished config, translating the core error into one that
/// names the key.
pub fn finish(cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    match cfg.validate() {
        Ok(()) => Ok(cfg),
        Err(homeostat_core::Error::Config(msg)) => {
            let (key, why) = msg.split_once(": ").unwrap_or(("config", msg.as_str()));
            Err(LabError::config(key, why))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    apply_text(&mut cfg, text)?;
    finish(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_str(&text)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Writes every key. Floats use the shortest text that parses back to the
/// same value, so `parse_str(&render(c)) == c`.
pub fn render(cfg: &ExperimentConfig) -> String {
    let [lo, up] = cfg.walls;
    let pairs: [(&str, String); 27] = [
        ("alpha", cfg.alpha.to_string()),
        ("episodes", cfg.episodes.to_string()),
        ("steps_per_episode", cfg.steps_per_episode.to_string()),
        ("max_step_len", cfg.max_step_len.to_string()),
        ("epsilon", cfg.epsilon.to_string()),
        ("start_strategy", strategy_name(cfg.start_strategy).to_string()),
        ("seed", cfg.seed.to_string()),
        ("gamma", cfg.gamma.to_string()),
        ("tau", cfg.tau.to_string()),
        ("batch_size", cfg.batch_size.to_string()),
        ("buffer_capacity", cfg.buffer_capacity.to_string()),
        ("warmup", cfg.warmup.to_string()),
        ("lr_forward", cfg.lr_forward.to_string()),
        ("lr_extended", cfg.lr_extended.to_string()),
        ("lr_critic", cfg.lr_critic.to_string()),
        ("lr_actor", cfg.lr_actor.to_string()),
        ("validation_pool", cfg.validation_pool.to_string()),
        ("checkpoint_interval", cfg.checkpoint_interval.to_string()),
        ("lower_wall_y", lo.y.to_string()),
        ("lower_door_lo", lo.door_lo.to_string()),
        ("lower_door_hi", lo.door_hi.to_string()),
        ("upper_wall_y", up.y.to_string()),
        ("upper_door_lo", up.door_lo.to_string()),
        ("upper_door_hi", up.door_hi.to_string()),
        ("sweep_alphas", join(&cfg.sweep_alphas)),
        ("sweep_seeds", join(&cfg.sweep_seeds)),
        ("flow_grid_step", cfg.flow_grid_step.to_string()),
    ];
    debug_assert!(pairs.iter().map(|p| p.0).eq(KEYS.iter().copied()));
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
