use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::ddpg::DdpgConfig;
use crate::error::{Error, Result};
use crate::geometry::{Layout, StartStrategy, Wall};

/// Every hyper-parameter of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub episodes: u64,
    pub steps_per_episode: u32,
    pub max_step_len: f64,
    pub epsilon: f64,
    pub start_strategy: StartStrategy,
    pub seed: u64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub lr_forward: f64,
    pub lr_extended: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub validation_pool: usize,
    /// Episodes between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
    pub walls: [Wall; 2],
    pub sweep_alphas: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
    pub flow_grid_step: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            episodes: 10_000,
            steps_per_episode: 10,
            max_step_len: 10.0,
            epsilon: 0.5,
            start_strategy: StartStrategy::UniformAnywhere,
            seed: 1,
            gamma: 1.0,
            tau: 0.001,
            batch_size: 64,
            buffer_capacity: 1_000_000,
            warmup: 1000,
            lr_forward: 1e-3,
            lr_extended: 1e-3,
            lr_critic: 1e-3,
            lr_actor: 1e-4,
            validation_pool: 100_000,
            checkpoint_interval: 0,
            walls: Layout::DEFAULT_WALLS,
            sweep_alphas: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            sweep_seeds: vec![1, 2, 3],
            flow_grid_step: 2.0,
        }
    }
}

impl ExperimentConfig {
    pub fn layout(&self) -> Result<Layout> {
        Layout::with_walls(self.walls[0], self.walls[1])
    }

    pub fn ddpg(&self) -> DdpgConfig {
        DdpgConfig {
            gamma: self.gamma,
            tau: self.tau,
            actor_lr: self.lr_actor,
            critic_lr: self.lr_critic,
            max_step: self.max_step_len,
        }
    }

    /// Checks ranges; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        fn bad(key: &str, why: &str) -> Error {
            Error::Config(format!("{key}: {why}"))
        }
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, "must be a positive number"))
            }
        };
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(bad(key, "must lie in [0, 1]"))
            }
        };
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(bad("alpha", "must be >= 0"));
        }
        if self.episodes == 0 {
            return Err(bad("episodes", "must be positive"));
        }
        if self.steps_per_episode == 0 {
            return Err(bad("steps_per_episode", "must be positive"));
        }
        positive("max_step_len", self.max_step_len)?;
        unit("epsilon", self.epsilon)?;
        unit("gamma", self.gamma)?;
        unit("tau", self.tau)?;
        if self.batch_size == 0 {
            return Err(bad("batch_size", "must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(bad("buffer_capacity", "must hold at least one batch"));
        }
        for (key, lr) in [
            ("lr_forward", self.lr_forward),
            ("lr_extended", self.lr_extended),
            ("lr_critic", self.lr_critic),
            ("lr_actor", self.lr_actor),
        ] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(bad(key, "must be >= 0"));
            }
        }
        if self.validation_pool == 0 {
            return Err(bad("validation_pool", "must be positive"));
        }
        positive("flow_grid_step", self.flow_grid_step)?;
        if self.sweep_alphas.is_empty() || self.sweep_alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(bad("sweep_alphas", "must be a nonempty list of values >= 0"));
        }
        if self.sweep_seeds.is_empty() {
            return Err(bad("sweep_seeds", "must be a nonempty list"));
        }
        self.layout().map_err(|e| bad("walls", &format!("{e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn out_of_range_values_name_the_key() {
        let cfg = ExperimentConfig {
            epsilon: 1.5,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("epsilon"));
        let cfg = ExperimentConfig {
            alpha: -1.0,
            ..Default::default()
        };
        assert!(format!("{}", cfg.validate().unwrap_err()).contains("alpha"));
    }
}
