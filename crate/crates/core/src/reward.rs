//! Homeostatically regulated information-gain reward.
//!
//! The raw reward of a transition `(s, a, s')` is
//!
//! ```text
//! IG = |s' - f(s, a)| - alpha * |s' - k(s, a, pi(s'))|
//! ```
//!
//! The first term rewards surprise under the forward model. The second is
//! a familiarity bonus: it is large when knowing the policy's next action
//! makes `s'` predictable. Rewards fed to the critic are z-scored with the
//! mean and population standard deviation of all raw values in replay,
//! recomputed once per episode.

use crate::ddpg::Actor;
use crate::error::{Error, Result};
use crate::geometry::{ActionVec, Point};
use crate::world_model::{ExtendedForwardModel, ForwardModel};

/// Guard below which the standard deviation is treated as degenerate.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Weight of the homeostatic term. Zero recovers plain prediction-error
/// curiosity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha >= 0.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Config(alloc::format!("alpha must be finite and >= 0, got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Both prediction errors and the combined raw reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgTerms {
    pub forward_error: f64,
    pub extended_error: f64,
    pub raw: f64,
}

#[inline]
pub fn homeostatic_ig(forward_error: f64, extended_error: f64, alpha: AlphaParam) -> f64 {
    forward_error - alpha.0 * extended_error
}

/// Raw reward for the transition `(s, a, s_next)`. The next action is what
/// the online actor would do at `s_next`, never the executed one.
pub fn compute_raw_ig(
    s: Point,
    a: ActionVec,
    s_next: Point,
    actor: &Actor,
    forward: &ForwardModel,
    extended: &ExtendedForwardModel,
    alpha: AlphaParam,
) -> Result<IgTerms> {
    let a_next = actor.policy_action(s_next);
    let forward_error = s_next.distance(forward.predict(s, a));
    let extended_error = s_next.distance(extended.predict(s, a, a_next));
    let raw = homeostatic_ig(forward_error, extended_error, alpha);
    if !raw.is_finite() {
        let component = if forward_error.is_finite() {
            ExtendedForwardModel::COMPONENT
        } else {
            ForwardModel::COMPONENT
        };
        return Err(Error::NonFinite { component });
    }
    Ok(IgTerms {
        forward_error,
        extended_error,
        raw,
    })
}

/// Running z-score parameters `(mu, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardNormalizer {
    mean: f64,
    std: f64,
    sample_count: usize,
    updates: u64,
}

impl Default for RewardNormalizer {
    fn default() -> Self {
        Self::identity()
    }
}

impl RewardNormalizer {
    pub const fn identity() -> Self {
        Self {
            mean: 0.0,
            std: 1.0,
            sample_count: 0,
            updates: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Number of episode-end refreshes so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Recomputes mean and population standard deviation over `values`
    /// (two passes). An empty collection leaves the parameters unchanged.
    pub fn update(&mut self, values: impl Iterator<Item = f64> + Clone) {
        self.updates += 1;
        let (count, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        if count == 0 {
            return;
        }
        let mean = sum / count as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        let std = libm::sqrt(var);
        self.mean = mean;
        self.std = if std < SIGMA_FLOOR { 1.0 } else { std };
        self.sample_count = count;
    }

    #[inline]
    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.mean) / self.std
    }
}
