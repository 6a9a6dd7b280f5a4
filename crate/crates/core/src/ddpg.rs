//! Deterministic policy gradient learner with epsilon-random exploration.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{clamp_action_to, random_action, ActionVec, Point};
use crate::nn::{Activation, AdamConfig, AdamState, DenseNet, ForwardCache, Gradients};
use crate::world_model::{encode_action, encode_point, HIDDEN};

/// The policy `pi(s)`: a `[2, 64, 64, 2]` network with tanh output scaled to
/// the step length, then clamped onto the step disc.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    net: DenseNet,
    max_step: f64,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(max_step: f64, rng: &mut R) -> Result<Self> {
        let net = DenseNet::new(&[2, HIDDEN[0], HIDDEN[1], 2], Activation::Relu, Activation::Tanh, rng)?;
        Ok(Self { net, max_step })
    }

    pub fn from_net(net: DenseNet, max_step: f64) -> Result<Self> {
        if net.input_len() != 2 || net.output_len() != 2 {
            return Err(Error::Shape(alloc::format!("actor must be 2 -> 2, got {:?}", net.sizes())));
        }
        Ok(Self { net, max_step })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    fn action_from_output(&self, out: &[f64]) -> ActionVec {
        clamp_action_to(out[0] * self.max_step, out[1] * self.max_step, self.max_step)
    }

    pub fn policy_action(&self, s: Point) -> ActionVec {
        let out = self.net.predict(&encode_point(s));
        self.action_from_output(&out)
    }

    fn policy_action_cached(&self, s: Point, cache: &mut ForwardCache) -> ActionVec {
        self.net.forward_into(&encode_point(s), cache);
        self.action_from_output(cache.output())
    }

    /// With probability `epsilon` a uniform action on the step disc,
    /// otherwise the policy action. The flag reports which one was taken.
    pub fn act<R: Rng + ?Sized>(&self, s: Point, epsilon: f64, rng: &mut R) -> (ActionVec, bool) {
        if rng.gen::<f64>() < epsilon {
            (random_action(rng, self.max_step), true)
        } else {
            (self.policy_action(s), false)
        }
    }

    /// One ascent step on the mean of `q(s, pi(s))` over `states`.
    ///
    /// `q` returns the value and its gradient with respect to the action.
    /// The norm clamp is passed through as the identity. Returns the mean
    /// value before the update.
    pub fn ascend<F>(
        &mut self,
        optimizer: &mut AdamState,
        states: &[Point],
        mut q: F,
        scratch: &mut PolicyScratch,
    ) -> Result<f64>
    where
        F: FnMut(Point, ActionVec) -> (f64, [f64; 2]),
    {
        if states.is_empty() {
            return Ok(0.0);
        }
        let n = states.len() as f64;
        scratch.grads.fill_zero();
        let mut objective = 0.0;
        for &s in states {
            let a = self.policy_action_cached(s, &mut scratch.cache);
            let (value, dq_da) = q(s, a);
            objective += value;
            // d(action)/d(output) is max_step; minimize the negated mean.
            let g = [-dq_da[0] * self.max_step / n, -dq_da[1] * self.max_step / n];
            self.net.accumulate_gradients(&scratch.cache, &g, &mut scratch.grads);
        }
        let objective = objective / n;
        if !objective.is_finite() {
            return Err(Error::NonFinite { component: "actor" });
        }
        optimizer
            .step(&mut self.net, &scratch.grads)
            .map_err(|e| relabel(e, "actor"))?;
        Ok(objective)
    }
}

/// Reusable buffers for [`Actor::ascend`].
#[derive(Debug, Clone)]
pub struct PolicyScratch {
    cache: ForwardCache,
    grads: Gradients,
}

impl PolicyScratch {
    pub fn new(actor: &Actor) -> Self {
        Self {
            cache: ForwardCache::default(),
            grads: Gradients::zeros_like(&actor.net),
        }
    }
}

fn relabel(e: Error, component: &'static str) -> Error {
    match e {
        Error::NonFinite { .. } => Error::NonFinite { component },
        other => other,
    }
}

/// Action-value `Q(s, a)`: a `[4, 64, 64, 1]` relu network.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    net: DenseNet,
    max_step: f64,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(max_step: f64, rng: &mut R) -> Result<Self> {
        let net = DenseNet::new(&[4, HIDDEN[0], HIDDEN[1], 1], Activation::Relu, Activation::Linear, rng)?;
        Ok(Self { net, max_step })
    }

    pub fn from_net(net: DenseNet, max_step: f64) -> Result<Self> {
        if net.input_len() != 4 || net.output_len() != 1 {
            return Err(Error::Shape(alloc::format!("critic must be 4 -> 1, got {:?}", net.sizes())));
        }
        Ok(Self { net, max_step })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    fn input(&self, s: Point, a: ActionVec) -> [f64; 4] {
        let [sx, sy] = encode_point(s);
        let [ax, ay] = encode_action(a, self.max_step);
        [sx, sy, ax, ay]
    }

    pub fn value(&self, s: Point, a: ActionVec) -> f64 {
        self.net.predict(&self.input(s, a))[0]
    }

    fn value_cached(&self, s: Point, a: ActionVec, cache: &mut ForwardCache) -> f64 {
        self.net.forward_into(&self.input(s, a), cache);
        cache.output()[0]
    }

    /// `Q(s, a)` and `dQ/da` in arena units.
    pub fn value_and_action_gradient(&self, s: Point, a: ActionVec, cache: &mut ForwardCache) -> (f64, [f64; 2]) {
        let q = self.value_cached(s, a, cache);
        let dx = self.net.backward_input(cache, &[1.0]);
        (q, [dx[2] / self.max_step, dx[3] / self.max_step])
    }
}

/// One critic training sample with its normalized reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticSample {
    pub s: Point,
    pub a: ActionVec,
    pub reward: f64,
    pub s_next: Point,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub max_step: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            max_step: crate::geometry::MAX_STEP_LEN,
        }
    }
}

/// Online and target actor/critic pairs with their optimizers.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: DdpgConfig,
    actor: Actor,
    critic: Critic,
    actor_target: Actor,
    critic_target: Critic,
    actor_opt: AdamState,
    critic_opt: AdamState,
    policy_scratch: PolicyScratch,
    critic_grads: Gradients,
    caches: [ForwardCache; 3],
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(config: DdpgConfig, rng: &mut R) -> Result<Self> {
        let actor = Actor::new(config.max_step, rng)?;
        let critic = Critic::new(config.max_step, rng)?;
        Ok(Self::from_parts(config, actor, critic))
    }

    /// Starts from the given networks; targets begin as exact copies.
    pub fn from_parts(config: DdpgConfig, actor: Actor, critic: Critic) -> Self {
        Self {
            actor_opt: AdamState::new(&actor.net, AdamConfig::with_learning_rate(config.actor_lr)),
            critic_opt: AdamState::new(&critic.net, AdamConfig::with_learning_rate(config.critic_lr)),
            policy_scratch: PolicyScratch::new(&actor),
            critic_grads: Gradients::zeros_like(&critic.net),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            config,
            caches: Default::default(),
        }
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Actor {
        &mut self.actor
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn actor_target(&self) -> &Actor {
        &self.actor_target
    }

    pub fn critic_target(&self) -> &Critic {
        &self.critic_target
    }

    /// Replaces the target networks, e.g. when restoring a checkpoint.
    pub fn set_targets(&mut self, actor_target: Actor, critic_target: Critic) -> Result<()> {
        if !actor_target.net.same_architecture(&self.actor.net) || !critic_target.net.same_architecture(&self.critic.net) {
            return Err(Error::Shape("target networks do not match online networks".into()));
        }
        self.actor_target = actor_target;
        self.critic_target = critic_target;
        Ok(())
    }

    /// Temporal-difference target `r + gamma (1 - done) Q'(s', pi'(s'))`.
    pub fn td_target(&self, sample: &CriticSample) -> f64 {
        if sample.done {
            return sample.reward;
        }
        let a_next = self.actor_target.policy_action(sample.s_next);
        sample.reward + self.config.gamma * self.critic_target.value(sample.s_next, a_next)
    }

    /// One step on the mean squared TD error; returns the loss before it.
    pub fn critic_update(&mut self, batch: &[CriticSample]) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let n = batch.len() as f64;
        let gamma = self.config.gamma;
        self.critic_grads.fill_zero();
        let mut loss = 0.0;
        let [c0, c1, c2] = &mut self.caches;
        for sample in batch {
            let y = if sample.done {
                sample.reward
            } else {
                let a_next = self.actor_target.policy_action_cached(sample.s_next, c0);
                sample.reward + gamma * self.critic_target.value_cached(sample.s_next, a_next, c1)
            };
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    component: "critic target",
                });
            }
            let q = self.critic.value_cached(sample.s, sample.a, c2);
            let err = q - y;
            loss += err * err;
            self.critic.net.accumulate_gradients(c2, &[2.0 * err / n], &mut self.critic_grads);
        }
        let loss = loss / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite { component: "critic" });
        }
        self.critic_opt
            .step(&mut self.critic.net, &self.critic_grads)
            .map_err(|e| relabel(e, "critic"))?;
        Ok(loss)
    }

    /// One policy-gradient step through the current critic; returns the mean
    /// `Q(s, pi(s))` before it.
    pub fn actor_update(&mut self, states: &[Point]) -> Result<f64> {
        let critic = &self.critic;
        let cache = &mut self.caches[0];
        self.actor.ascend(
            &mut self.actor_opt,
            states,
            |s, a| critic.value_and_action_gradient(s, a, cache),
            &mut self.policy_scratch,
        )
    }

    /// Soft-updates both target networks toward the online ones.
    pub fn sync_targets(&mut self, tau: f64) -> Result<()> {
        self.actor_target.net.soft_update(&self.actor.net, tau)?;
        self.critic_target.net.soft_update(&self.critic.net, tau)
    }

    /// Greedy rollout helper used by evaluations.
    pub fn policy_action(&self, s: Point) -> ActionVec {
        self.actor.policy_action(s)
    }
}

/// Squared distance between the parameters of two same-shape networks.
pub fn parameter_distance(a: &DenseNet, b: &DenseNet) -> f64 {
    let d: f64 = a
        .parameters()
        .zip(b.parameters())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    libm::sqrt(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Layout, StartStrategy, ARENA_SIZE, MAX_STEP_LEN};
    use crate::rng::{stream, Stream};
    use alloc::vec;
    use alloc::vec::Vec;

    fn batch_states(batch: &[CriticSample]) -> Vec<Point> {
        batch.iter().map(|s| s.s).collect()
    }

    fn agent(seed: u64) -> DdpgAgent {
        DdpgAgent::new(DdpgConfig::default(), &mut stream(seed, Stream::Init)).unwrap()
    }

    #[test]
    fn greedy_when_epsilon_zero() {
        let a = agent(1);
        let mut rng = stream(1, Stream::Exploration);
        let s = Point::new(7.0, 9.0);
        for _ in 0..100 {
            let (act, random) = a.actor().act(s, 0.0, &mut rng);
            assert!(!random);
            assert_eq!(act, a.policy_action(s));
        }
    }

    #[test]
    fn uniform_disc_when_epsilon_one() {
        let a = agent(1);
        let mut rng = stream(2, Stream::Exploration);
        let n = 10_000;
        let mut total = 0.0;
        for _ in 0..n {
            let (act, random) = a.actor().act(Point::new(1.0, 1.0), 1.0, &mut rng);
            assert!(random);
            total += act.norm();
        }
        // Mean radius of the uniform disc of radius R is 2R/3.
        assert!((total / n as f64 - 20.0 / 3.0).abs() < 0.1);
    }

    #[test]
    fn epsilon_half_flips_fair_coin() {
        let a = agent(1);
        let mut rng = stream(3, Stream::Exploration);
        let n = 10_000;
        let random = (0..n).filter(|_| a.actor().act(Point::new(1.0, 1.0), 0.5, &mut rng).1).count();
        assert!((random as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn corner_output_clamped_to_disc() {
        // Large biases saturate tanh at (1, 1).
        let net = DenseNet::from_parts(
            &[2, 2],
            Activation::Relu,
            Activation::Tanh,
            vec![(vec![0.0; 4], vec![50.0, 50.0])],
        )
        .unwrap();
        let actor = Actor::from_net(net, MAX_STEP_LEN).unwrap();
        let a = actor.policy_action(Point::new(3.0, 3.0));
        let expected = 10.0 / libm::sqrt(2.0);
        assert!((a.dx - expected).abs() < 1e-12 && (a.dy - expected).abs() < 1e-12);
    }

    #[test]
    fn policy_is_bounded_and_finite_everywhere() {
        let a = agent(4);
        for x in [0.0, ARENA_SIZE] {
            for y in [0.0, ARENA_SIZE] {
                let act = a.policy_action(Point::new(x, y));
                assert!(act.dx.is_finite() && act.dy.is_finite());
                assert!(act.norm() <= MAX_STEP_LEN + 1e-12);
            }
        }
        let layout = Layout::three_rooms();
        let mut rng = stream(4, Stream::Env);
        for _ in 0..1000 {
            let s = layout.reset(StartStrategy::UniformAnywhere, &mut rng).unwrap();
            assert!(a.policy_action(s).norm() <= MAX_STEP_LEN + 1e-12);
            assert_eq!(a.policy_action(s), a.policy_action(s));
        }
    }

    #[test]
    fn terminal_and_undiscounted_targets() {
        let mut a = agent(5);
        let sample = CriticSample {
            s: Point::new(1.0, 2.0),
            a: ActionVec::new(1.0, 0.0),
            reward: 0.75,
            s_next: Point::new(2.0, 2.0),
            done: true,
        };
        assert_eq!(a.td_target(&sample), 0.75);
        a.config.gamma = 0.0;
        assert_eq!(a.td_target(&CriticSample { done: false, ..sample }), 0.75);
    }

    #[test]
    fn critic_loss_matches_hand_computation() {
        let mut a = agent(6);
        let sample = CriticSample {
            s: Point::new(10.0, 30.0),
            a: ActionVec::new(-3.0, 4.0),
            reward: 0.5,
            s_next: Point::new(7.0, 34.0),
            done: false,
        };
        // Hand execution of the TD formula with the same networks.
        let a_next = a.actor_target().policy_action(sample.s_next);
        let y = sample.reward + 1.0 * a.critic_target().value(sample.s_next, a_next);
        let q = a.critic().value(sample.s, sample.a);
        let expected = (q - y) * (q - y);
        let loss = a.critic_update(&[sample]).unwrap();
        assert!((loss - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn constant_critic_leaves_actor_alone() {
        let mut actor = agent(7).actor().clone();
        let before = actor.clone();
        let mut opt = AdamState::new(actor.net(), AdamConfig::with_learning_rate(1e-3));
        let mut scratch = PolicyScratch::new(&actor);
        let states = [Point::new(5.0, 5.0), Point::new(30.0, 20.0)];
        let v = actor.ascend(&mut opt, &states, |_, _| (3.0, [0.0, 0.0]), &mut scratch).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(actor, before);
    }

    #[test]
    fn quadratic_critic_pulls_policy_to_target_action() {
        let target = ActionVec::new(4.0, -3.0);
        let mut actor = agent(8).actor().clone();
        let mut opt = AdamState::new(actor.net(), AdamConfig::with_learning_rate(1e-3));
        let mut scratch = PolicyScratch::new(&actor);
        let states: Vec<Point> = (0..16).map(|i| Point::new(2.5 * i as f64, 40.0 - 2.5 * i as f64)).collect();
        let gap = |actor: &Actor| {
            states
                .iter()
                .map(|&s| {
                    let a = actor.policy_action(s);
                    libm::hypot(a.dx - target.dx, a.dy - target.dy)
                })
                .sum::<f64>()
                / states.len() as f64
        };
        let start = gap(&actor);
        let q = |_: Point, a: ActionVec| {
            let (ex, ey) = (a.dx - target.dx, a.dy - target.dy);
            (-(ex * ex + ey * ey), [-2.0 * ex, -2.0 * ey])
        };
        for _ in 0..500 {
            actor.ascend(&mut opt, &states, q, &mut scratch).unwrap();
        }
        let end = gap(&actor);
        assert!(end < 0.1 * start && end < 0.5, "{start} -> {end}");
    }

    #[test]
    fn updates_are_deterministic() {
        let batch: Vec<CriticSample> = (0..8)
            .map(|i| CriticSample {
                s: Point::new(i as f64 * 4.0 + 1.0, 5.0),
                a: ActionVec::new(1.0, i as f64 - 4.0),
                reward: i as f64 * 0.1,
                s_next: Point::new(i as f64 * 4.0 + 2.0, 6.0),
                done: i % 3 == 0,
            })
            .collect();
        let run = || {
            let mut a = agent(9);
            for _ in 0..5 {
                a.critic_update(&batch).unwrap();
                a.actor_update(&batch_states(&batch)).unwrap();
                a.sync_targets(0.01).unwrap();
            }
            (a.actor().clone(), a.critic().clone(), a.actor_target().clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn target_sync_extremes_and_drift() {
        let batch = [CriticSample {
            s: Point::new(3.0, 3.0),
            a: ActionVec::new(1.0, 1.0),
            reward: 1.0,
            s_next: Point::new(4.0, 4.0),
            done: false,
        }];
        let mut a = agent(10);
        let initial_actor = a.actor().net().clone();
        let initial_critic = a.critic().net().clone();
        for _ in 0..20 {
            a.critic_update(&batch).unwrap();
            a.actor_update(&[batch[0].s]).unwrap();
            a.sync_targets(0.001).unwrap();
        }
        let online_drift = parameter_distance(a.critic().net(), &initial_critic);
        let target_drift = parameter_distance(a.critic_target().net(), &initial_critic);
        assert!(target_drift <= online_drift);
        assert!(parameter_distance(a.actor_target().net(), &initial_actor) <= parameter_distance(a.actor().net(), &initial_actor));

        let frozen = a.critic_target().clone();
        a.critic_update(&batch).unwrap();
        a.sync_targets(0.0).unwrap();
        assert_eq!(a.critic_target(), &frozen);

        a.sync_targets(1.0).unwrap();
        assert_eq!(a.critic_target().net(), a.critic().net());
        assert_eq!(a.actor_target().net(), a.actor().net());
    }
}
