//! Forward model `f(s, a)` and extended forward model `k(s, a, a')`.
//!
//! Both predict the absolute next position. Inputs and outputs live in a
//! normalized space: positions map through `x / 20 - 1` onto [-1, 1] and
//! actions are divided by the maximum step length. Predictions are mapped
//! back to arena units without clipping.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{ActionVec, Point, ARENA_SIZE};
use crate::nn::{Activation, AdamConfig, AdamState, DenseNet, ForwardCache, Gradients};

pub const HIDDEN: [usize; 2] = [64, 64];

const HALF: f64 = ARENA_SIZE / 2.0;

pub fn encode_point(p: Point) -> [f64; 2] {
    [p.x / HALF - 1.0, p.y / HALF - 1.0]
}

pub fn decode_point(v: [f64; 2]) -> Point {
    Point::new((v[0] + 1.0) * HALF, (v[1] + 1.0) * HALF)
}

pub fn encode_action(a: ActionVec, max_step: f64) -> [f64; 2] {
    [a.dx / max_step, a.dy / max_step]
}

/// One supervised sample for the forward model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardSample {
    pub s: Point,
    pub a: ActionVec,
    pub s_next: Point,
}

/// One supervised sample for the extended model: the action actually taken
/// at `s_next` is part of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedSample {
    pub s: Point,
    pub a: ActionVec,
    pub a_next: ActionVec,
    pub s_next: Point,
}

/// A network trained by mean squared error on normalized positions.
#[derive(Debug, Clone)]
struct Regressor {
    net: DenseNet,
    optimizer: AdamState,
    grads: Gradients,
    cache: ForwardCache,
    component: &'static str,
}

impl Regressor {
    fn new<R: Rng + ?Sized>(
        inputs: usize,
        learning_rate: f64,
        rng: &mut R,
        component: &'static str,
    ) -> Result<Self> {
        let sizes = [inputs, HIDDEN[0], HIDDEN[1], 2];
        let net = DenseNet::new(&sizes, Activation::Relu, Activation::Linear, rng)?;
        Ok(Self::from_net(net, learning_rate, component))
    }

    fn from_net(net: DenseNet, learning_rate: f64, component: &'static str) -> Self {
        let optimizer = AdamState::new(&net, AdamConfig::with_learning_rate(learning_rate));
        let grads = Gradients::zeros_like(&net);
        Self {
            net,
            optimizer,
            grads,
            cache: ForwardCache::default(),
            component,
        }
    }

    fn predict(&self, input: &[f64]) -> Point {
        let out = self.net.predict(input);
        decode_point([out[0], out[1]])
    }

    /// One optimizer step on the per-coordinate mean squared error; returns
    /// the loss before the update.
    fn fit_step<const N: usize>(&mut self, batch: impl ExactSizeIterator<Item = ([f64; N], Point)>) -> Result<f64> {
        let n = batch.len();
        if n == 0 {
            return Err(Error::Config(alloc::format!("empty batch for the {}", self.component)));
        }
        let denom = (2 * n) as f64;
        self.grads.fill_zero();
        let mut loss = 0.0;
        for (input, target) in batch {
            self.net.forward_into(&input, &mut self.cache);
            let target = encode_point(target);
            let out = self.cache.output();
            let diff = [out[0] - target[0], out[1] - target[1]];
            loss += diff[0] * diff[0] + diff[1] * diff[1];
            let grad = [2.0 * diff[0] / denom, 2.0 * diff[1] / denom];
            self.net.accumulate_gradients(&self.cache, &grad, &mut self.grads);
        }
        let loss = loss / denom;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                component: self.component,
            });
        }
        self.optimizer
            .step(&mut self.net, &self.grads)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite {
                    component: self.component,
                },
                other => other,
            })?;
        Ok(loss)
    }
}

fn forward_input(s: Point, a: ActionVec, max_step: f64) -> [f64; 4] {
    let [sx, sy] = encode_point(s);
    let [ax, ay] = encode_action(a, max_step);
    [sx, sy, ax, ay]
}

fn extended_input(s: Point, a: ActionVec, a_next: ActionVec, max_step: f64) -> [f64; 6] {
    let [sx, sy, ax, ay] = forward_input(s, a, max_step);
    let [bx, by] = encode_action(a_next, max_step);
    [sx, sy, ax, ay, bx, by]
}

fn check_width(net: &DenseNet, inputs: usize) -> Result<()> {
    if net.input_len() != inputs || net.output_len() != 2 {
        return Err(Error::Shape(alloc::format!(
            "expected a {inputs} -> 2 network, got {:?}",
            net.sizes()
        )));
    }
    Ok(())
}

/// `f(s, a)`: next-position predictor, a `[4, 64, 64, 2]` relu network.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    inner: Regressor,
    max_step: f64,
}

impl ForwardModel {
    pub const COMPONENT: &'static str = "forward model";

    pub fn new<R: Rng + ?Sized>(learning_rate: f64, max_step: f64, rng: &mut R) -> Result<Self> {
        Ok(Self {
            inner: Regressor::new(4, learning_rate, rng, Self::COMPONENT)?,
            max_step,
        })
    }

    /// Wraps trained parameters, e.g. from a checkpoint.
    pub fn from_net(net: DenseNet, learning_rate: f64, max_step: f64) -> Result<Self> {
        check_width(&net, 4)?;
        Ok(Self {
            inner: Regressor::from_net(net, learning_rate, Self::COMPONENT),
            max_step,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.inner.net
    }

    pub fn predict(&self, s: Point, a: ActionVec) -> Point {
        self.inner.predict(&forward_input(s, a, self.max_step))
    }

    pub fn train_step(&mut self, batch: &[ForwardSample]) -> Result<f64> {
        let max_step = self.max_step;
        self.inner.fit_step(
            batch
                .iter()
                .map(|t| (forward_input(t.s, t.a, max_step), t.s_next)),
        )
    }
}

/// `k(s, a, a')`: next-position predictor that also sees the next action, a
/// `[6, 64, 64, 2]` relu network.
#[derive(Debug, Clone)]
pub struct ExtendedForwardModel {
    inner: Regressor,
    max_step: f64,
}

impl ExtendedForwardModel {
    pub const COMPONENT: &'static str = "extended forward model";

    pub fn new<R: Rng + ?Sized>(learning_rate: f64, max_step: f64, rng: &mut R) -> Result<Self> {
        Ok(Self {
            inner: Regressor::new(6, learning_rate, rng, Self::COMPONENT)?,
            max_step,
        })
    }

    pub fn from_net(net: DenseNet, learning_rate: f64, max_step: f64) -> Result<Self> {
        check_width(&net, 6)?;
        Ok(Self {
            inner: Regressor::from_net(net, learning_rate, Self::COMPONENT),
            max_step,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.inner.net
    }

    pub fn predict(&self, s: Point, a: ActionVec, a_next: ActionVec) -> Point {
        self.inner
            .predict(&extended_input(s, a, a_next, self.max_step))
    }

    pub fn train_step(&mut self, batch: &[ExtendedSample]) -> Result<f64> {
        let max_step = self.max_step;
        self.inner.fit_step(
            batch
                .iter()
                .map(|t| (extended_input(t.s, t.a, t.a_next, max_step), t.s_next)),
        )
    }
}
