//! Dense feed-forward networks with hand-derived reverse mode.
//!
//! Weights are stored row-major as `outputs x inputs`. All arithmetic is
//! `f64` and every reduction runs in a fixed order, so training is
//! bit-reproducible for a fixed seed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => libm::tanh(z),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(Activation::Linear),
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }
}

/// A multilayer perceptron: `hidden` activation on every layer but the last,
/// `output` activation on the last.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    layers: Vec<DenseLayer>,
    hidden: Activation,
    output: Activation,
}

/// Per-layer values of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `pre[l]` is the pre-activation of layer `l`.
    pre: Vec<Vec<f64>>,
    /// `post[0]` is the input, `post[l + 1]` the output of layer `l`.
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.post.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    pub fn post_activations(&self, layer: usize) -> &[f64] {
        &self.post[layer + 1]
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    fn same_shape(&self, net: &DenseNet) -> bool {
        self.weights.len() == net.layers.len()
            && self.biases.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(i, l)| {
                self.weights[i].len() == l.weights.len() && self.biases[i].len() == l.biases.len()
            })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        sum += x * y;
    }
    sum
}

impl DenseNet {
    /// Random initialization: uniform weights with He fan-in scaling for relu
    /// layers and Xavier scaling otherwise; zero biases.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        check_sizes(sizes)?;
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let act = if i + 1 == n { output } else { hidden };
                let limit = match act {
                    Activation::Relu => libm::sqrt(6.0 / fan_in as f64),
                    _ => libm::sqrt(6.0 / (fan_in + fan_out) as f64),
                };
                DenseLayer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.gen_range(-limit..limit))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            hidden,
            output,
        })
    }

    /// Builds a network from explicit parameters, layer by layer as
    /// `(weights, biases)`.
    pub fn from_parts(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        params: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        check_sizes(sizes)?;
        if params.len() != sizes.len() - 1 {
            return Err(Error::Shape(format!(
                "{} layers given for sizes {sizes:?}",
                params.len()
            )));
        }
        let layers = sizes
            .windows(2)
            .zip(params)
            .map(|(pair, (weights, biases))| {
                if weights.len() != pair[0] * pair[1] || biases.len() != pair[1] {
                    return Err(Error::Shape(format!(
                        "layer {}x{} got {} weights and {} biases",
                        pair[1],
                        pair[0],
                        weights.len(),
                        biases.len()
                    )));
                }
                Ok(DenseLayer {
                    inputs: pair[0],
                    outputs: pair[1],
                    weights,
                    biases,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            hidden,
            output,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(|p| p.is_finite())
    }

    pub fn same_architecture(&self, other: &DenseNet) -> bool {
        self.sizes == other.sizes && self.hidden == other.hidden && self.output == other.output
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Forward pass returning the output and a cache for the backward passes.
    ///
    /// Panics if `input` does not match the input width.
    pub fn forward(&self, input: &[f64]) -> ForwardCache {
        let mut cache = ForwardCache::default();
        self.forward_into(input, &mut cache);
        cache
    }

    /// [`forward`](Self::forward) reusing the buffers of `cache`.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) {
        assert_eq!(input.len(), self.input_len(), "input width mismatch");
        let n = self.layers.len();
        cache.pre.resize_with(n, Vec::new);
        cache.post.resize_with(n + 1, Vec::new);
        cache.post[0].clear();
        cache.post[0].extend_from_slice(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(l);
            let (head, tail) = cache.post.split_at_mut(l + 1);
            let x = &head[l];
            let pre = &mut cache.pre[l];
            let out = &mut tail[0];
            pre.clear();
            out.clear();
            for (row, b) in layer.weights.chunks_exact(layer.inputs).zip(&layer.biases) {
                let z = b + dot(row, x);
                pre.push(z);
                out.push(act.apply(z));
            }
        }
    }

    /// Convenience forward pass returning only the output.
    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = self.forward(input);
        cache.post.pop().unwrap_or_default()
    }

    /// Gradients of the parameters for an upstream gradient on the output.
    pub fn backward_params(&self, cache: &ForwardCache, output_grad: &[f64]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        self.backward(cache, output_grad, Some(&mut grads), false);
        grads
    }

    /// Gradient with respect to the input vector.
    pub fn backward_input(&self, cache: &ForwardCache, output_grad: &[f64]) -> Vec<f64> {
        self.backward(cache, output_grad, None, true)
            .unwrap_or_default()
    }

    /// Adds the parameter gradients of one sample into `grads`.
    pub fn accumulate_gradients(&self, cache: &ForwardCache, output_grad: &[f64], grads: &mut Gradients) {
        self.backward(cache, output_grad, Some(grads), false);
    }

    /// Reverse pass. Parameter gradients are added into `grads` when given;
    /// the input gradient is returned when `want_input` is set.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        mut grads: Option<&mut Gradients>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        assert_eq!(output_grad.len(), self.output_len(), "output gradient width mismatch");
        assert_eq!(cache.post.len(), self.layers.len() + 1, "cache does not match network");
        if let Some(g) = grads.as_deref() {
            assert!(g.same_shape(self), "gradient buffers do not match network");
        }

        let last = self.layers.len() - 1;
        let out_act = self.activation_of(last);
        let mut delta: Vec<f64> = output_grad
            .iter()
            .zip(&cache.post[last + 1])
            .map(|(g, y)| g * out_act.derivative(*y))
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = &cache.post[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = (&mut g.weights[l], &mut g.biases[l]);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, xi) in row.iter_mut().zip(x) {
                        *w += d * xi;
                    }
                }
            }
            if l == 0 && !want_input {
                return None;
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                if d == 0.0 {
                    continue;
                }
                for (u, w) in upstream.iter_mut().zip(row) {
                    *u += w * d;
                }
            }
            if l == 0 {
                return Some(upstream);
            }
            let act = self.activation_of(l - 1);
            for (u, y) in upstream.iter_mut().zip(x) {
                *u *= act.derivative(*y);
            }
            delta = upstream;
        }
        None
    }

    /// Polyak averaging: every parameter becomes `tau * source + (1 - tau) * self`.
    pub fn soft_update(&mut self, source: &DenseNet, tau: f64) -> Result<()> {
        if !self.same_architecture(source) {
            return Err(Error::Shape(format!(
                "soft update from {:?} into {:?}",
                source.sizes, self.sizes
            )));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Config(format!("tau {tau} outside [0, 1]")));
        }
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            for (tp, sp) in t.weights.iter_mut().zip(&s.weights) {
                *tp = tau * sp + (1.0 - tau) * *tp;
            }
            for (tp, sp) in t.biases.iter_mut().zip(&s.biases) {
                *tp = tau * sp + (1.0 - tau) * *tp;
            }
        }
        Ok(())
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::Config(format!(
            "layer sizes {sizes:?} need at least two entries, all positive"
        )));
    }
    Ok(())
}

/// Hyper-parameters of the adaptive-moment optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators of the optimizer for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Gradients,
    second: Gradients,
    steps: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        Self {
            config,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One bias-corrected update of `net` along `-grads`.
    ///
    /// Non-finite gradients are rejected before anything changes.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        if !grads.same_shape(net) || !self.first.same_shape(net) {
            return Err(Error::Shape("optimizer state does not match network".into()));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite {
                component: "gradient",
            });
        }
        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let groups = [
                (&mut layer.weights, &grads.weights[l], &mut self.first.weights[l], &mut self.second.weights[l]),
                (&mut layer.biases, &grads.biases[l], &mut self.first.biases[l], &mut self.second.biases[l]),
            ];
            for (params, g, m, v) in groups {
                for i in 0..params.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    params[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
                }
            }
        }
        Ok(())
    }
}
