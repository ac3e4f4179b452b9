//! Minimal dense-network substrate: forward pass, exact reverse-mode
//! gradients, an Adam optimizer, and Polyak soft updates.
//!
//! Networks are plain sequences of affine layers with elementwise
//! activations, stored as flat row-major arrays. There is no graph autodiff:
//! [`DenseNet::backward`] differentiates one network invocation, and callers
//! that need gradients through longer computations (the denoising chain in
//! the diffusion solver) chain these per-invocation gradients by hand.
//! Everything is `f64` so analytic gradients can be validated against central
//! finite differences at tight tolerances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{numeric, structure, Result};

/// Elementwise activation functions available to layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Silu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Silu => x * sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at a point, given both the pre-activation and the stored
    /// post-activation value.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Silu => {
                let s = sigmoid(pre);
                s * (1.0 + pre * (1.0 - s))
            }
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dot product over eight-wide chunks with independent accumulators, which
/// the compiler turns into SIMD lanes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % 8;
    let (a8, a_rest) = a.split_at(split);
    let (b8, b_rest) = b.split_at(split);
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a8.chunks_exact(8).zip(b8.chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut sum = acc.iter().sum::<f64>();
    for (x, y) in a_rest.iter().zip(b_rest) {
        sum += x * y;
    }
    sum
}

/// `out += c * x`, elementwise.
#[inline]
fn axpy(out: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &v) in out.iter_mut().zip(x) {
        *o += c * v;
    }
}

/// One dense layer: `y = activation(W x + b)` with a row-major `(out, in)`
/// weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) activation: Activation,
}

impl Layer {
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }
}

/// A feed-forward network of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    /// Builds a network over the given layer widths (`dims[0]` inputs through
    /// `dims.last()` outputs) with fan-in-scaled uniform initialization.
    /// Hidden layers use `hidden` activation, the last layer uses `output`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        Self::from_init(dims, hidden, output, &mut |in_dim| {
            let limit = 1.0 / (in_dim as f64).sqrt();
            rng.random_range(-limit..limit)
        })
    }

    /// Builds a network with every weight and bias zero. Used by tests that
    /// need a network computing the zero function.
    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        Self::from_init(dims, hidden, output, &mut |_| 0.0)
    }

    fn from_init(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        init: &mut dyn FnMut(usize) -> f64,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(structure("a network needs at least an input and an output width"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(structure("layer widths must be positive"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in 0..dims.len() - 1 {
            let (in_dim, out_dim) = (dims[w], dims[w + 1]);
            let activation = if w == dims.len() - 2 { output } else { hidden };
            let weights = (0..in_dim * out_dim).map(|_| init(in_dim)).collect();
            let biases = (0..out_dim).map(|_| init(in_dim)).collect();
            layers.push(Layer { weights, biases, in_dim, out_dim, activation });
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nets have at least one layer").out_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn same_architecture(&self, other: &DenseNet) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| {
                    a.in_dim == b.in_dim && a.out_dim == b.out_dim && a.activation == b.activation
                })
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(structure(format!(
                "expected input of length {}, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    /// Forward pass, allocating a fresh output vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = Trace::new(self);
        self.forward_trace(input, &mut trace)?;
        Ok(trace.output().to_vec())
    }

    /// Forward pass recording all pre- and post-activation values, for use by
    /// a following backward pass. Buffers in `trace` are reused across calls.
    pub fn forward_trace(&self, input: &[f64], trace: &mut Trace) -> Result<()> {
        self.check_input(input)?;
        trace.ensure_shape(self);
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.post.split_at_mut(l);
            let layer_input: &[f64] = if l == 0 { input } else { &done[l - 1] };
            let post = &mut rest[0];
            let pre = &mut trace.pre[l];
            for o in 0..layer.out_dim {
                pre[o] = dot(layer.row(o), layer_input) + layer.biases[o];
                post[o] = layer.activation.apply(pre[o]);
            }
        }
        Ok(())
    }

    /// Exact reverse-mode gradients of one invocation: accumulates parameter
    /// gradients into `grads` and returns the gradient w.r.t. the input.
    /// `upstream` is the loss gradient w.r.t. the network output.
    pub fn backward_from_trace(
        &self,
        input: &[f64],
        trace: &Trace,
        upstream: &[f64],
        grads: &mut NetGrads,
    ) -> Result<Vec<f64>> {
        self.check_input(input)?;
        if upstream.len() != self.output_dim() {
            return Err(structure(format!(
                "expected upstream of length {}, got {}",
                self.output_dim(),
                upstream.len()
            )));
        }
        grads.check_shape(self)?;
        let mut d: Vec<f64> = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let layer_input: &[f64] = if l == 0 { input } else { trace.post(l - 1) };
            // d(pre) = d(post) * act'(pre)
            let mut dpre = d;
            for o in 0..layer.out_dim {
                dpre[o] *= layer.activation.derivative(trace.pre(l)[o], trace.post(l)[o]);
            }
            let mut dinput = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let g = dpre[o];
                if g != 0.0 {
                    axpy(
                        &mut grads.weights[l][o * layer.in_dim..(o + 1) * layer.in_dim],
                        g,
                        layer_input,
                    );
                    axpy(&mut dinput, g, layer.row(o));
                }
                grads.biases[l][o] += g;
            }
            d = dinput;
        }
        Ok(d)
    }

    /// One-shot forward + backward. Returns fresh parameter gradients and the
    /// input gradient.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(NetGrads, Vec<f64>)> {
        let mut trace = Trace::new(self);
        self.forward_trace(input, &mut trace)?;
        let mut grads = NetGrads::zeros_like(self);
        let input_grad = self.backward_from_trace(input, &trace, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Gradient of `upstream . output` w.r.t. the input only, skipping the
    /// parameter gradients.
    pub fn input_gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        if upstream.len() != self.output_dim() {
            return Err(structure(format!(
                "expected upstream of length {}, got {}",
                self.output_dim(),
                upstream.len()
            )));
        }
        let mut trace = Trace::new(self);
        self.forward_trace(input, &mut trace)?;
        let mut d: Vec<f64> = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let mut dpre = d;
            for o in 0..layer.out_dim {
                dpre[o] *= layer.activation.derivative(trace.pre(l)[o], trace.post(l)[o]);
            }
            let mut dinput = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                if dpre[o] != 0.0 {
                    axpy(&mut dinput, dpre[o], layer.row(o));
                }
            }
            d = dinput;
        }
        Ok(d)
    }

    fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                f(w);
            }
            for b in &mut layer.biases {
                f(b);
            }
        }
    }

    pub(crate) fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|p| p.is_finite()))
    }
}

/// Recorded intermediate values of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(net: &DenseNet) -> Self {
        let mut trace = Self::default();
        trace.ensure_shape(net);
        trace
    }

    fn ensure_shape(&mut self, net: &DenseNet) {
        if self.pre.len() == net.layers.len()
            && self
                .pre
                .iter()
                .zip(&net.layers)
                .all(|(buf, layer)| buf.len() == layer.out_dim)
        {
            return;
        }
        self.pre = net.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        self.post = self.pre.clone();
    }

    fn pre(&self, l: usize) -> &[f64] {
        &self.pre[l]
    }

    fn post(&self, l: usize) -> &[f64] {
        &self.post[l]
    }

    /// Output of the traced forward pass.
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("trace is shaped before use")
    }
}

/// Parameter gradients mirroring a network's layer storage.
#[derive(Debug, Clone)]
pub struct NetGrads {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl NetGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn check_shape(&self, net: &DenseNet) -> Result<()> {
        let ok = self.weights.len() == net.layers.len()
            && self
                .weights
                .iter()
                .zip(&self.biases)
                .zip(&net.layers)
                .all(|((w, b), l)| w.len() == l.weights.len() && b.len() == l.biases.len());
        if ok {
            Ok(())
        } else {
            Err(structure("gradient shapes do not mirror the network"))
        }
    }

    pub fn reset(&mut self) {
        for block in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            block.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for block in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            block.iter_mut().for_each(|g| *g *= c);
        }
    }

    pub fn weight_grads(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn bias_grads(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|block| block.iter().all(|g| g.is_finite()))
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam optimizer state: flat first/second moment accumulators over all
/// parameters of one network (or one flat parameter vector), plus the step
/// count used for bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, param_count: usize) -> Self {
        Self {
            config,
            step: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn for_net(config: AdamConfig, net: &DenseNet) -> Self {
        Self::new(config, net.param_count())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one Adam update to a network from gradients of the same shape.
    /// Non-finite gradients abort with a numeric error before touching any
    /// parameter.
    pub fn step_net(&mut self, net: &mut DenseNet, grads: &NetGrads) -> Result<()> {
        grads.check_shape(net)?;
        if self.first_moment.len() != net.param_count() {
            return Err(structure("optimizer state sized for a different network"));
        }
        if !grads.is_finite() {
            return Err(numeric("non-finite gradient in optimizer step"));
        }
        self.step += 1;
        let (c1, c2) = self.bias_corrections();
        let mut idx = 0;
        let n_layers = net.layers.len();
        for l in 0..n_layers {
            let layer = &mut net.layers[l];
            for (p, &g) in layer.weights.iter_mut().zip(&grads.weights[l]) {
                self.update_one(p, g, c1, c2, &mut idx);
            }
            for (p, &g) in layer.biases.iter_mut().zip(&grads.biases[l]) {
                self.update_one(p, g, c1, c2, &mut idx);
            }
        }
        Ok(())
    }

    /// Applies one Adam update to a flat parameter vector.
    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(structure("parameter, gradient, and moment lengths disagree"));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(numeric("non-finite gradient in optimizer step"));
        }
        self.step += 1;
        let (c1, c2) = self.bias_corrections();
        let mut idx = 0;
        for (p, &g) in params.iter_mut().zip(grads) {
            self.update_one(p, g, c1, c2, &mut idx);
        }
        Ok(())
    }

    fn bias_corrections(&self) -> (f64, f64) {
        let t = self.step as i32;
        (
            1.0 - self.config.beta1.powi(t),
            1.0 - self.config.beta2.powi(t),
        )
    }

    #[inline]
    fn update_one(&mut self, param: &mut f64, grad: f64, c1: f64, c2: f64, idx: &mut usize) {
        let i = *idx;
        *idx += 1;
        let m = &mut self.first_moment[i];
        *m = self.config.beta1 * *m + (1.0 - self.config.beta1) * grad;
        let v = &mut self.second_moment[i];
        *v = self.config.beta2 * *v + (1.0 - self.config.beta2) * grad * grad;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *param -= self.config.learning_rate * m_hat / (v_hat.sqrt() + self.config.epsilon);
    }
}

/// Polyak soft update: every target parameter becomes
/// `eta * online + (1 - eta) * target`.
pub fn soft_update(target: &mut DenseNet, online: &DenseNet, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(structure(format!("mixing factor must lie in (0, 1], got {eta}")));
    }
    if !target.same_architecture(online) {
        return Err(structure("target and online network architectures differ"));
    }
    for (tl, ol) in target.layers.iter_mut().zip(&online.layers) {
        for (t, &o) in tl.weights.iter_mut().zip(&ol.weights) {
            *t = eta * o + (1.0 - eta) * *t;
        }
        for (t, &o) in tl.biases.iter_mut().zip(&ol.biases) {
            *t = eta * o + (1.0 - eta) * *t;
        }
    }
    Ok(())
}

/// Sets every parameter of `target` to the matching parameter of `online`.
pub fn hard_update(target: &mut DenseNet, online: &DenseNet) -> Result<()> {
    soft_update(target, online, 1.0)
}

/// Nudges the parameter at `flat_index` (canonical layer order, weights then
/// biases) by `delta`. Finite-difference checks are built on this.
pub fn perturb_param(net: &mut DenseNet, flat_index: usize, delta: f64) {
    let mut i = 0;
    net.for_each_param_mut(|p| {
        if i == flat_index {
            *p += delta;
        }
        i += 1;
    });
}

/// Gradients flattened in the same canonical order as [`perturb_param`].
pub fn flat_grad(grads: &NetGrads) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in grads.weights.iter().zip(&grads.biases) {
        out.extend_from_slice(w);
        out.extend_from_slice(b);
    }
    out
}

#[cfg(test)]
pub(crate) fn set_all_params(net: &mut DenseNet, value: f64) {
    net.for_each_param_mut(|p| *p = value);
}
