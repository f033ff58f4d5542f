//! Minimal dense networks with exact gradients.
//!
//! Plain fully-connected layers over `f64`, hand-written backprop, and a
//! central-difference harness used by the test suites to certify every loss
//! gradient in the crate. No autodiff framework: the gradient of each loss is
//! derived by hand and checked numerically.

mod adam;
mod checkpoint;

pub use adam::Adam;
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp};

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Fully-connected network: hidden layers use one activation, the output
/// layer is linear. Weights are row-major `[out x in]` per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

/// Per-layer activations cached by [`Mlp::forward_trace`] for backprop.
pub struct Trace {
    /// `acts[0]` is the input; `acts[l + 1]` is layer `l`'s output.
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Clone, Debug)]
pub struct MlpGrads {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(p: &Mlp) -> MlpGrads {
        MlpGrads {
            w: p.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            b: p.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for layer in self.w.iter_mut().chain(self.b.iter_mut()) {
            for g in layer {
                *g *= c;
            }
        }
    }

    fn flat_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w
            .iter()
            .zip(&self.b)
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
            .copied()
    }
}

impl Mlp {
    /// Random network with uniform fan-in initialization: weights and biases
    /// of a layer with `fan_in` inputs are drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng>(sizes: &[usize], activation: Activation, rng: &mut R) -> Mlp {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "zero-width layer");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect(),
            );
            biases.push((0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect());
        }
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
            activation,
        }
    }

    pub(crate) fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Mlp {
        Mlp {
            sizes,
            weights,
            biases,
            activation,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut a = x.to_vec();
        for l in 0..self.layers() {
            a = self.layer_forward(l, &a);
        }
        a
    }

    /// Scalar-output convenience.
    pub fn forward_scalar(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.output_dim(), 1);
        self.forward(x)[0]
    }

    fn layer_forward(&self, l: usize, a: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = &self.weights[l];
        let last = l == self.layers() - 1;
        let mut out = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut z = self.biases[l][o];
            for (wi, ai) in row.iter().zip(a) {
                z += wi * ai;
            }
            out.push(if last { z } else { self.activation.apply(z) });
        }
        out
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut acts = Vec::with_capacity(self.layers() + 1);
        acts.push(x.to_vec());
        for l in 0..self.layers() {
            let next = self.layer_forward(l, acts.last().unwrap());
            acts.push(next);
        }
        Trace { acts }
    }

    /// Backpropagates `out_grad` (the loss gradient at the network output)
    /// through the traced forward pass. Parameter gradients accumulate into
    /// `grads`; the return value is the loss gradient at the input.
    pub fn backward(&self, trace: &Trace, out_grad: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        debug_assert_eq!(out_grad.len(), self.output_dim());
        let mut delta = out_grad.to_vec();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let a_prev = &trace.acts[l];
            let gw = &mut grads.w[l];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, ai) in row.iter_mut().zip(a_prev) {
                        *g += d * ai;
                    }
                }
                grads.b[l][o] += d;
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (p, wi) in prev.iter_mut().zip(row) {
                        *p += d * wi;
                    }
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(&trace.acts[l]) {
                    *p *= self.activation.derivative_from_output(*a);
                }
            }
            delta = prev;
        }
        delta
    }

    /// Loss gradient at the input only, skipping parameter gradients.
    pub fn input_grad(&self, trace: &Trace, out_grad: &[f64]) -> Vec<f64> {
        let mut delta = out_grad.to_vec();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.weights[l];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (p, wi) in prev.iter_mut().zip(row) {
                        *p += d * wi;
                    }
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(&trace.acts[l]) {
                    *p *= self.activation.derivative_from_output(*a);
                }
            }
            delta = prev;
        }
        delta
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Reads parameter `k` in canonical order (per layer: weights row-major,
    /// then biases).
    pub fn param(&self, mut k: usize) -> f64 {
        for l in 0..self.layers() {
            if k < self.weights[l].len() {
                return self.weights[l][k];
            }
            k -= self.weights[l].len();
            if k < self.biases[l].len() {
                return self.biases[l][k];
            }
            k -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut k: usize, value: f64) {
        for l in 0..self.layers() {
            if k < self.weights[l].len() {
                self.weights[l][k] = value;
                return;
            }
            k -= self.weights[l].len();
            if k < self.biases[l].len() {
                self.biases[l][k] = value;
                return;
            }
            k -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    /// In-place soft update `self <- tau * source + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) {
        debug_assert_eq!(self.sizes, source.sizes);
        for (dst, src) in self
            .weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .zip(source.weights.iter().chain(source.biases.iter()))
        {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
    }

    /// All parameters in layer order (weights then biases per layer), handy
    /// for snapshot comparisons in tests.
    pub fn params_flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
            .copied()
            .collect()
    }
}

/// Numerically stable `ln(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable `ln(sigmoid(x)) = -softplus(-x)`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Central finite-difference gradient of `loss` with respect to every
/// parameter of `p`, using step `h`.
pub fn finite_difference_grads<F>(p: &Mlp, loss: F, h: f64) -> MlpGrads
where
    F: Fn(&Mlp) -> f64,
{
    let mut numeric = MlpGrads::zeros_like(p);
    let mut probe = p.clone();
    let mut flat = Vec::with_capacity(p.param_count());
    for k in 0..p.param_count() {
        let orig = p.param(k);
        probe.set_param(k, orig + h);
        let up = loss(&probe);
        probe.set_param(k, orig - h);
        let down = loss(&probe);
        probe.set_param(k, orig);
        flat.push((up - down) / (2.0 * h));
    }
    let mut idx = 0;
    for layer in numeric.w.iter_mut().zip(numeric.b.iter_mut()) {
        for g in layer.0.iter_mut() {
            *g = flat[idx];
            idx += 1;
        }
        for g in layer.1.iter_mut() {
            *g = flat[idx];
            idx += 1;
        }
    }
    numeric
}

/// Worst relative disagreement between two gradient sets, with coordinates
/// compared as `|a - n| / max(|a|, |n|, 1e-4)`. The floor keeps near-zero
/// coordinates from amplifying central-difference cancellation noise, which
/// reaches `~1e-9` once loss magnitudes hit double digits.
pub fn max_rel_error(analytic: &MlpGrads, numeric: &MlpGrads) -> f64 {
    analytic
        .flat_iter()
        .zip(numeric.flat_iter())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-4))
        .fold(0.0, f64::max)
}
