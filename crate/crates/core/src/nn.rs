//! A small fully connected network with ReLU hidden layers and an Adam
//! optimizer, enough for the actor and the critic.
//!
//! Parameters live in one flat vector. Layer `l` stores its `out x in`
//! weight matrix row-major, followed by its `out` biases.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer values saved by [`Mlp::forward_cached`] for backpropagation.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `outputs[0]` is the input; `outputs[l + 1]` is the output of layer `l`
    /// after its activation.
    outputs: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights in `+-sqrt(6/(fan_in + fan_out))`, zero biases.
    pub fn new(sizes: &[usize], rng: &mut SimRng) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output layer");
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
            params.extend((0..fan_in * fan_out).map(|_| rng.uniform_in(-limit, limit)));
            params.extend(core::iter::repeat(0.0).take(fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(invalid("sizes", "need at least two non-empty layers"));
        }
        if params.len() != param_count(&sizes) {
            return Err(invalid(
                "params",
                alloc::format!("expected {} parameters, got {}", param_count(&sizes), params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("params", "all parameters must be finite"));
        }
        Ok(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, fan_in, fan_out)
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let o = offset;
            offset += w[0] * w[1] + w[1];
            (o, w[0], w[1])
        })
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).outputs.pop().unwrap()
    }

    pub fn forward_cached(&self, input: &[f64]) -> Activations {
        assert_eq!(input.len(), self.input_size());
        let n_layers = self.sizes.len() - 1;
        let mut outputs = Vec::with_capacity(n_layers + 1);
        outputs.push(input.to_vec());
        for (l, (off, fan_in, fan_out)) in self.layers().enumerate() {
            let x = &outputs[l];
            let w = &self.params[off..off + fan_in * fan_out];
            let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let hidden = l + 1 < n_layers;
            let y: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    if hidden {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            outputs.push(y);
        }
        Activations { outputs }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, acts: &Activations, grad_output: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        assert_eq!(grad_output.len(), self.output_size());
        let layers: Vec<_> = self.layers().collect();
        let mut delta = grad_output.to_vec();
        for (l, &(off, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let x = &acts.outputs[l];
            let (gw, rest) = grad[off..].split_at_mut(fan_in * fan_out);
            let gb = &mut rest[..fan_out];
            for o in 0..fan_out {
                let d = delta[o];
                gb[o] += d;
                if d != 0.0 {
                    for (g, xi) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + fan_in * fan_out];
            // Back through the ReLU of the previous layer: its output is x.
            let mut next = vec![0.0; fan_in];
            for (i, n) in next.iter_mut().enumerate() {
                if x[i] > 0.0 {
                    *n = (0..fan_out).map(|o| w[o * fan_in + i] * delta[o]).sum();
                }
            }
            delta = next;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| crate::math::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One Adam update. An identically zero gradient is a no-op: neither the
    /// parameters nor the moment estimates change. Returns whether a step
    /// was taken.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> bool {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        if grad.iter().all(|g| *g == 0.0) {
            return false;
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - libm::pow(beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(beta2, self.t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (sqrt(v_hat) + eps);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(seed: u64) -> Mlp {
        Mlp::new(&[3, 4, 4, 2], &mut SimRng::new(seed, 0))
    }

    #[test]
    fn parameter_layout() {
        let net = toy(1);
        assert_eq!(net.n_params(), 3 * 4 + 4 + 4 * 4 + 4 + 4 * 2 + 2);
        assert!(Mlp::from_parts(vec![3, 4], vec![0.0; 3]).is_err());
        assert!(Mlp::from_parts(vec![1, 1], vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let net = Mlp::new(&[5, 128, 128, 2], &mut SimRng::new(3, 0));
        let limit = sqrt(6.0 / 133.0);
        assert!(net.params()[..5 * 128].iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -1000.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = softmax(&[0.3, -0.2]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut net = toy(9);
        // Keep every hidden unit away from its ReLU kink.
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            if i % 5 == 0 {
                *p += 0.05;
            }
        }
        let x = [0.4, -0.7, 1.1];
        let upstream = [0.8, -1.3];
        let loss = |n: &Mlp| {
            let y = n.forward(&x);
            y[0] * upstream[0] + y[1] * upstream[1]
        };
        let acts = net.forward_cached(&x);
        let mut grad = vec![0.0; net.n_params()];
        net.backward(&acts, &upstream, &mut grad);
        let h = 1e-6;
        for i in 0..net.n_params() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn zero_gradient_is_a_noop() {
        let mut net = toy(4);
        let mut adam = Adam::new(net.n_params(), AdamConfig::default());
        let g: Vec<f64> = (0..net.n_params()).map(|i| (i as f64).sin()).collect();
        adam.step(net.params_mut(), &g);
        let before = (net.clone(), adam.clone());
        let zero = vec![0.0; net.n_params()];
        assert!(!adam.step(net.params_mut(), &zero));
        assert_eq!((net, adam), before);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = vec![1.0, -1.0];
        let mut adam = Adam::new(2, AdamConfig::default());
        adam.step(&mut p, &[0.5, -2.0]);
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (-1.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn hidden_activations_non_negative() {
        let net = toy(2);
        let acts = net.forward_cached(&[1.0, -2.0, 0.5]);
        for hidden in &acts.outputs[1..acts.outputs.len() - 1] {
            assert!(hidden.iter().all(|h| *h >= 0.0));
        }
    }
}
