//! Minimal one-hidden-layer perceptron with hand-written backprop.
//!
//! hidden = relu(W1 x + b1), out = W2 hidden + b2. Plain gradient steps
//! only; no momentum or adaptive rates. Weights are initialized uniformly
//! in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a seeded RNG, biases at
//! zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::AgentError;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    /// Hidden weights, row-major `[hidden][input]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Output weights, row-major `[output][hidden]`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Activations cached by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Parameter gradients, same shapes as the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn zeros(net: &Mlp) -> Gradients {
        Gradients {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
        }
    }

    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .map(|g| g * g)
            .sum();
        sq.sqrt()
    }

    /// Rescales the gradients so their global norm does not exceed
    /// `max_norm`. A no-op for healthy magnitudes; it caps the step size
    /// when saturated-regime TD errors would otherwise blow up the plain
    /// gradient update.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm <= max_norm || norm == 0.0 {
            return;
        }
        let scale = max_norm / norm;
        for g in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *g *= scale;
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        for (a, b) in self.b2.iter_mut().zip(&other.b2) {
            *a += b;
        }
    }
}

impl Mlp {
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Mlp {
        let lim1 = 1.0 / (input_dim as f64).sqrt();
        let lim2 = 1.0 / (hidden_dim as f64).sqrt();
        let w1 = (0..hidden_dim * input_dim)
            .map(|_| rng.gen_range(-lim1..=lim1))
            .collect();
        let w2 = (0..output_dim * hidden_dim)
            .map(|_| rng.gen_range(-lim2..=lim2))
            .collect();
        Mlp {
            input_dim,
            hidden_dim,
            output_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; output_dim],
        }
    }

    /// Forward pass. Rejects non-finite input.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache, AgentError> {
        assert_eq!(x.len(), self.input_dim);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(AgentError::NonFiniteInput);
        }
        let mut hidden_pre = vec![0.0; self.hidden_dim];
        for (h, pre) in hidden_pre.iter_mut().enumerate() {
            let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
            let mut sum = self.b1[h];
            for (w, xi) in row.iter().zip(x) {
                sum += w * xi;
            }
            *pre = sum;
        }
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();
        let mut output = vec![0.0; self.output_dim];
        for (o, out) in output.iter_mut().enumerate() {
            let row = &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            let mut sum = self.b2[o];
            for (w, hi) in row.iter().zip(&hidden) {
                sum += w * hi;
            }
            *out = sum;
        }
        Ok(ForwardCache {
            input: x.to_vec(),
            hidden_pre,
            hidden,
            output,
        })
    }

    /// Analytic backprop: given `upstream = dL/d(output)`, returns dL/d
    /// for every parameter. The ReLU subgradient at exactly zero is taken
    /// as zero.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Gradients {
        assert_eq!(upstream.len(), self.output_dim);
        let mut g = Gradients::zeros(self);

        for (o, &up) in upstream.iter().enumerate() {
            g.b2[o] = up;
            for (h, &hid) in cache.hidden.iter().enumerate() {
                g.w2[o * self.hidden_dim + h] = up * hid;
            }
        }

        for h in 0..self.hidden_dim {
            let mut d_hidden = 0.0;
            for (o, &up) in upstream.iter().enumerate() {
                d_hidden += up * self.w2[o * self.hidden_dim + h];
            }
            let d_pre = if cache.hidden_pre[h] > 0.0 {
                d_hidden
            } else {
                0.0
            };
            g.b1[h] = d_pre;
            for (i, &xi) in cache.input.iter().enumerate() {
                g.w1[h * self.input_dim + i] = d_pre * xi;
            }
        }
        g
    }

    /// Adds `scale * gradients` to every parameter (negative scale for
    /// descent, positive for ascent).
    pub fn apply(&mut self, g: &Gradients, scale: f64) {
        for (w, d) in self.w1.iter_mut().zip(&g.w1) {
            *w += scale * d;
        }
        for (b, d) in self.b1.iter_mut().zip(&g.b1) {
            *b += scale * d;
        }
        for (w, d) in self.w2.iter_mut().zip(&g.w2) {
            *w += scale * d;
        }
        for (b, d) in self.b2.iter_mut().zip(&g.b2) {
            *b += scale * d;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite())
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Flattens parameters in w1, b1, w2, b2 order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out
    }

    /// Rebuilds a network from flattened parameters.
    pub fn from_flat(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        flat: &[f64],
    ) -> Option<Mlp> {
        let expected = hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
        if flat.len() != expected {
            return None;
        }
        let (w1, rest) = flat.split_at(hidden_dim * input_dim);
        let (b1, rest) = rest.split_at(hidden_dim);
        let (w2, b2) = rest.split_at(output_dim * hidden_dim);
        Some(Mlp {
            input_dim,
            hidden_dim,
            output_dim,
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: b2.to_vec(),
        })
    }
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};

    #[test]
    fn zero_net_outputs_zero_and_uniform_softmax() {
        let mut rng = stream(1, StreamPurpose::Init, 0);
        let mut net = Mlp::new(11, 32, 8, &mut rng);
        net.w1.iter_mut().for_each(|w| *w = 0.0);
        net.w2.iter_mut().for_each(|w| *w = 0.0);
        let cache = net.forward(&[0.5; 11]).unwrap();
        assert!(cache.output.iter().all(|&o| o == 0.0));
        let pi = softmax(&cache.output);
        assert!(pi.iter().all(|&p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn toy_net_hand_values() {
        // 2-2-1 net with identity hidden weights: x = [0.5, -0.25] gives
        // hidden = [0.5, 0] (second unit clipped) and out = 0.5.
        let net = Mlp {
            input_dim: 2,
            hidden_dim: 2,
            output_dim: 1,
            w1: vec![1.0, 0.0, 0.0, 1.0],
            b1: vec![0.0, 0.0],
            w2: vec![1.0, 1.0],
            b2: vec![0.0],
        };
        let cache = net.forward(&[0.5, -0.25]).unwrap();
        assert_eq!(cache.hidden, vec![0.5, 0.0]);
        assert_eq!(cache.output, vec![0.5]);

        let g = net.backward(&cache, &[1.0]);
        assert_eq!(g.w2, vec![0.5, 0.0]);
        assert_eq!(g.b2, vec![1.0]);
        // Second hidden unit is inactive, so its row gets zero gradient.
        assert_eq!(g.w1, vec![0.5, -0.25, 0.0, 0.0]);
        assert_eq!(g.b1, vec![1.0, 0.0]);
    }

    #[test]
    fn linear_region_gradient_is_outer_product() {
        // All-positive pre-activations keep ReLU linear; then
        // dL/dW1[h][i] = (upstream . w2[., h]) * x[i].
        let net = Mlp {
            input_dim: 2,
            hidden_dim: 2,
            output_dim: 2,
            w1: vec![0.3, 0.1, 0.2, 0.4],
            b1: vec![1.0, 1.0],
            w2: vec![0.5, 0.6, 0.7, 0.8],
            b2: vec![0.0, 0.0],
        };
        let x = [0.9, 0.4];
        let upstream = [2.0, -1.0];
        let cache = net.forward(&x).unwrap();
        assert!(cache.hidden_pre.iter().all(|&p| p > 0.0));
        let g = net.backward(&cache, &upstream);
        for h in 0..2 {
            let d = upstream[0] * net.w2[h] + upstream[1] * net.w2[2 + h];
            for (i, &xi) in x.iter().enumerate() {
                assert!((g.w1[h * 2 + i] - d * xi).abs() < 1e-15);
            }
            assert!((g.b1[h] - d).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let mut rng = stream(3, StreamPurpose::Init, 0);
        let net = Mlp::new(5, 7, 3, &mut rng);
        let cache = net.forward(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let g = net.backward(&cache, &[0.0, 0.0, 0.0]);
        assert!(g.w1.iter().all(|&v| v == 0.0));
        assert!(g.w2.iter().all(|&v| v == 0.0));
        assert!(g.b1.iter().all(|&v| v == 0.0));
        assert!(g.b2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut rng = stream(4, StreamPurpose::Init, 0);
        let net = Mlp::new(3, 4, 2, &mut rng);
        assert!(matches!(
            net.forward(&[0.0, f64::NAN, 1.0]),
            Err(AgentError::NonFiniteInput)
        ));
        assert!(matches!(
            net.forward(&[f64::INFINITY, 0.0, 1.0]),
            Err(AgentError::NonFiniteInput)
        ));
    }

    #[test]
    fn softmax_sums_to_one_for_random_nets() {
        let mut rng = stream(5, StreamPurpose::Init, 0);
        for _ in 0..50 {
            let net = Mlp::new(11, 16, 8, &mut rng);
            let x: Vec<f64> = (0..11).map(|_| rng.gen_range(0.0..1.0)).collect();
            let pi = softmax(&net.forward(&x).unwrap().output);
            let sum: f64 = pi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(pi.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn flat_roundtrip() {
        let mut rng = stream(6, StreamPurpose::Init, 0);
        let net = Mlp::new(11, 32, 8, &mut rng);
        let flat = net.params_flat();
        let back = Mlp::from_flat(11, 32, 8, &flat).unwrap();
        assert_eq!(net, back);
        assert!(Mlp::from_flat(11, 31, 8, &flat).is_none());
    }
}
