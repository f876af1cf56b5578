//! Multilayer perceptron fields with analytic backward passes.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{check_call, Params, VectorField};
use crate::error::{ensure_finite, Result};

/// Elementwise nonlinearity applied between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    /// No nonlinearity; turns the network into a product of matrices.
    /// Useful for tests where the exact Jacobian is known.
    Identity,
}

impl Activation {
    fn apply(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => y.tanh(),
            Activation::Relu => y.max(0.0),
            Activation::Identity => y,
        }
    }

    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected network `z -> W_L act(... act(W_1 z))` used as a vector
/// field, so input and output widths must agree. Weight matrices are stored
/// row-major in the flat parameter vector, one named view per layer
/// (`layer0` applied first).
///
/// The backward passes are hand-written reverse sweeps; no tape, no autodiff.
pub struct MlpField {
    sizes: Vec<usize>,
    activation: Activation,
    offsets: Vec<usize>,
    total: usize,
}

impl MlpField {
    pub fn new(layer_sizes: &[usize], activation: Activation) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least one weight matrix");
        assert!(
            layer_sizes.first() == layer_sizes.last(),
            "a vector field must map a state to a state of the same width"
        );
        assert!(layer_sizes.iter().all(|&s| s > 0));
        let mut offsets = Vec::with_capacity(layer_sizes.len());
        let mut total = 0;
        for l in 0..layer_sizes.len() - 1 {
            offsets.push(total);
            total += layer_sizes[l + 1] * layer_sizes[l];
        }
        Self {
            sizes: layer_sizes.to_vec(),
            activation,
            offsets,
            total,
        }
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    fn layer_weights<'a>(&self, theta: &'a [f64], l: usize) -> &'a [f64] {
        let rows = self.sizes[l + 1];
        let cols = self.sizes[l];
        &theta[self.offsets[l]..self.offsets[l] + rows * cols]
    }

    /// Weights drawn uniformly from `[-s, s]` with `s = 1 / sqrt(fan_in)`
    /// per layer; fully determined by the seed.
    pub fn random_params(&self, seed: u64) -> Params {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut values = vec![0.0; self.total];
        for l in 0..self.layer_count() {
            let rows = self.sizes[l + 1];
            let cols = self.sizes[l];
            let s = 1.0 / (cols as f64).sqrt();
            let start = self.offsets[l];
            for w in values[start..start + rows * cols].iter_mut() {
                *w = rng.gen_range(-s..=s);
            }
        }
        Params::new(values, self.param_views()).expect("layer views tile the weight vector")
    }

    /// Forward pass keeping per-layer inputs and pre-activations for the
    /// backward sweeps. `xs[l]` feeds layer `l`; `ys[l]` is its raw output.
    fn forward_trace(&self, z: &[f64], theta: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.layer_count();
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut x = z.to_vec();
        for l in 0..layers {
            let rows = self.sizes[l + 1];
            let cols = self.sizes[l];
            let w = self.layer_weights(theta, l);
            let mut y = vec![0.0; rows];
            for r in 0..rows {
                let row = &w[r * cols..(r + 1) * cols];
                y[r] = crate::vecops::dot(row, &x);
            }
            xs.push(x);
            let next = if l + 1 < layers {
                y.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                y.clone()
            };
            ys.push(y);
            x = next;
        }
        xs.push(x);
        (xs, ys)
    }
}

impl VectorField for MlpField {
    fn dim(&self) -> usize {
        self.sizes[0]
    }

    fn param_count(&self) -> usize {
        self.total
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        (0..self.layer_count())
            .map(|l| {
                let start = self.offsets[l];
                let len = self.sizes[l + 1] * self.sizes[l];
                (format!("layer{l}"), start..start + len)
            })
            .collect()
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim())?;
        let (xs, _) = self.forward_trace(z, theta);
        out.copy_from_slice(xs.last().unwrap());
        ensure_finite("mlp eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.dim())?;
        let (_, ys) = self.forward_trace(z, theta);
        let layers = self.layer_count();
        let mut gy = w.to_vec();
        for l in (0..layers).rev() {
            let rows = self.sizes[l + 1];
            let cols = self.sizes[l];
            let wl = self.layer_weights(theta, l);
            let mut gx = vec![0.0; cols];
            for r in 0..rows {
                let row = &wl[r * cols..(r + 1) * cols];
                crate::vecops::axpy(gy[r], row, &mut gx);
            }
            if l > 0 {
                gy = gx
                    .iter()
                    .zip(&ys[l - 1])
                    .map(|(g, &y)| g * self.activation.derivative(y))
                    .collect();
            } else {
                out.copy_from_slice(&gx);
            }
        }
        ensure_finite("mlp vjp_state", out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.param_count())?;
        let (xs, ys) = self.forward_trace(z, theta);
        let layers = self.layer_count();
        let mut gy = w.to_vec();
        for l in (0..layers).rev() {
            let rows = self.sizes[l + 1];
            let cols = self.sizes[l];
            let start = self.offsets[l];
            for r in 0..rows {
                let gr = gy[r];
                let dst = &mut out[start + r * cols..start + (r + 1) * cols];
                for (d, x) in dst.iter_mut().zip(&xs[l]) {
                    *d = gr * x;
                }
            }
            if l > 0 {
                let wl = self.layer_weights(theta, l);
                let mut gx = vec![0.0; cols];
                for r in 0..rows {
                    let row = &wl[r * cols..(r + 1) * cols];
                    crate::vecops::axpy(gy[r], row, &mut gx);
                }
                gy = gx
                    .iter()
                    .zip(&ys[l - 1])
                    .map(|(g, &y)| g * self.activation.derivative(y))
                    .collect();
            }
        }
        ensure_finite("mlp vjp_params", out)
    }
}
