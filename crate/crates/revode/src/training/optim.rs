//! First-order optimizers with exponential learning-rate decay.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adamw,
}

/// Learning rate at the given epoch: `lr0 * decay^epoch`.
pub fn decayed_lr(lr0: f64, decay: f64, epoch: usize) -> f64 {
    lr0 * decay.powi(epoch as i32)
}

/// Plain gradient descent: `theta -= lr * grad`.
pub fn sgd_step(theta: &mut [f64], grad: &[f64], lr: f64) {
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= lr * g;
    }
}

/// Adam with decoupled weight decay (betas 0.9/0.999, eps 1e-8, decay 0.01).
#[derive(Debug, Clone)]
pub struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
}

impl AdamW {
    pub fn new(params: usize) -> Self {
        Self {
            m: vec![0.0; params],
            v: vec![0.0; params],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(theta.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..theta.len() {
            theta[i] -= lr * self.weight_decay * theta[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_on_a_parabola_takes_the_textbook_step() {
        // f(t) = t^2 at t = 1 with lr 0.1 lands on 0.8
        let mut theta = vec![1.0];
        sgd_step(&mut theta, &[2.0], 0.1);
        assert!((theta[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_sgd_parameters_alone() {
        let mut theta = vec![3.0, -1.5];
        sgd_step(&mut theta, &[0.0, 0.0], 0.5);
        assert_eq!(theta, vec![3.0, -1.5]);
    }

    #[test]
    fn adamw_first_step_magnitude_is_about_lr() {
        let mut opt = AdamW::new(1);
        let mut theta = vec![0.0];
        opt.step(&mut theta, &[1.0], 0.01);
        // bias-corrected ratio is g/|g| on the first step
        assert!((theta[0] + 0.01).abs() < 1e-6, "got {}", theta[0]);
    }

    #[test]
    fn adamw_decay_pulls_parameters_toward_zero() {
        let mut opt = AdamW::new(1);
        let mut theta = vec![10.0];
        opt.step(&mut theta, &[0.0], 0.1);
        // zero gradient: only the decoupled decay acts
        assert!((theta[0] - 10.0 * (1.0 - 0.1 * 0.01)).abs() < 1e-12);
    }

    #[test]
    fn learning_rate_decays_exponentially() {
        assert_eq!(decayed_lr(0.1, 0.95, 0), 0.1);
        assert!((decayed_lr(0.1, 0.95, 2) - 0.1 * 0.95 * 0.95).abs() < 1e-15);
        assert!(decayed_lr(0.1, 1.0, 50) == 0.1);
    }
}
