use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Adaptive-moment hyperparameters with exponential learning-rate decay:
/// `lr(t) = final_lr + (lr - final_lr) * 0.1^(t / decay_steps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub final_lr: f64,
    pub decay_steps: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            final_lr: 1e-5,
            decay_steps: 5e4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    /// Constant learning rate, no decay.
    pub fn constant(lr: f64) -> Self {
        Self {
            lr,
            final_lr: lr,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
        }
    }

    /// Learning rate applied by the next call to [`OptimizerState::step`].
    pub fn learning_rate(&self) -> f64 {
        let c = &self.config;
        c.final_lr + (c.lr - c.final_lr) * 0.1f64.powf(self.step as f64 / c.decay_steps)
    }

    /// One bias-corrected adaptive-moment update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], gradient: &[f64]) -> Result<(), NeuralError> {
        let n = self.first_moment.len();
        for len in [params.len(), gradient.len()] {
            if len != n {
                return Err(NeuralError::Dimension { expected: n, got: len });
            }
        }
        if let Some(index) = gradient.iter().position(|g| !g.is_finite()) {
            return Err(NeuralError::NonFinite {
                what: "gradient",
                index,
            });
        }
        let lr = self.learning_rate();
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for i in 0..n {
            let g = gradient[i];
            let m = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g;
            let v = c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            params[i] -= lr * (m / bias1) / ((v / bias2).sqrt() + c.eps);
        }
        Ok(())
    }
}
