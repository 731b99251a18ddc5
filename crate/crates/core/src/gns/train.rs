use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::features::{check_window, encode_features, FeatureStats, NormStats};
use super::integrate::inverse_euler_acceleration;
use super::model::GnsModel;
use super::GnsError;
use crate::frame::{Bounds, RolloutResult};
use crate::neural::{mse, AdamConfig, OptimizerState};

const MIN_STD: f64 = 1e-12;

/// `context_len + 1` consecutive position frames and the frame that follows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub window: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub bounds: Bounds,
}

/// Every one-step training sample a trajectory provides.
pub fn windows_from(trajectory: &RolloutResult, context_len: usize) -> Vec<TrainingSample> {
    let frames = &trajectory.frames;
    if frames.len() < context_len + 2 {
        return Vec::new();
    }
    (context_len..frames.len() - 1)
        .map(|t| TrainingSample {
            window: frames[t - context_len..=t].iter().map(|f| f.positions.clone()).collect(),
            target: frames[t + 1].positions.clone(),
            bounds: trajectory.bounds.clone(),
        })
        .collect()
}

/// Per-axis velocity and acceleration statistics over all trajectories, in
/// unit-timestep coordinates. The noise scale is folded into both standard
/// deviations so normalized noisy targets stay O(1).
pub fn compute_stats(trajectories: &[RolloutResult], noise_std: f64) -> FeatureStats {
    let dim = trajectories.first().map_or(2, RolloutResult::dim);
    let mut vel = Moments::new(dim);
    let mut acc = Moments::new(dim);
    for traj in trajectories {
        for w in traj.frames.windows(2) {
            for (k, (b, a)) in w[1].positions.iter().zip(&w[0].positions).enumerate() {
                vel.push(k % dim, b - a);
            }
        }
        for w in traj.frames.windows(3) {
            let a = inverse_euler_acceleration(&w[0].positions, &w[1].positions, &w[2].positions, 1.0);
            for (k, x) in a.into_iter().enumerate() {
                acc.push(k % dim, x);
            }
        }
    }
    FeatureStats {
        velocity: vel.finish(noise_std),
        acceleration: acc.finish(noise_std),
    }
}

struct Moments {
    count: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: vec![0.0; dim],
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    fn push(&mut self, axis: usize, x: f64) {
        self.count[axis] += 1.0;
        self.sum[axis] += x;
        self.sum_sq[axis] += x * x;
    }

    fn finish(&self, noise_std: f64) -> NormStats {
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for a in 0..self.count.len() {
            let n = self.count[a].max(1.0);
            let m = self.sum[a] / n;
            let var = (self.sum_sq[a] / n - m * m).max(0.0);
            mean.push(m);
            std.push((var + noise_std * noise_std).sqrt().max(MIN_STD));
        }
        NormStats { mean, std }
    }
}

fn normalized_target(model: &GnsModel, window: &[Vec<f64>], target: &[f64]) -> Result<Array2<f64>, GnsError> {
    let stats = model.stats()?;
    let c = model.config.context_len;
    let dim = model.config.dim;
    let acc = inverse_euler_acceleration(&window[c - 1], &window[c], target, 1.0);
    let n = acc.len() / dim;
    Ok(Array2::from_shape_fn((n, dim), |(i, a)| {
        (acc[i * dim + a] - stats.acceleration.mean[a]) / stats.acceleration.std[a]
    }))
}

fn check_sample(model: &GnsModel, sample: &TrainingSample) -> Result<(), GnsError> {
    let n = check_window(&sample.window, &model.config)?;
    if sample.target.len() != n * model.config.dim {
        return Err(GnsError::Batch(format!(
            "target has {} values, window has {} particles",
            sample.target.len(),
            n
        )));
    }
    Ok(())
}

/// Mean one-step loss on normalized accelerations, without input noise.
pub fn evaluate_loss(model: &GnsModel, samples: &[TrainingSample]) -> Result<f64, GnsError> {
    if samples.is_empty() {
        return Err(GnsError::Batch("no samples".into()));
    }
    let stats = model.stats()?;
    let mut total = 0.0;
    for sample in samples {
        check_sample(model, sample)?;
        let graph = encode_features(&sample.window, &sample.bounds, &model.config, stats)?;
        let prediction = model.forward(&graph)?;
        let target = normalized_target(model, &sample.window, &sample.target)?;
        total += mse(prediction.view(), target.view());
    }
    Ok(total / samples.len() as f64)
}

/// Single-writer training loop state: the model, its optimizer and the noise RNG.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: GnsModel,
    pub optimizer: OptimizerState,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: GnsModel, adam: AdamConfig, seed: u64) -> Result<Self, GnsError> {
        model.stats()?;
        model.validate()?;
        let optimizer = OptimizerState::new(model.num_params(), adam);
        Ok(Self {
            model,
            optimizer,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Continues from a saved optimizer state.
    pub fn resume(model: GnsModel, optimizer: OptimizerState, seed: u64) -> Result<Self, GnsError> {
        if optimizer.first_moment.len() != model.num_params() {
            return Err(GnsError::Config("optimizer state does not match the model".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(optimizer.step);
        Ok(Self { model, optimizer, rng })
    }

    pub fn step(&self) -> u64 {
        self.optimizer.step
    }

    /// Injects random-walk noise into the input history, computes the loss on
    /// normalized accelerations derived by inverse Euler and applies one
    /// optimizer step. Returns the batch loss before the update.
    pub fn train_step(&mut self, batch: &[TrainingSample]) -> Result<f64, GnsError> {
        if batch.is_empty() {
            return Err(GnsError::Batch("empty batch".into()));
        }
        let stats = self.model.stats()?.clone();
        let config = self.model.config.clone();
        let mut grad_total = vec![0.0; self.model.num_params()];
        let mut loss_total = 0.0;
        for sample in batch {
            check_sample(&self.model, sample)?;
            let (window, target) = self.noisy(sample);
            let graph = encode_features(&window, &sample.bounds, &config, &stats)?;
            let (prediction, tape) = self.model.forward_taped(&graph)?;
            let target = normalized_target(&self.model, &window, &target)?;
            loss_total += mse(prediction.view(), target.view());
            let scale = 2.0 / (prediction.len().max(1) as f64 * batch.len() as f64);
            let d_out = (&prediction - &target) * scale;
            let grad = self.model.backward(&graph, &tape, d_out).to_flat();
            for (acc, g) in grad_total.iter_mut().zip(grad) {
                *acc += g;
            }
        }
        let loss = loss_total / batch.len() as f64;
        if !loss.is_finite() {
            return Err(GnsError::NonFiniteLoss(self.optimizer.step));
        }
        let mut params = self.model.params();
        self.optimizer.step(&mut params, &grad_total)?;
        self.model.set_params(&params)?;
        Ok(loss)
    }

    fn noisy(&mut self, sample: &TrainingSample) -> (Vec<Vec<f64>>, Vec<f64>) {
        let noise_std = self.model.config.noise_std;
        if noise_std == 0.0 {
            return (sample.window.clone(), sample.target.clone());
        }
        let c = self.model.config.context_len;
        let step_std = noise_std / (c as f64).sqrt();
        let normal = Normal::new(0.0, step_std).expect("finite std");
        let len = sample.target.len();
        let mut window = sample.window.clone();
        // Velocity noise is a random walk over the history; position noise is its running sum.
        let mut velocity_noise = vec![0.0; len];
        let mut position_noise = vec![0.0; len];
        for frame in window.iter_mut().skip(1).take(c) {
            for j in 0..len {
                velocity_noise[j] += normal.sample(&mut self.rng);
                position_noise[j] += velocity_noise[j];
                frame[j] += position_noise[j];
            }
        }
        let target = sample.target.iter().zip(&position_noise).map(|(t, n)| t + n).collect();
        (window, target)
    }
}
