use std::collections::VecDeque;

use super::integrate::euler_update;
use super::model::GnsModel;
use super::GnsError;
use crate::frame::{Bounds, ParticleFrame, Provenance, RolloutResult};

/// A particle further outside the domain than this fraction of the domain
/// extent aborts the rollout.
pub const DIVERGENCE_MARGIN: f64 = 0.1;

/// Autoregressive prediction: predict accelerations, integrate one unit step,
/// clamp to the domain, slide the window, repeat.
///
/// Frame 0 is the last frame of `initial_window`; frame `k` lies `k *
/// dt_rollout` seconds later. Displacements are measured from the first frame
/// of the window.
pub fn rollout(
    model: &GnsModel,
    initial_window: &[Vec<f64>],
    bounds: &Bounds,
    num_steps: usize,
    dt_rollout: f64,
) -> Result<RolloutResult, GnsError> {
    if num_steps == 0 {
        return Err(GnsError::Config("rollout needs at least one step".into()));
    }
    if !(dt_rollout > 0.0) {
        return Err(GnsError::Config(format!("dt_rollout must be positive, got {dt_rollout}")));
    }
    model.stats()?;
    let dim = model.config.dim;
    let reference = initial_window
        .first()
        .ok_or(GnsError::WindowLength {
            expected: model.config.context_len + 1,
            got: 0,
        })?
        .clone();
    let mut window: VecDeque<Vec<f64>> = initial_window.iter().cloned().collect();
    let c = model.config.context_len;
    let to_frame = |k: usize, current: &[f64], previous: &[f64]| {
        let velocities = current.iter().zip(previous).map(|(x, p)| (x - p) / dt_rollout).collect();
        let displacement = current
            .chunks(dim)
            .zip(reference.chunks(dim))
            .map(|(x, r)| x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        ParticleFrame {
            step: k as u64,
            time: k as f64 * dt_rollout,
            dim,
            positions: current.to_vec(),
            velocities,
            displacement,
        }
    };
    let mut frames = Vec::with_capacity(num_steps + 1);
    frames.push(to_frame(0, &window[c], &window[c - 1]));

    for step in 1..=num_steps {
        let contiguous: Vec<Vec<f64>> = window.make_contiguous().to_vec();
        let acc = model.predict_accelerations(&contiguous, bounds)?;
        let current = &contiguous[c];
        let velocity: Vec<f64> = current.iter().zip(&contiguous[c - 1]).map(|(x, p)| x - p).collect();
        let (mut next, _) = euler_update(current, &velocity, &acc, 1.0);
        for (k, x) in next.iter_mut().enumerate() {
            let a = k % dim;
            let margin = DIVERGENCE_MARGIN * bounds.extent(a);
            if !x.is_finite() || *x < bounds.lo[a] - margin || *x > bounds.hi[a] + margin {
                return Err(GnsError::Divergence { step, particle: k / dim });
            }
            *x = x.clamp(bounds.lo[a], bounds.hi[a]);
        }
        frames.push(to_frame(step, &next, current));
        window.pop_front();
        window.push_back(next);
    }

    Ok(RolloutResult {
        frames,
        dt: dt_rollout,
        provenance: Provenance::Surrogate,
        bounds: bounds.clone(),
    })
}
