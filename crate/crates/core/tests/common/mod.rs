//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use granule_core::neural::{loss_gradient, Mlp};

pub const FD_STEP: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|)` in the 2-norm.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

pub fn central_difference(params: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let x = p[k];
            p[k] = x + FD_STEP;
            let up = loss(&p);
            p[k] = x - FD_STEP;
            let down = loss(&p);
            p[k] = x;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Random small MLP with random parameters; returns its layer sizes and the
/// relative error between analytic and finite-difference loss gradients.
pub fn mlp_gradient_trial(trial: u64) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
    let n_in = rng.random_range(1..5);
    let mut sizes = vec![n_in];
    for _ in 0..rng.random_range(1..3) {
        sizes.push(rng.random_range(2..8));
    }
    let n_out = rng.random_range(1..4);
    sizes.push(n_out);
    let mut mlp = Mlp::new(&sizes, trial).unwrap();
    let random: Vec<f64> = (0..mlp.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
    mlp.set_params(&random).unwrap();
    let batch = 3;
    let inputs: Vec<Vec<f64>> = (0..batch).map(|_| (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let targets: Vec<Vec<f64>> = (0..batch).map(|_| (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (_, analytic) = loss_gradient(&mlp, &inputs, &targets).unwrap();
    let numeric = central_difference(&mlp.params(), |p| {
        let m = Mlp::from_params(&sizes, p).unwrap();
        loss_gradient(&m, &inputs, &targets).unwrap().0
    });
    (sizes, relative_error(&analytic, &numeric))
}

/// Every ordered pair `(sender, receiver)` within `radius`, by exhaustive search.
pub fn brute_edges(positions: &[f64], dim: usize, radius: f64) -> BTreeSet<(usize, usize)> {
    let n = positions.len() / dim;
    let mut out = BTreeSet::new();
    for r in 0..n {
        for s in 0..n {
            if r == s {
                continue;
            }
            let d2: f64 = (0..dim).map(|a| (positions[s * dim + a] - positions[r * dim + a]).powi(2)).sum();
            if d2.sqrt() <= radius {
                out.insert((s, r));
            }
        }
    }
    out
}

/// Image count by enumerating every step of every view window.
pub fn enumerate_images(config: &granule_core::InSituConfig) -> u64 {
    let mut n = 0;
    for cam in &config.cameras {
        let [a, b] = config.view_windows.get(&cam.name).copied().unwrap_or([0, config.total_steps]);
        n += (0..=config.total_steps)
            .filter(|s| *s >= a && *s <= b && s % config.cadence == 0)
            .count() as u64;
    }
    n
}
