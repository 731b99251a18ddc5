//! Small synthetic trajectories for sanity-training the simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{Bounds, ParticleFrame, Provenance, RolloutResult};

pub const GRAVITY: f64 = 9.81;

fn frames_from_positions(positions: Vec<Vec<f64>>, dt: f64, dim: usize) -> Vec<ParticleFrame> {
    let first = positions[0].clone();
    let mut frames = Vec::with_capacity(positions.len());
    for (k, x) in positions.iter().enumerate() {
        let prev = if k == 0 { x } else { &positions[k - 1] };
        let velocities = x.iter().zip(prev).map(|(a, b)| (a - b) / dt).collect();
        let displacement = x
            .chunks(dim)
            .zip(first.chunks(dim))
            .map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        frames.push(ParticleFrame {
            step: k as u64,
            time: k as f64 * dt,
            dim,
            positions: x.clone(),
            velocities,
            displacement,
        });
    }
    frames
}

/// Isolated particles in ballistic flight under gravity along -y, sampled
/// analytically. Particles start on a jittered lattice `spacing` apart, far
/// from every wall of the unit box.
pub fn free_fall(num_particles: usize, num_frames: usize, dt: f64, spacing: f64, seed: u64) -> RolloutResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).expect("unit box");
    let per_row = ((0.6 / spacing).floor() as usize).max(1);
    let mut start = Vec::with_capacity(num_particles);
    for i in 0..num_particles {
        let (col, row) = (i % per_row, i / per_row);
        let x = 0.2 + spacing * col as f64 + rng.random_range(-0.1..0.1) * spacing;
        let y = 0.88 - spacing * row as f64 + rng.random_range(-0.1..0.1) * spacing;
        let vx = rng.random_range(-0.1..0.1);
        let vy = rng.random_range(-0.2..0.2);
        start.push((x, y, vx, vy));
    }
    let positions = (0..num_frames)
        .map(|k| {
            let t = k as f64 * dt;
            start
                .iter()
                .flat_map(|&(x, y, vx, vy)| [x + vx * t, y + vy * t - 0.5 * GRAVITY * t * t])
                .collect()
        })
        .collect();
    RolloutResult {
        frames: frames_from_positions(positions, dt, 2),
        dt,
        provenance: Provenance::GroundTruth,
        bounds,
    }
}

/// Contact parameters of [`bounce`].
#[derive(Debug, Clone, Copy)]
pub struct BounceParams {
    /// Contact distance to walls (pairs touch at twice this), meters.
    pub contact: f64,
    /// Penalty stiffness per unit mass, 1/s².
    pub stiffness: f64,
    pub substeps: usize,
}

impl Default for BounceParams {
    fn default() -> Self {
        Self {
            contact: 0.05,
            stiffness: 4.0e4,
            substeps: 50,
        }
    }
}

/// Two particles falling in the unit box, bouncing elastically off the walls
/// and each other through penalty springs. Integrated with fine substeps and
/// sampled every `dt`.
pub fn bounce(num_frames: usize, dt: f64, params: BounceParams, seed: u64) -> RolloutResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).expect("unit box");
    let mut x = vec![
        rng.random_range(0.15..0.45),
        rng.random_range(0.4..0.85),
        rng.random_range(0.55..0.85),
        rng.random_range(0.4..0.85),
    ];
    let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = dt / params.substeps as f64;
    let (c, k) = (params.contact, params.stiffness);
    let mut positions = Vec::with_capacity(num_frames);
    positions.push(x.clone());
    for _ in 1..num_frames {
        for _ in 0..params.substeps {
            let mut a = [0.0, -GRAVITY, 0.0, -GRAVITY];
            for p in 0..2 {
                for axis in 0..2 {
                    let q = x[2 * p + axis];
                    if q < c {
                        a[2 * p + axis] += k * (c - q);
                    }
                    if q > 1.0 - c {
                        a[2 * p + axis] -= k * (q - (1.0 - c));
                    }
                }
            }
            let (dx, dy) = (x[0] - x[2], x[1] - x[3]);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist < 2.0 * c && dist > 0.0 {
                let push = k * (2.0 * c - dist) / dist;
                a[0] += push * dx;
                a[1] += push * dy;
                a[2] -= push * dx;
                a[3] -= push * dy;
            }
            for i in 0..4 {
                v[i] += h * a[i];
                x[i] += h * v[i];
            }
        }
        positions.push(x.clone());
    }
    RolloutResult {
        frames: frames_from_positions(positions, dt, 2),
        dt,
        provenance: Provenance::GroundTruth,
        bounds,
    }
}
