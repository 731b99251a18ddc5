//! Particle snapshots and trajectories shared by every stage of the workflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("{field} has length {got}, expected {expected}")]
    Length {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("rollout is inconsistent: {0}")]
    Rollout(String),
}

/// Axis-aligned domain box in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FrameError> {
        let bounds = Self { lo, hi };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if self.lo.len() != self.hi.len() {
            return Err(FrameError::Bounds(format!(
                "lo has {} components, hi has {}",
                self.lo.len(),
                self.hi.len()
            )));
        }
        if !(2..=3).contains(&self.lo.len()) {
            return Err(FrameError::Dimension(self.lo.len()));
        }
        for (axis, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(FrameError::Bounds(format!(
                    "axis {axis}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Largest extent over all axes.
    pub fn scale(&self) -> f64 {
        (0..self.dim()).map(|a| self.extent(a)).fold(0.0, f64::max)
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(shift).map(|(a, s)| a + s).collect(),
            hi: self.hi.iter().zip(shift).map(|(a, s)| a + s).collect(),
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(p, (lo, hi))| *p >= *lo && *p <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Per-particle scalar fields available for color coding and range harvesting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarField {
    /// Magnitude of displacement from the initial configuration, meters.
    #[default]
    Displacement,
    /// Velocity magnitude, m/s.
    Speed,
}

impl ScalarField {
    pub fn name(self) -> &'static str {
        match self {
            ScalarField::Displacement => "displacement",
            ScalarField::Speed => "speed",
        }
    }
}

/// Positions, velocities and displacement magnitudes of all particles at one step.
///
/// Vectors are stored flat, `dim` components per particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFrame {
    pub step: u64,
    pub time: f64,
    pub dim: usize,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl ParticleFrame {
    pub fn new(
        step: u64,
        time: f64,
        dim: usize,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        displacement: Vec<f64>,
    ) -> Result<Self, FrameError> {
        let frame = Self {
            step,
            time,
            dim,
            positions,
            velocities,
            displacement,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// A frame at rest whose displacement is measured from `positions` itself.
    pub fn at_rest(step: u64, time: f64, dim: usize, positions: Vec<f64>) -> Result<Self, FrameError> {
        let n = positions.len() / dim.max(1);
        Self::new(step, time, dim, positions, vec![0.0; n * dim], vec![0.0; n])
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            step: 0,
            time: 0.0,
            dim,
            positions: Vec::new(),
            velocities: Vec::new(),
            displacement: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !(2..=3).contains(&self.dim) {
            return Err(FrameError::Dimension(self.dim));
        }
        if !self.positions.len().is_multiple_of(self.dim) {
            return Err(FrameError::Length {
                field: "positions",
                got: self.positions.len(),
                expected: self.positions.len() / self.dim * self.dim,
            });
        }
        let n = self.positions.len() / self.dim;
        if self.velocities.len() != n * self.dim {
            return Err(FrameError::Length {
                field: "velocities",
                got: self.velocities.len(),
                expected: n * self.dim,
            });
        }
        if self.displacement.len() != n {
            return Err(FrameError::Length {
                field: "displacement",
                got: self.displacement.len(),
                expected: n,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    /// Position lifted to 3-D; planar frames live in the z = 0 plane.
    pub fn position3(&self, i: usize) -> [f64; 3] {
        let p = self.position(i);
        [p[0], p[1], if self.dim == 3 { p[2] } else { 0.0 }]
    }

    pub fn scalar(&self, field: ScalarField, i: usize) -> f64 {
        match field {
            ScalarField::Displacement => self.displacement[i],
            ScalarField::Speed => self.velocity(i).iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn scalars(&self, field: ScalarField) -> Vec<f64> {
        (0..self.len()).map(|i| self.scalar(field, i)).collect()
    }

    /// Reorders particles so that particle `i` of the result is particle `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let d = self.dim;
        let mut out = Self::empty(d);
        out.step = self.step;
        out.time = self.time;
        for &i in order {
            out.positions.extend_from_slice(self.position(i));
            out.velocities.extend_from_slice(self.velocity(i));
            out.displacement.push(self.displacement[i]);
        }
        out
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Surrogate,
    GroundTruth,
}

/// An ordered sequence of frames sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub frames: Vec<ParticleFrame>,
    pub dt: f64,
    pub provenance: Provenance,
    pub bounds: Bounds,
}

impl RolloutResult {
    pub fn validate(&self) -> Result<(), FrameError> {
        self.bounds.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FrameError::Rollout(format!("dt must be positive, got {}", self.dt)));
        }
        let dim = self.bounds.dim();
        let count = self.frames.first().map(ParticleFrame::len);
        for (k, frame) in self.frames.iter().enumerate() {
            frame.validate()?;
            if frame.dim != dim {
                return Err(FrameError::Rollout(format!(
                    "frame {k} has dimension {}, bounds have {dim}",
                    frame.dim
                )));
            }
            if Some(frame.len()) != count {
                return Err(FrameError::Rollout(format!(
                    "frame {k} has {} particles, frame 0 has {}",
                    frame.len(),
                    count.unwrap_or(0)
                )));
            }
            if frame.positions.iter().any(|x| !x.is_finite()) {
                return Err(FrameError::Rollout(format!("frame {k} has non-finite positions")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn num_particles(&self) -> usize {
        self.frames.first().map_or(0, ParticleFrame::len)
    }

    /// Time spanned from the first to the last frame.
    pub fn duration(&self) -> f64 {
        self.frames.len().saturating_sub(1) as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_mismatched_lengths() {
        let err = ParticleFrame::new(0, 0.0, 2, vec![0.0; 4], vec![0.0; 2], vec![0.0; 2]).unwrap_err();
        assert!(matches!(err, FrameError::Length { field: "velocities", .. }));
    }

    #[test]
    fn bounds_reject_inverted_axis() {
        assert!(Bounds::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(Bounds::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn duration_counts_intervals() {
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let frame = ParticleFrame::at_rest(0, 0.0, 2, vec![0.5, 0.5]).unwrap();
        let rollout = RolloutResult {
            frames: vec![frame; 401],
            dt: 0.0025,
            provenance: Provenance::Surrogate,
            bounds,
        };
        assert!((rollout.duration() - 1.0).abs() < 1e-12);
    }
}
