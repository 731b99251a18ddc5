//! Metadata harvested from a cheap surrogate rollout to configure the
//! expensive in situ run: color range, collapse phases, per-view windows.

mod config;

pub use config::{steps_in_window, FieldError, InSituConfig, ValidationErrors, SCHEMA_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{RolloutResult, ScalarField};
use crate::render::{Camera, Colormap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarvestError {
    #[error("rollout has no frames")]
    EmptyRollout,
    #[error("invalid harvest parameter: {0}")]
    Parameter(String),
    #[error("at least one camera is required")]
    NoCameras,
}

/// Tunables of the harvesting step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestParams {
    /// Displacement above which a particle counts as mobilized, meters.
    pub epsilon: f64,
    /// Mobilized fraction that ends the initiation phase.
    pub threshold: f64,
    /// Ground-truth steps per rollout frame.
    pub dt_ratio: u64,
    pub cadence: u64,
    pub particle_radius: f64,
    pub colormap: String,
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for HarvestParams {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            threshold: 0.2,
            dt_ratio: 25,
            cadence: 20,
            particle_radius: 0.005,
            colormap: "viridis".into(),
            image_width: 320,
            image_height: 240,
        }
    }
}

/// Global min/max of a scalar over all frames and particles.
pub fn scalar_range(rollout: &RolloutResult, field: ScalarField) -> Result<(f64, f64), HarvestError> {
    if rollout.frames.is_empty() {
        return Err(HarvestError::EmptyRollout);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in &rollout.frames {
        for i in 0..f.len() {
            let v = f.scalar(field, i);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        // frames without particles
        return Ok((0.0, 0.0));
    }
    Ok((lo, hi))
}

/// Fraction of particles whose displacement exceeds `epsilon`, per frame.
pub fn mobilized_fraction(rollout: &RolloutResult, epsilon: f64) -> Vec<f64> {
    rollout
        .frames
        .iter()
        .map(|f| {
            if f.is_empty() {
                0.0
            } else {
                f.displacement.iter().filter(|&&d| d > epsilon).count() as f64 / f.len() as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    /// First rollout frame whose mobilized fraction reaches the threshold.
    pub initiation_end_frame: usize,
    /// Same, in ground-truth steps.
    pub initiation_end_step: u64,
    /// Ground-truth steps spanned by the rollout.
    pub total_steps: u64,
    /// False when the threshold is never reached; the initiation phase then
    /// covers the whole rollout.
    pub detected: bool,
    pub mobilized_fraction: Vec<f64>,
}

pub fn detect_phases(
    rollout: &RolloutResult,
    epsilon: f64,
    threshold: f64,
    dt_ratio: u64,
) -> Result<Phases, HarvestError> {
    if rollout.frames.is_empty() {
        return Err(HarvestError::EmptyRollout);
    }
    if !(epsilon > 0.0) {
        return Err(HarvestError::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(HarvestError::Parameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    if dt_ratio == 0 {
        return Err(HarvestError::Parameter("dt_ratio must be at least 1".into()));
    }
    let fraction = mobilized_fraction(rollout, epsilon);
    let last = rollout.frames.len() - 1;
    let found = fraction.iter().position(|&f| f >= threshold);
    let frame = found.unwrap_or(last);
    Ok(Phases {
        initiation_end_frame: frame,
        initiation_end_step: frame as u64 * dt_ratio,
        total_steps: last as u64 * dt_ratio,
        detected: found.is_some(),
        mobilized_fraction: fraction,
    })
}

/// Camera that covers the initiation phase: "side" if present, else the first.
fn early_view(cameras: &[Camera]) -> usize {
    cameras.iter().position(|c| c.name == "side").unwrap_or(0)
}

/// Assembles the in situ config: the early view renders `[0, split]`, the
/// others `[split, total]`. A single camera, or an undetected phase, gets
/// one full-window view and a flag.
pub fn build_config(
    run_label: &str,
    cameras: &[Camera],
    phases: &Phases,
    range: (f64, f64),
    params: &HarvestParams,
) -> Result<InSituConfig, crate::Error> {
    if cameras.is_empty() {
        return Err(HarvestError::NoCameras.into());
    }
    let (lo, mut hi) = range;
    let mut flags = Vec::new();
    if hi <= lo {
        hi = lo + 1e-6;
        flags.push("degenerate_scalar_range".to_string());
    }
    let colormap = Colormap::preset(&params.colormap, lo, hi)
        .ok_or_else(|| HarvestError::Parameter(format!("unknown colormap {:?}", params.colormap)))?;
    let total = phases.total_steps;
    let early = early_view(cameras);
    let (cams, windows): (Vec<Camera>, Vec<[u64; 2]>) = if !phases.detected {
        flags.push("phase_not_detected".to_string());
        (vec![cameras[early].clone()], vec![[0, total]])
    } else if cameras.len() == 1 {
        (cameras.to_vec(), vec![[0, total]])
    } else {
        let split = phases.initiation_end_step.min(total);
        let windows = (0..cameras.len())
            .map(|i| if i == early { [0, split] } else { [split, total] })
            .collect();
        (cameras.to_vec(), windows)
    };
    let config = InSituConfig {
        schema_version: SCHEMA_VERSION,
        run_label: run_label.to_string(),
        total_steps: total,
        cadence: params.cadence,
        particle_radius: params.particle_radius,
        scalar_field: ScalarField::Displacement,
        colormap,
        view_windows: cams.iter().map(|c| c.name.clone()).zip(windows).collect(),
        cameras: cams,
        flags,
    };
    config.validate()?;
    Ok(config)
}

/// Per-frame runout and height of the granular mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunoutMetrics {
    /// Front advance past the initial front along x, meters, floored at 0.
    pub runout: Vec<f64>,
    /// Maximum y, meters.
    pub height: Vec<f64>,
    pub mobilized_fraction: Vec<f64>,
}

impl RunoutMetrics {
    pub fn final_runout(&self) -> f64 {
        self.runout.last().copied().unwrap_or(0.0)
    }
}

fn max_axis(frame: &crate::frame::ParticleFrame, axis: usize) -> f64 {
    (0..frame.len()).map(|i| frame.position(i)[axis]).fold(f64::NEG_INFINITY, f64::max)
}

pub fn runout_metrics(rollout: &RolloutResult, epsilon: f64) -> Result<RunoutMetrics, HarvestError> {
    let first = rollout.frames.first().ok_or(HarvestError::EmptyRollout)?;
    if first.is_empty() {
        let n = rollout.frames.len();
        return Ok(RunoutMetrics {
            runout: vec![0.0; n],
            height: vec![0.0; n],
            mobilized_fraction: vec![0.0; n],
        });
    }
    let front = max_axis(first, 0);
    Ok(RunoutMetrics {
        runout: rollout.frames.iter().map(|f| (max_axis(f, 0) - front).max(0.0)).collect(),
        height: rollout.frames.iter().map(|f| max_axis(f, 1)).collect(),
        mobilized_fraction: mobilized_fraction(rollout, epsilon),
    })
}

/// Everything harvested from one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harvest {
    pub config: InSituConfig,
    pub phases: Phases,
    pub range: (f64, f64),
    pub metrics: RunoutMetrics,
}

pub fn harvest(
    run_label: &str,
    rollout: &RolloutResult,
    cameras: &[Camera],
    params: &HarvestParams,
) -> Result<Harvest, crate::Error> {
    rollout.validate()?;
    let range = scalar_range(rollout, ScalarField::Displacement)?;
    let phases = detect_phases(rollout, params.epsilon, params.threshold, params.dt_ratio)?;
    let metrics = runout_metrics(rollout, params.epsilon)?;
    let config = build_config(run_label, cameras, &phases, range, params)?;
    Ok(Harvest {
        config,
        phases,
        range,
        metrics,
    })
}
