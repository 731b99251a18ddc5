use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frame::ScalarField;
use crate::render::{Camera, Colormap};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Every field-level problem found in one validation pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for e in &self.0 {
            write!(f, "; {}: {}", e.path, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// The metadata handed to the in situ run: what to render, where, and when.
/// Windows are inclusive ground-truth step ranges; a camera without a
/// window renders over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InSituConfig {
    pub schema_version: u32,
    pub run_label: String,
    pub total_steps: u64,
    pub cadence: u64,
    /// Meters.
    pub particle_radius: f64,
    #[serde(default)]
    pub scalar_field: ScalarField,
    pub colormap: Colormap,
    pub cameras: Vec<Camera>,
    #[serde(default)]
    pub view_windows: BTreeMap<String, [u64; 2]>,
    /// Diagnostics raised while harvesting, e.g. a fallback schedule.
    #[serde(default)]
    pub flags: Vec<String>,
}

/// Multiples of `cadence` in the inclusive range `[start, end]`.
pub fn steps_in_window(start: u64, end: u64, cadence: u64) -> u64 {
    if end < start || cadence == 0 {
        return 0;
    }
    let first = start.div_ceil(cadence);
    let last = end / cadence;
    if last < first {
        0
    } else {
        last - first + 1
    }
}

impl InSituConfig {
    /// Every camera over the full run; the all-views baseline.
    pub fn full_window(
        run_label: &str,
        cameras: Vec<Camera>,
        colormap: Colormap,
        total_steps: u64,
        cadence: u64,
        particle_radius: f64,
    ) -> Self {
        let view_windows = cameras.iter().map(|c| (c.name.clone(), [0, total_steps])).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            run_label: run_label.to_string(),
            total_steps,
            cadence,
            particle_radius,
            scalar_field: ScalarField::Displacement,
            colormap,
            cameras,
            view_windows,
            flags: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = Vec::new();
        let mut push = |p: String, m: String| errs.push(FieldError::new(p, m));
        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version".into(),
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.run_label.trim().is_empty() {
            push("run_label".into(), "must not be empty".into());
        }
        if self.cadence < 1 {
            push("cadence".into(), "must be at least 1".into());
        }
        if !(self.particle_radius > 0.0 && self.particle_radius.is_finite()) {
            push("particle_radius".into(), format!("must be positive, got {}", self.particle_radius));
        }
        if let Err(e) = self.colormap.validate() {
            push("colormap".into(), e.to_string());
        }
        if self.cameras.is_empty() {
            push("cameras".into(), "at least one camera is required".into());
        }
        for (i, cam) in self.cameras.iter().enumerate() {
            if let Err(e) = cam.validate() {
                push(format!("cameras[{i}]"), e.to_string());
            }
            if self.cameras[..i].iter().any(|c| c.name == cam.name) {
                push(format!("cameras[{i}].name"), format!("duplicate camera name {:?}", cam.name));
            }
        }
        for (view, &[start, end]) in &self.view_windows {
            let path = format!("view_windows.{view}");
            if !self.cameras.iter().any(|c| &c.name == view) {
                push(path.clone(), "no camera with this name".into());
            }
            if end < start {
                push(path.clone(), format!("end {end} precedes start {start}"));
            }
            if end > self.total_steps {
                push(path, format!("end {end} exceeds total_steps {}", self.total_steps));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(errs))
        }
    }

    /// Inclusive window for a camera, defaulting to the full run.
    pub fn window(&self, view: &str) -> [u64; 2] {
        self.view_windows.get(view).copied().unwrap_or([0, self.total_steps])
    }

    /// Indices of cameras to render at `step`.
    pub fn views_due(&self, step: u64) -> Vec<usize> {
        if self.cadence == 0 || !step.is_multiple_of(self.cadence) || step > self.total_steps {
            return Vec::new();
        }
        self.cameras
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let [s, e] = self.window(&c.name);
                (s..=e).contains(&step)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// True when any camera renders at `step`.
    pub fn is_viz_step(&self, step: u64) -> bool {
        !self.views_due(step).is_empty()
    }

    /// Images this config produces over a run of `total_steps`.
    pub fn planned_image_count(&self) -> u64 {
        self.planned_per_view().iter().map(|(_, n)| n).sum()
    }

    pub fn planned_per_view(&self) -> Vec<(String, u64)> {
        self.cameras
            .iter()
            .map(|c| {
                let [s, e] = self.window(&c.name);
                (c.name.clone(), steps_in_window(s, e.min(self.total_steps), self.cadence))
            })
            .collect()
    }
}
