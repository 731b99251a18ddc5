use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use granule_core::frame::Bounds;
use granule_core::gns::GnsConfig;
use granule_core::harvest::HarvestParams;
use granule_core::mpm::{Boundary, Material, SimConfig};

use crate::CliError;

pub const DATA_ENV: &str = "GRANULE_SCOPE_DATA";

/// Full-resolution column used for the in situ run and as the held-out
/// geometry for the surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
    pub cell_size: f64,
    pub dt: f64,
    pub total_steps: u64,
    pub snapshot_every: u64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub friction_angle_deg: f64,
    pub cohesion: f64,
    pub density: f64,
    pub floor_friction: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            width: 0.2,
            height: 0.4,
            spacing: 0.01,
            cell_size: 0.02,
            dt: 1e-4,
            total_steps: 5000,
            snapshot_every: 25,
            youngs_modulus: 2.0e6,
            poisson_ratio: 0.3,
            friction_angle_deg: 30.0,
            cohesion: 0.0,
            density: 1800.0,
            floor_friction: 0.5,
        }
    }
}

impl SimSpec {
    /// Column of the given size at the given resolution; the domain is
    /// rounded up to whole cells.
    pub fn column(&self, width: f64, height: f64, spacing: f64, cell_size: f64, total_steps: u64) -> SimConfig {
        let mut c = SimConfig::column_collapse_2d(width, height);
        c.spacing = spacing;
        c.cell_size = cell_size;
        let round = |x: f64| (x / cell_size - 1e-9).ceil() * cell_size;
        c.domain = Bounds {
            lo: vec![0.0, 0.0],
            hi: vec![round(c.domain.hi[0]), round(c.domain.hi[1])],
        };
        c.dt = self.dt;
        c.total_steps = total_steps;
        c.snapshot_every = self.snapshot_every;
        c.density = self.density;
        c.material = Material::DruckerPrager {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            friction_angle_deg: self.friction_angle_deg,
            cohesion: self.cohesion,
        };
        c.floor = Boundary::Frictional {
            friction: self.floor_friction,
        };
        c
    }

    pub fn to_config(&self) -> SimConfig {
        self.column(self.width, self.height, self.spacing, self.cell_size, self.total_steps)
    }
}

/// Randomized training trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub count: usize,
    /// Particle spacing of the surrogate's world, meters.
    pub spacing: f64,
    pub width_range: [f64; 2],
    pub aspect_range: [f64; 2],
    pub total_steps: u64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            count: 8,
            spacing: 0.02,
            width_range: [0.12, 0.26],
            aspect_range: [0.5, 2.0],
            total_steps: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub final_lr: f64,
    pub decay_steps: f64,
    pub checkpoint_every: u64,
    pub validation_every: u64,
    /// Trajectories held out from the end of the manifest for validation.
    pub validation_trajectories: usize,
    /// Cap on validation windows, spread evenly over the held-out data.
    pub validation_windows: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            steps: 10_000,
            batch_size: 4,
            lr: 1e-3,
            final_lr: 1e-5,
            decay_steps: 3300.0,
            checkpoint_every: 1000,
            validation_every: 500,
            validation_trajectories: 1,
            validation_windows: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSpec {
    pub steps: usize,
    /// Seconds per surrogate step.
    pub dt: f64,
}

impl Default for RolloutSpec {
    fn default() -> Self {
        Self { steps: 200, dt: 0.0025 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsituSpec {
    pub ranks: usize,
    pub channel_capacity: usize,
}

impl Default for InsituSpec {
    fn default() -> Self {
        Self {
            ranks: 2,
            channel_capacity: 2,
        }
    }
}

/// Everything a workflow run needs, read from TOML. Missing sections take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub sim: SimSpec,
    pub data: DataSpec,
    pub gns: GnsConfig,
    pub train: TrainSpec,
    pub rollout: RolloutSpec,
    pub harvest: HarvestParams,
    pub insitu: InsituSpec,
}

impl Default for RunSpec {
    fn default() -> Self {
        let data = DataSpec::default();
        Self {
            seed: 1,
            out_dir: None,
            sim: SimSpec::default(),
            gns: GnsConfig {
                latent_size: 32,
                message_passing_steps: 3,
                radius: 1.5 * data.spacing,
                noise_std: 3e-6,
                ..GnsConfig::default()
            },
            data,
            train: TrainSpec::default(),
            rollout: RolloutSpec::default(),
            harvest: HarvestParams::default(),
            insitu: InsituSpec::default(),
        }
    }
}

impl RunSpec {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    /// `--out` beats the environment, which beats the spec file.
    pub fn resolve_out(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(env) = std::env::var_os(DATA_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(env);
        }
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("granule-data"))
    }

    /// The surrogate's view of the in situ column: same geometry, training resolution.
    pub fn held_out_column(&self) -> SimConfig {
        let s = self.data.spacing;
        self.sim.column(self.sim.width, self.sim.height, s, 2.0 * s, self.data.total_steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let s = RunSpec::default();
        s.sim.to_config().validate().unwrap();
        s.held_out_column().validate().unwrap();
        s.gns.validate().unwrap();
        let ratio = s.rollout.dt / s.sim.dt;
        assert!((ratio - s.harvest.dt_ratio as f64).abs() < 1e-9);
        assert_eq!(s.rollout.steps as u64 * s.harvest.dt_ratio, s.sim.total_steps);
    }

    #[test]
    fn toml_sections_and_unknown_keys() {
        let s = RunSpec::parse("seed = 7\n[train]\nsteps = 10\n").unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.train.steps, 10);
        assert_eq!(s.train.batch_size, 4);
        assert!(RunSpec::parse("sed = 7\n").is_err());
    }
}
