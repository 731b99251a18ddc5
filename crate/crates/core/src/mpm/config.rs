use serde::{Deserialize, Serialize};

use super::MpmError;
use crate::frame::Bounds;

/// Courant number bounding `dt <= CFL_NUMBER * cell_size / p_wave_speed`.
pub const CFL_NUMBER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Material {
    /// Linear (hypo)elastic, Pa.
    Elastic { youngs_modulus: f64, poisson_ratio: f64 },
    /// Elastic–perfectly plastic Drucker–Prager with zero dilatancy.
    DruckerPrager {
        youngs_modulus: f64,
        poisson_ratio: f64,
        friction_angle_deg: f64,
        /// Pa.
        cohesion: f64,
    },
}

impl Material {
    pub fn granular() -> Self {
        Material::DruckerPrager {
            youngs_modulus: 2.0e6,
            poisson_ratio: 0.3,
            friction_angle_deg: 30.0,
            cohesion: 0.0,
        }
    }

    pub fn elastic_moduli(&self) -> (f64, f64) {
        match *self {
            Material::Elastic { youngs_modulus, poisson_ratio }
            | Material::DruckerPrager {
                youngs_modulus,
                poisson_ratio,
                ..
            } => (youngs_modulus, poisson_ratio),
        }
    }

    /// Lamé parameters `(lambda, mu)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = self.elastic_moduli();
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    pub fn validate(&self) -> Result<(), MpmError> {
        let (e, nu) = self.elastic_moduli();
        if !(e > 0.0 && e.is_finite()) {
            return Err(MpmError::Config(format!("Young's modulus must be positive, got {e}")));
        }
        if !(nu > -1.0 && nu < 0.5) {
            return Err(MpmError::Config(format!("Poisson ratio must lie in (-1, 0.5), got {nu}")));
        }
        if let Material::DruckerPrager {
            friction_angle_deg,
            cohesion,
            ..
        } = *self
        {
            if !(0.0..90.0).contains(&friction_angle_deg) {
                return Err(MpmError::Config(format!(
                    "friction angle must lie in [0, 90) degrees, got {friction_angle_deg}"
                )));
            }
            if !(cohesion >= 0.0) || (friction_angle_deg == 0.0 && cohesion == 0.0) {
                return Err(MpmError::Config("Drucker-Prager needs friction or cohesion".into()));
            }
        }
        Ok(())
    }
}

/// Grid boundary treatment for nodes on a domain face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// All velocity components zeroed.
    NoSlip,
    /// Velocity into the wall removed, tangential kept.
    Slip,
    /// Velocity into the wall removed; tangential speed reduced by
    /// `friction * |removed normal speed|`, clamped at zero.
    Frictional { friction: f64 },
    /// No constraint.
    Free,
}

/// Axis-aligned block of material. `depth` is used only in 3-D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGeometry {
    pub origin: Vec<f64>,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub depth: f64,
}

impl ColumnGeometry {
    pub fn aspect_ratio(&self) -> f64 {
        self.height / self.width
    }

    pub fn extents(&self, dim: usize) -> Vec<f64> {
        let mut e = vec![self.width, self.height];
        if dim == 3 {
            e.push(self.depth);
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    /// Seconds.
    pub dt: f64,
    pub total_steps: u64,
    /// m/s².
    pub gravity: Vec<f64>,
    pub material: Material,
    /// kg/m³.
    pub density: f64,
    pub column: ColumnGeometry,
    /// Initial particle lattice spacing, meters.
    pub spacing: f64,
    pub cell_size: f64,
    pub domain: Bounds,
    pub floor: Boundary,
    pub walls: Boundary,
    /// Weight of the FLIP update in the FLIP/PIC velocity blend.
    pub flip_ratio: f64,
    /// Steps between emitted frames.
    pub snapshot_every: u64,
    /// Instability guard, m/s.
    pub max_speed: f64,
    #[serde(default)]
    pub initial_velocity: Vec<f64>,
}

impl SimConfig {
    /// Planar granular column of the given size resting against the left wall,
    /// in a domain wide enough for its runout.
    pub fn column_collapse_2d(width: f64, height: f64) -> Self {
        let cell = 0.02;
        let span = ((width + 3.0 * height).max(1.0) / cell).ceil() * cell;
        let top = ((height * 1.25).max(0.2) / cell).ceil() * cell;
        Self {
            dim: 2,
            dt: 1e-4,
            total_steps: 5000,
            gravity: vec![0.0, -9.81],
            material: Material::granular(),
            density: 1800.0,
            column: ColumnGeometry {
                origin: vec![0.0, 0.0],
                width,
                height,
                depth: 0.0,
            },
            spacing: 0.01,
            cell_size: cell,
            domain: Bounds::new(vec![0.0, 0.0], vec![span, top]).expect("positive extents"),
            floor: Boundary::Frictional { friction: 0.5 },
            walls: Boundary::Slip,
            flip_ratio: 0.95,
            snapshot_every: 25,
            max_speed: 20.0,
            initial_velocity: Vec::new(),
        }
    }

    /// Small 3-D column (`depth` along z) for the volumetric path.
    pub fn column_collapse_3d(width: f64, height: f64, depth: f64) -> Self {
        let mut c = Self::column_collapse_2d(width, height);
        c.dim = 3;
        c.gravity = vec![0.0, -9.81, 0.0];
        c.column.origin = vec![0.0, 0.0, 0.0];
        c.column.depth = depth;
        let z = ((depth * 2.0).max(0.1) / c.cell_size).ceil() * c.cell_size;
        c.domain.lo.push(0.0);
        c.domain.hi.push(z);
        c.column.origin[2] = 0.5 * (z - depth);
        c
    }

    /// P-wave speed of the elastic part, m/s.
    pub fn wave_speed(&self) -> f64 {
        let (lambda, mu) = self.material.lame();
        ((lambda + 2.0 * mu) / self.density).sqrt()
    }

    /// Largest stable step under the documented CFL bound.
    pub fn cfl_dt(&self) -> f64 {
        CFL_NUMBER * self.cell_size / self.wave_speed()
    }

    pub fn validate(&self) -> Result<(), MpmError> {
        let cfg = |m: String| Err(MpmError::Config(m));
        if !(2..=3).contains(&self.dim) {
            return cfg(format!("dim must be 2 or 3, got {}", self.dim));
        }
        self.domain.validate().map_err(|e| MpmError::Config(e.to_string()))?;
        if self.domain.dim() != self.dim || self.gravity.len() != self.dim {
            return cfg("domain and gravity must match dim".into());
        }
        if !self.initial_velocity.is_empty() && self.initial_velocity.len() != self.dim {
            return cfg("initial_velocity must be empty or match dim".into());
        }
        self.material.validate()?;
        if !(self.density > 0.0) {
            return cfg(format!("density must be positive, got {}", self.density));
        }
        if !(self.cell_size > 0.0) {
            return cfg(format!("cell_size must be positive, got {}", self.cell_size));
        }
        for a in 0..self.dim {
            let cells = self.domain.extent(a) / self.cell_size;
            if (cells - cells.round()).abs() > 1e-6 || cells.round() < 2.0 {
                return cfg(format!(
                    "domain extent along axis {a} must be a multiple (>= 2) of cell_size"
                ));
            }
        }
        if !(self.dt > 0.0) {
            return cfg(format!("dt must be positive, got {}", self.dt));
        }
        let limit = self.cfl_dt();
        if self.dt > limit {
            return cfg(format!("dt {} exceeds the CFL bound {limit:.3e}", self.dt));
        }
        if !(0.0..=1.0).contains(&self.flip_ratio) {
            return cfg("flip_ratio must lie in [0, 1]".into());
        }
        if self.snapshot_every == 0 {
            return cfg("snapshot_every must be at least 1".into());
        }
        if !(self.spacing > 0.0) {
            return Err(MpmError::Geometry(format!("spacing must be positive, got {}", self.spacing)));
        }
        for b in [self.floor, self.walls] {
            if let Boundary::Frictional { friction } = b {
                if !(friction >= 0.0) {
                    return cfg("friction coefficient must be non-negative".into());
                }
            }
        }
        self.validate_geometry()
    }

    fn validate_geometry(&self) -> Result<(), MpmError> {
        let col = &self.column;
        let extents = col.extents(self.dim);
        if col.origin.len() != self.dim {
            return Err(MpmError::Geometry("column origin must match dim".into()));
        }
        for (a, e) in extents.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(MpmError::Geometry(format!("column extent along axis {a} must be positive, got {e}")));
            }
            let (lo, hi) = (col.origin[a], col.origin[a] + e);
            if lo < self.domain.lo[a] || hi > self.domain.hi[a] {
                return Err(MpmError::Geometry(format!(
                    "column spans [{lo}, {hi}] along axis {a}, outside the domain"
                )));
            }
        }
        Ok(())
    }

    /// Stable hex digest of the serialized config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:08x}", crc32fast::hash(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_column_is_valid() {
        let c = SimConfig::column_collapse_2d(0.2, 0.4);
        c.validate().unwrap();
        assert!(c.dt <= c.cfl_dt());
        assert_eq!(c.column.aspect_ratio(), 2.0);
        SimConfig::column_collapse_3d(0.1, 0.1, 0.06).validate().unwrap();
    }

    #[test]
    fn cfl_violation_rejected() {
        let mut c = SimConfig::column_collapse_2d(0.2, 0.4);
        c.dt = 1e-2;
        assert!(matches!(c.validate(), Err(MpmError::Config(m)) if m.contains("CFL")));
    }

    #[test]
    fn geometry_errors() {
        let mut c = SimConfig::column_collapse_2d(0.2, 0.4);
        c.column.height = 0.0;
        assert!(matches!(c.validate(), Err(MpmError::Geometry(_))));
        let mut c = SimConfig::column_collapse_2d(0.2, 0.4);
        c.column.origin = vec![5.0, 0.0];
        assert!(matches!(c.validate(), Err(MpmError::Geometry(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = SimConfig::column_collapse_2d(0.2, 0.4);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.total_steps += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
