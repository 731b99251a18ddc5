//! Explicit material point method for granular column collapse.
//!
//! Particles carry mass, velocity and a full 3x3 Cauchy stress; a regular
//! background grid with linear hat functions solves momentum each step
//! (particle-to-grid, grid update, grid-to-particle). Planar runs are plane
//! strain: the out-of-plane stress evolves but the strain rate there is zero.

mod config;
mod constitutive;
mod grid;
mod solver;

pub use config::{Boundary, ColumnGeometry, Material, SimConfig, CFL_NUMBER};
pub use constitutive::{constitutive_update, drucker_prager_coefficients, yield_function};
pub use grid::{g2p_and_advect, grid_update, p2g, Grid, MASS_EPSILON};
pub use solver::{init_column, run, MpmParticle, MpmSolver, Simulation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpmError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid column geometry: {0}")]
    Geometry(String),
    #[error("particle {particle} at {position:?} lies outside the grid")]
    OutsideGrid { particle: usize, position: Vec<f64> },
    #[error("non-finite stress at step {step}")]
    NonFiniteStress { step: u64 },
    #[error("unstable at step {step}: particle speed {speed:.3} m/s exceeds {limit} m/s")]
    Unstable { step: u64, speed: f64, limit: f64 },
}

impl MpmError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, MpmError::NonFiniteStress { .. } | MpmError::Unstable { .. })
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, MpmError::Config(_) | MpmError::Geometry(_))
    }
}
