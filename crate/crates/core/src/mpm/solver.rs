use nalgebra::{Matrix3, SVector};

use super::{constitutive_update, g2p_and_advect, grid_update, p2g, Grid, MpmError, SimConfig};
use crate::frame::{ParticleFrame, Provenance, RolloutResult};

#[derive(Debug, Clone, PartialEq)]
pub struct MpmParticle<const D: usize> {
    pub position: SVector<f64, D>,
    pub initial_position: SVector<f64, D>,
    pub velocity: SVector<f64, D>,
    /// kg.
    pub mass: f64,
    /// Current volume (area in 2-D).
    pub volume: f64,
    /// Cauchy stress, Pa, tension positive.
    pub stress: Matrix3<f64>,
    pub velocity_gradient: Matrix3<f64>,
}

/// Fills the column with a regular lattice, one particle per lattice cell
/// at its center, massed from density and cell volume, and pre-stressed
/// geostatically under gravity.
pub fn init_column<const D: usize>(config: &SimConfig) -> Result<Vec<MpmParticle<D>>, MpmError> {
    if config.dim != D {
        return Err(MpmError::Config(format!("config dim {} used with a {D}-D solver", config.dim)));
    }
    config.validate()?;
    let col = &config.column;
    let extents = col.extents(D);
    let mut counts = [0usize; D];
    let mut pitch = [0.0; D];
    for a in 0..D {
        let n = (extents[a] / config.spacing).round().max(1.0);
        counts[a] = n as usize;
        pitch[a] = extents[a] / n;
    }
    let volume: f64 = pitch.iter().product();
    let mass = config.density * volume;
    let (_, nu) = config.material.elastic_moduli();
    let k0 = nu / (1.0 - nu);
    let top = col.origin[1] + col.height;
    let g = config.gravity[1];
    let velocity = if config.initial_velocity.is_empty() {
        SVector::zeros()
    } else {
        SVector::from_fn(|a, _| config.initial_velocity[a])
    };

    let total: usize = counts.iter().product();
    let mut particles = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = SVector::<f64, D>::zeros();
        for a in 0..D {
            let i = rem % counts[a];
            rem /= counts[a];
            x[a] = col.origin[a] + (i as f64 + 0.5) * pitch[a];
        }
        let vertical = config.density * g * (top - x[1]);
        let mut stress = Matrix3::zeros();
        stress[(0, 0)] = k0 * vertical;
        stress[(1, 1)] = vertical;
        stress[(2, 2)] = k0 * vertical;
        particles.push(MpmParticle {
            position: x,
            initial_position: x,
            velocity,
            mass,
            volume,
            stress,
            velocity_gradient: Matrix3::zeros(),
        });
    }
    Ok(particles)
}

#[derive(Debug, Clone)]
pub struct MpmSolver<const D: usize> {
    config: SimConfig,
    pub particles: Vec<MpmParticle<D>>,
    pub grid: Grid<D>,
    gravity: SVector<f64, D>,
    step: u64,
    clamped: usize,
}

impl<const D: usize> MpmSolver<D> {
    pub fn new(config: SimConfig) -> Result<Self, MpmError> {
        let particles = init_column::<D>(&config)?;
        Self::with_particles(config, particles)
    }

    pub fn with_particles(config: SimConfig, particles: Vec<MpmParticle<D>>) -> Result<Self, MpmError> {
        config.validate()?;
        if config.dim != D {
            return Err(MpmError::Config(format!("config dim {} used with a {D}-D solver", config.dim)));
        }
        let grid = Grid::new(&config.domain, config.cell_size)?;
        let gravity = SVector::from_fn(|a, _| config.gravity[a]);
        Ok(Self {
            config,
            particles,
            grid,
            gravity,
            step: 0,
            clamped: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Total particle-position clamps so far.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn step(&mut self) -> Result<(), MpmError> {
        let c = &self.config;
        let dt = c.dt;
        p2g(&self.particles, &mut self.grid, &self.gravity)?;
        grid_update(&mut self.grid, dt, c.floor, c.walls);
        self.clamped += g2p_and_advect(&mut self.grid, &mut self.particles, dt, c.flip_ratio, &c.domain, c.floor, c.walls)?;
        self.step += 1;
        let step = self.step;
        for p in &mut self.particles {
            p.stress = constitutive_update(&p.stress, &p.velocity_gradient, dt, &c.material)
                .map_err(|_| MpmError::NonFiniteStress { step })?;
            p.volume *= 1.0 + dt * p.velocity_gradient.trace();
            let speed = p.velocity.norm();
            if !(speed <= c.max_speed) {
                return Err(MpmError::Unstable {
                    step,
                    speed,
                    limit: c.max_speed,
                });
            }
        }
        Ok(())
    }

    pub fn frame(&self) -> ParticleFrame {
        let n = self.particles.len();
        let mut positions = Vec::with_capacity(n * D);
        let mut velocities = Vec::with_capacity(n * D);
        let mut displacement = Vec::with_capacity(n);
        for p in &self.particles {
            positions.extend(p.position.iter());
            velocities.extend(p.velocity.iter());
            displacement.push((p.position - p.initial_position).norm());
        }
        ParticleFrame {
            step: self.step,
            time: self.step as f64 * self.config.dt,
            dim: D,
            positions,
            velocities,
            displacement,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    pub fn total_momentum(&self) -> SVector<f64, D> {
        self.particles.iter().map(|p| p.velocity * p.mass).sum()
    }
}

/// Dimension-erased solver.
#[derive(Debug, Clone)]
pub enum Simulation {
    Planar(MpmSolver<2>),
    Volumetric(MpmSolver<3>),
}

macro_rules! each {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Simulation::Planar($s) => $body,
            Simulation::Volumetric($s) => $body,
        }
    };
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, MpmError> {
        match config.dim {
            2 => Ok(Simulation::Planar(MpmSolver::new(config)?)),
            3 => Ok(Simulation::Volumetric(MpmSolver::new(config)?)),
            d => Err(MpmError::Config(format!("dim must be 2 or 3, got {d}"))),
        }
    }

    pub fn config(&self) -> &SimConfig {
        each!(self, s => s.config())
    }

    pub fn step(&mut self) -> Result<(), MpmError> {
        each!(self, s => s.step())
    }

    pub fn steps_taken(&self) -> u64 {
        each!(self, s => s.steps_taken())
    }

    pub fn frame(&self) -> ParticleFrame {
        each!(self, s => s.frame())
    }

    pub fn num_particles(&self) -> usize {
        each!(self, s => s.particles.len())
    }

    pub fn clamped(&self) -> usize {
        each!(self, s => s.clamped())
    }

    pub fn total_mass(&self) -> f64 {
        each!(self, s => s.total_mass())
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        each!(self, s => s.total_momentum().iter().copied().collect())
    }
}

/// Runs the full simulation and collects a frame every `snapshot_every`
/// steps, starting with the initial state.
pub fn run(config: &SimConfig) -> Result<RolloutResult, MpmError> {
    let mut sim = Simulation::new(config.clone())?;
    let mut frames = vec![sim.frame()];
    while sim.steps_taken() < config.total_steps {
        sim.step()?;
        if sim.steps_taken() % config.snapshot_every == 0 {
            frames.push(sim.frame());
        }
    }
    if sim.clamped() > 0 {
        log::warn!("{} particle positions clamped to the domain", sim.clamped());
    }
    Ok(RolloutResult {
        frames,
        dt: config.dt * config.snapshot_every as f64,
        provenance: Provenance::GroundTruth,
        bounds: config.domain.clone(),
    })
}
