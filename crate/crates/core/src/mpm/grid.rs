#![allow(clippy::needless_range_loop)]

use nalgebra::{Matrix3, SMatrix, SVector};

use super::{Boundary, MpmError, MpmParticle};
use crate::frame::Bounds;

/// Nodes lighter than this are treated as empty.
pub const MASS_EPSILON: f64 = 1e-12;

/// Regular background grid with nodes on the domain faces.
#[derive(Debug, Clone)]
pub struct Grid<const D: usize> {
    pub cell_size: f64,
    pub origin: SVector<f64, D>,
    /// Node count per axis.
    pub nodes: [usize; D],
    pub mass: Vec<f64>,
    pub momentum: Vec<SVector<f64, D>>,
    pub force: Vec<SVector<f64, D>>,
    /// Velocity before the force update.
    pub velocity_old: Vec<SVector<f64, D>>,
    pub velocity: Vec<SVector<f64, D>>,
}

/// Linear hat weights for the 2^D nodes around a point.
struct Stencil<const D: usize> {
    base: [usize; D],
    w: [[f64; 2]; D],
    dw: [[f64; 2]; D],
}

impl<const D: usize> Grid<D> {
    pub fn new(domain: &Bounds, cell_size: f64) -> Result<Self, MpmError> {
        if domain.dim() != D {
            return Err(MpmError::Config(format!("domain has dim {}, grid {D}", domain.dim())));
        }
        let mut nodes = [0usize; D];
        for (a, n) in nodes.iter_mut().enumerate() {
            *n = (domain.extent(a) / cell_size).round() as usize + 1;
        }
        let total: usize = nodes.iter().product();
        Ok(Self {
            cell_size,
            origin: SVector::from_fn(|a, _| domain.lo[a]),
            nodes,
            mass: vec![0.0; total],
            momentum: vec![SVector::zeros(); total],
            force: vec![SVector::zeros(); total],
            velocity_old: vec![SVector::zeros(); total],
            velocity: vec![SVector::zeros(); total],
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.mass.len()
    }

    pub fn clear(&mut self) {
        self.mass.fill(0.0);
        self.momentum.fill(SVector::zeros());
        self.force.fill(SVector::zeros());
        self.velocity_old.fill(SVector::zeros());
        self.velocity.fill(SVector::zeros());
    }

    pub fn index(&self, ijk: &[usize; D]) -> usize {
        let mut idx = 0;
        for a in (0..D).rev() {
            idx = idx * self.nodes[a] + ijk[a];
        }
        idx
    }

    pub fn coords(&self, mut index: usize) -> [usize; D] {
        let mut ijk = [0; D];
        for a in 0..D {
            ijk[a] = index % self.nodes[a];
            index /= self.nodes[a];
        }
        ijk
    }

    pub fn node_position(&self, index: usize) -> SVector<f64, D> {
        let ijk = self.coords(index);
        SVector::from_fn(|a, _| self.origin[a] + ijk[a] as f64 * self.cell_size)
    }

    fn stencil(&self, x: &SVector<f64, D>) -> Option<Stencil<D>> {
        let mut st = Stencil {
            base: [0; D],
            w: [[0.0; 2]; D],
            dw: [[0.0; 2]; D],
        };
        let inv_h = 1.0 / self.cell_size;
        for a in 0..D {
            let s = (x[a] - self.origin[a]) * inv_h;
            if !(s >= 0.0 && s <= (self.nodes[a] - 1) as f64) {
                return None;
            }
            let i = (s.floor() as usize).min(self.nodes[a] - 2);
            let f = s - i as f64;
            st.base[a] = i;
            st.w[a] = [1.0 - f, f];
            st.dw[a] = [-inv_h, inv_h];
        }
        Some(st)
    }

    fn for_each_node(&self, st: &Stencil<D>, mut f: impl FnMut(usize, f64, SVector<f64, D>)) {
        for corner in 0..(1usize << D) {
            let mut ijk = [0; D];
            let mut weight = 1.0;
            for a in 0..D {
                let o = (corner >> a) & 1;
                ijk[a] = st.base[a] + o;
                weight *= st.w[a][o];
            }
            let grad = SVector::from_fn(|a, _| {
                let mut g = 1.0;
                for b in 0..D {
                    let o = (corner >> b) & 1;
                    g *= if a == b { st.dw[b][o] } else { st.w[b][o] };
                }
                g
            });
            f(self.index(&ijk), weight, grad);
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn total_momentum(&self) -> SVector<f64, D> {
        self.momentum.iter().sum()
    }
}

fn stress_block<const D: usize>(s: &Matrix3<f64>) -> SMatrix<f64, D, D> {
    SMatrix::from_fn(|r, c| s[(r, c)])
}

fn outside<const D: usize>(particle: usize, x: &SVector<f64, D>) -> MpmError {
    MpmError::OutsideGrid {
        particle,
        position: x.iter().copied().collect(),
    }
}

/// Scatters mass, momentum and internal plus gravity forces to the grid.
pub fn p2g<const D: usize>(
    particles: &[MpmParticle<D>],
    grid: &mut Grid<D>,
    gravity: &SVector<f64, D>,
) -> Result<(), MpmError> {
    grid.clear();
    for (pi, p) in particles.iter().enumerate() {
        let st = grid.stencil(&p.position).ok_or_else(|| outside(pi, &p.position))?;
        let sigma = stress_block::<D>(&p.stress);
        let mut contrib = Vec::with_capacity(1 << D);
        grid.for_each_node(&st, |i, w, grad| contrib.push((i, w, grad)));
        for (i, w, grad) in contrib {
            grid.mass[i] += w * p.mass;
            grid.momentum[i] += p.velocity * (w * p.mass);
            grid.force[i] += gravity * (w * p.mass) - sigma * grad * p.volume;
        }
    }
    Ok(())
}

fn constrain<const D: usize>(v: &mut SVector<f64, D>, normal: &SVector<f64, D>, kind: Boundary) {
    let vn = v.dot(normal);
    match kind {
        Boundary::Free => {}
        Boundary::NoSlip => *v = SVector::zeros(),
        Boundary::Slip => {
            if vn < 0.0 {
                *v -= normal * vn;
            }
        }
        Boundary::Frictional { friction } => {
            if vn < 0.0 {
                let tangential = *v - normal * vn;
                let speed = tangential.norm();
                let reduced = (speed + friction * vn).max(0.0);
                *v = if speed > 0.0 {
                    tangential * (reduced / speed)
                } else {
                    SVector::zeros()
                };
            }
        }
    }
}

fn apply_boundaries<const D: usize>(grid: &Grid<D>, i: usize, v: &mut SVector<f64, D>, floor: Boundary, walls: Boundary) {
    let ijk = grid.coords(i);
    for a in 0..D {
        let side = if ijk[a] == 0 {
            1.0
        } else if ijk[a] == grid.nodes[a] - 1 {
            -1.0
        } else {
            continue;
        };
        let kind = if a == 1 && side > 0.0 { floor } else { walls };
        let normal = SVector::from_fn(|r, _| if r == a { side } else { 0.0 });
        constrain(v, &normal, kind);
    }
}

/// Explicit velocity update followed by boundary conditions on face nodes.
/// The floor is the low face of axis 1; every other face uses `walls`.
pub fn grid_update<const D: usize>(grid: &mut Grid<D>, dt: f64, floor: Boundary, walls: Boundary) {
    for i in 0..grid.num_nodes() {
        let m = grid.mass[i];
        if m <= MASS_EPSILON {
            grid.velocity_old[i] = SVector::zeros();
            grid.velocity[i] = SVector::zeros();
            continue;
        }
        let v_old = grid.momentum[i] / m;
        let mut v = v_old + grid.force[i] * (dt / m);
        apply_boundaries(grid, i, &mut v, floor, walls);
        grid.velocity_old[i] = v_old;
        grid.velocity[i] = v;
    }
}

/// Gathers velocities back to particles (FLIP/PIC blend) and moves them with
/// the PIC velocity. The updated particle momentum is then mapped back to
/// the grid, and each particle's velocity gradient is taken from those
/// remapped nodal velocities, which stay bounded on nearly empty nodes.
/// Positions are clamped into `domain`; the number of clamped particles is
/// returned.
pub fn g2p_and_advect<const D: usize>(
    grid: &mut Grid<D>,
    particles: &mut [MpmParticle<D>],
    dt: f64,
    flip_ratio: f64,
    domain: &Bounds,
    floor: Boundary,
    walls: Boundary,
) -> Result<usize, MpmError> {
    let mut stencils = Vec::with_capacity(particles.len());
    let mut moves = Vec::with_capacity(particles.len());
    for (pi, p) in particles.iter_mut().enumerate() {
        let st = grid.stencil(&p.position).ok_or_else(|| outside(pi, &p.position))?;
        let mut v_pic = SVector::<f64, D>::zeros();
        let mut dv = SVector::<f64, D>::zeros();
        grid.for_each_node(&st, |i, w, _| {
            v_pic += grid.velocity[i] * w;
            dv += (grid.velocity[i] - grid.velocity_old[i]) * w;
        });
        p.velocity = (p.velocity + dv) * flip_ratio + v_pic * (1.0 - flip_ratio);
        stencils.push(st);
        moves.push(v_pic * dt);
    }

    grid.momentum.fill(SVector::zeros());
    for (p, st) in particles.iter().zip(&stencils) {
        let mut contrib = [(0usize, 0.0); 8];
        let mut n = 0;
        grid.for_each_node(st, |i, w, _| {
            contrib[n] = (i, w);
            n += 1;
        });
        for &(i, w) in &contrib[..n] {
            grid.momentum[i] += p.velocity * (w * p.mass);
        }
    }
    for i in 0..grid.num_nodes() {
        let m = grid.mass[i];
        let mut v = if m > MASS_EPSILON { grid.momentum[i] / m } else { SVector::zeros() };
        apply_boundaries(grid, i, &mut v, floor, walls);
        grid.velocity[i] = v;
    }

    let mut clamped = 0;
    for ((p, st), step) in particles.iter_mut().zip(&stencils).zip(moves) {
        let mut grad_v = SMatrix::<f64, D, D>::zeros();
        grid.for_each_node(st, |i, _, grad| grad_v += grid.velocity[i] * grad.transpose());
        p.position += step;
        let mut hit = false;
        for a in 0..D {
            let c = p.position[a].clamp(domain.lo[a], domain.hi[a]);
            if c != p.position[a] {
                p.position[a] = c;
                hit = true;
            }
        }
        clamped += hit as usize;
        let mut full = Matrix3::zeros();
        for r in 0..D {
            for c in 0..D {
                full[(r, c)] = grad_v[(r, c)];
            }
        }
        p.velocity_gradient = full;
    }
    Ok(clamped)
}
