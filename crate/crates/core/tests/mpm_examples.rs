use nalgebra::{Matrix3, SVector, Vector2};

use granule_core::mpm::{grid_update, init_column, p2g, run, Boundary, Grid, Material, MpmParticle, SimConfig, Simulation};
use granule_core::Bounds;

fn unit_grid() -> Grid<2> {
    Grid::new(&Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 0.25).unwrap()
}

fn particle(x: f64, y: f64, mass: f64) -> MpmParticle<2> {
    MpmParticle {
        position: Vector2::new(x, y),
        initial_position: Vector2::new(x, y),
        velocity: Vector2::new(0.3, -0.1),
        mass,
        volume: 1e-3,
        stress: Matrix3::zeros(),
        velocity_gradient: Matrix3::zeros(),
    }
}

#[test]
fn particle_on_node_puts_all_mass_there() {
    let mut g = unit_grid();
    p2g(&[particle(0.5, 0.25, 2.0)], &mut g, &SVector::zeros()).unwrap();
    let node = g.index(&[2, 1]);
    assert_eq!(g.mass[node], 2.0);
    assert_eq!(g.total_mass(), 2.0);
    assert!(g.mass.iter().enumerate().all(|(i, &m)| i == node || m == 0.0));
}

#[test]
fn cell_center_splits_a_quarter_each() {
    let mut g = unit_grid();
    p2g(&[particle(0.375, 0.625, 1.0)], &mut g, &SVector::zeros()).unwrap();
    for ij in [[1, 2], [2, 2], [1, 3], [2, 3]] {
        assert!((g.mass[g.index(&ij)] - 0.25).abs() <= 1e-15, "{ij:?}");
    }
    let p = g.total_momentum();
    assert!((p[0] - 0.3).abs() <= 1e-15 && (p[1] + 0.1).abs() <= 1e-15);
}

fn loaded(velocity: Vector2<f64>) -> (Grid<2>, usize, usize) {
    let mut g = unit_grid();
    let floor = g.index(&[2, 0]);
    let inner = g.index(&[2, 2]);
    for i in [floor, inner] {
        g.mass[i] = 1.0;
        g.momentum[i] = velocity;
    }
    (g, floor, inner)
}

#[test]
fn no_slip_floor_stops_nodes() {
    let (mut g, floor, inner) = loaded(Vector2::new(1.0, -1.0));
    grid_update(&mut g, 1e-3, Boundary::NoSlip, Boundary::Slip);
    assert_eq!(g.velocity[floor], Vector2::zeros());
    assert_eq!(g.velocity[inner], Vector2::new(1.0, -1.0));
}

#[test]
fn frictional_floor_clamps_tangential_speed() {
    let (mut g, floor, _) = loaded(Vector2::new(1.0, -1.0));
    grid_update(&mut g, 1e-3, Boundary::Frictional { friction: 0.5 }, Boundary::Slip);
    assert!((g.velocity[floor] - Vector2::new(0.5, 0.0)).norm() <= 1e-15);

    let (mut g, floor, _) = loaded(Vector2::new(1.0, -1.0));
    grid_update(&mut g, 1e-3, Boundary::Frictional { friction: 2.0 }, Boundary::Slip);
    assert_eq!(g.velocity[floor], Vector2::zeros());

    let (mut g, floor, _) = loaded(Vector2::new(1.0, 0.5));
    grid_update(&mut g, 1e-3, Boundary::Frictional { friction: 0.5 }, Boundary::Slip);
    assert_eq!(g.velocity[floor], Vector2::new(1.0, 0.5));
}

#[test]
fn slip_and_free_walls() {
    let mut g = unit_grid();
    let wall = g.index(&[0, 2]);
    g.mass[wall] = 1.0;
    g.momentum[wall] = Vector2::new(-2.0, 0.5);
    grid_update(&mut g, 1e-3, Boundary::NoSlip, Boundary::Slip);
    assert_eq!(g.velocity[wall], Vector2::new(0.0, 0.5));
    grid_update(&mut g, 1e-3, Boundary::NoSlip, Boundary::Free);
    assert_eq!(g.velocity[wall], Vector2::new(-2.0, 0.5));
}

fn small_column() -> SimConfig {
    let mut c = SimConfig::column_collapse_2d(0.1, 0.1);
    c.total_steps = 200;
    c
}

#[test]
fn weightless_column_never_moves() {
    let mut c = small_column();
    c.gravity = vec![0.0, 0.0];
    c.material = Material::Elastic {
        youngs_modulus: 2e6,
        poisson_ratio: 0.3,
    };
    let r = run(&c).unwrap();
    let first = &r.frames[0];
    for f in &r.frames {
        assert_eq!(f.positions, first.positions);
        assert!(f.velocities.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let c = small_column();
    assert_eq!(run(&c).unwrap(), run(&c).unwrap());
}

#[test]
fn column_settles_inside_domain_and_spreads() {
    let c = small_column();
    let r = run(&c).unwrap();
    let last = r.frames.last().unwrap();
    assert!((0..last.len()).all(|i| c.domain.contains(last.position(i))));
    let front = |f: &granule_core::ParticleFrame| (0..f.len()).map(|i| f.position(i)[0]).fold(0.0, f64::max);
    assert!(front(last) >= front(&r.frames[0]));
}

#[test]
fn geostatic_stress_grows_with_depth() {
    let c = small_column();
    let ps = init_column::<2>(&c).unwrap();
    let top = ps.iter().max_by(|a, b| a.position[1].total_cmp(&b.position[1])).unwrap();
    let bottom = ps.iter().min_by(|a, b| a.position[1].total_cmp(&b.position[1])).unwrap();
    assert!(bottom.stress[(1, 1)] < top.stress[(1, 1)]);
    assert!(bottom.stress[(1, 1)] < 0.0);
}

#[test]
fn three_dimensional_column_conserves_mass() {
    let mut c = SimConfig::column_collapse_3d(0.06, 0.06, 0.06);
    c.total_steps = 20;
    let mut sim = Simulation::new(c).unwrap();
    let m0 = sim.total_mass();
    for _ in 0..20 {
        sim.step().unwrap();
    }
    assert!((sim.total_mass() - m0).abs() <= 1e-12 * m0);
    assert_eq!(sim.frame().dim, 3);
}
