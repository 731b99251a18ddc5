use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use granule_core::render::{intersect_brute, render, AccelGrid, Ray};
use granule_core::{Bounds, Camera, Colormap, ParticleFrame, ScalarField};

fn random_spheres(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.5)])
        .collect()
}

fn random_ray(rng: &mut ChaCha8Rng) -> Ray {
    let origin = Vector3::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
    let target = Vector3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
    let dir = (target - origin).normalize();
    Ray::new(origin, dir)
}

#[test]
fn grid_matches_exhaustive_search_on_fixed_scene() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let centers = random_spheres(&mut rng, 200);
    let radius = 0.03;
    let grid = AccelGrid::build(&centers, radius).unwrap();
    let mut hits = 0;
    for _ in 0..100 {
        let ray = random_ray(&mut rng);
        let a = grid.intersect(&ray);
        let b = intersect_brute(&centers, radius, &ray);
        assert_eq!(a.map(|h| h.id), b.map(|h| h.id));
        hits += a.is_some() as usize;
    }
    assert!(hits > 10, "only {hits} hits");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_matches_exhaustive_search(seed in any::<u64>(), n in 1usize..300, radius in 0.005f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = random_spheres(&mut rng, n);
        let grid = AccelGrid::build(&centers, radius).unwrap();
        for _ in 0..20 {
            let ray = random_ray(&mut rng);
            let a = grid.intersect(&ray);
            let b = intersect_brute(&centers, radius, &ray);
            prop_assert_eq!(a.map(|h| h.id), b.map(|h| h.id));
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert_eq!(a.t, b.t);
            }
        }
    }

    #[test]
    fn colormap_stays_in_gamut(v in prop::num::f64::ANY, lo in -10.0f64..10.0, span in 1e-6f64..10.0) {
        let c = Colormap::viridis(lo, lo + span).map_color(v);
        prop_assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

fn scene() -> (ParticleFrame, Camera) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 400;
    let positions: Vec<f64> = (0..n).flat_map(|_| [rng.random_range(0.0..0.4), rng.random_range(0.0..0.2)]).collect();
    let displacement: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.1)).collect();
    let frame = ParticleFrame::new(0, 0.0, 2, positions, vec![0.0; 2 * n], displacement).unwrap();
    let bounds = Bounds::new(vec![0.0, 0.0], vec![0.4, 0.2]).unwrap();
    (frame, Camera::aerial(&bounds, 96, 64))
}

#[test]
fn images_identical_across_runs_and_thread_counts() {
    let (frame, camera) = scene();
    let cmap = Colormap::viridis(0.0, 0.1);
    let draw = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| render(&frame, &camera, &cmap, 0.01, ScalarField::Displacement).unwrap().to_ppm())
    };
    let one = draw(1);
    assert_eq!(one, draw(1));
    assert_eq!(one, draw(4));
    assert_eq!(one, draw(7));
}
