mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use granule_core::harvest::{steps_in_window, InSituConfig};
use granule_core::insitu::{run_pipeline, PipelineOptions, ReplaySource};
use granule_core::{Bounds, Camera, Colormap, ParticleFrame, Provenance, RolloutResult};

fn random_config(rng: &mut ChaCha8Rng, bounds: &Bounds) -> InSituConfig {
    let total = rng.random_range(0..400);
    let cadence = rng.random_range(1..60);
    let mut c = InSituConfig::full_window("r", Camera::presets(bounds, 12, 8), Colormap::viridis(0.0, 1.0), total, cadence, 0.02);
    for cam in ["side", "top", "aerial"] {
        match rng.random_range(0..4) {
            0 => {
                c.view_windows.remove(cam);
            }
            1 => {
                c.cameras.retain(|x| x.name != cam);
                c.view_windows.remove(cam);
            }
            _ => {
                let a = rng.random_range(0..=total);
                let b = rng.random_range(a..=total);
                c.view_windows.insert(cam.into(), [a, b]);
            }
        }
    }
    if c.cameras.is_empty() {
        c.cameras = Camera::presets(bounds, 12, 8)[..1].to_vec();
    }
    c
}

fn replay(frames: usize) -> RolloutResult {
    let frames = (0..frames)
        .map(|k| {
            let p: Vec<f64> = (0..20).flat_map(|i| [0.05 * i as f64 + 0.001 * k as f64, 0.1]).collect();
            ParticleFrame::at_rest(k as u64, k as f64 * 0.01, 2, p).unwrap()
        })
        .collect();
    RolloutResult {
        frames,
        dt: 0.01,
        provenance: Provenance::GroundTruth,
        bounds: Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap(),
    }
}

#[test]
fn produced_images_follow_the_count_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
    for _ in 0..10 {
        let config = random_config(&mut rng, &bounds);
        config.validate().unwrap();
        let mut source = ReplaySource::new(replay(21), 20).unwrap();
        let outcome = run_pipeline(&mut source, &config, &PipelineOptions::default()).unwrap();
        assert!(outcome.failure.is_none());
        assert_eq!(outcome.report.images, common::enumerate_images(&config), "{config:?}");
        assert_eq!(config.planned_image_count(), common::enumerate_images(&config));
    }
}

#[test]
fn reference_schedule() {
    assert_eq!(steps_in_window(0, 1500, 20), 76);
    assert_eq!(steps_in_window(0, 5000, 20), 251);
    assert_eq!(steps_in_window(1500, 5000, 20), 176);
    let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
    let mut c = InSituConfig::full_window("p", Camera::presets(&bounds, 8, 8), Colormap::viridis(0.0, 1.0), 5000, 20, 0.01);
    c.view_windows.insert("side".into(), [0, 1500]);
    c.view_windows.insert("top".into(), [1500, 5000]);
    c.view_windows.insert("aerial".into(), [1500, 5000]);
    let per_view: std::collections::BTreeMap<String, u64> = c.planned_per_view().into_iter().collect();
    assert_eq!(per_view["side"], 76);
    assert_eq!(c.planned_image_count(), 76 + 2 * 176);
    assert!(c.planned_image_count() < 3 * 251);
}

proptest! {
    #[test]
    fn window_count_matches_enumeration(a in 0u64..3000, len in 0u64..3000, cadence in 1u64..100) {
        let b = a + len;
        let brute = (a..=b).filter(|s| s % cadence == 0).count() as u64;
        prop_assert_eq!(steps_in_window(a, b, cadence), brute);
    }
}
