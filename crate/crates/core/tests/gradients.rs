mod common;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use granule_core::gns::{encode_features, FeatureStats, GnsConfig, GnsModel, NormStats};
use granule_core::neural::mse;
use granule_core::Bounds;

#[test]
fn mlp_gradients_match_finite_differences() {
    for trial in 0..25 {
        let (sizes, err) = common::mlp_gradient_trial(trial);
        assert!(err < 1e-5, "trial {trial} sizes {sizes:?}: relative error {err:e}");
    }
}

fn small_stats() -> FeatureStats {
    FeatureStats {
        velocity: NormStats {
            mean: vec![0.001, -0.002],
            std: vec![0.01, 0.02],
        },
        acceleration: NormStats::identity(2),
    }
}

#[test]
fn full_model_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..3 {
        let config = GnsConfig {
            context_len: 2,
            latent_size: 4,
            hidden_layers: 1,
            message_passing_steps: 2,
            radius: 0.3,
            noise_std: 0.0,
            ..GnsConfig::default()
        };
        let model = GnsModel::new(config.clone(), trial).unwrap().with_stats(small_stats());
        let n = 6;
        let base: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.3..0.7)).collect();
        let window: Vec<Vec<f64>> = (0..3)
            .map(|k| base.iter().map(|x| x + 0.01 * k as f64 + rng.random_range(-0.002..0.002)).collect())
            .collect();
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let graph = encode_features(&window, &bounds, &config, model.stats().unwrap()).unwrap();
        assert!(graph.connectivity.num_edges() > 0);
        let target = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));

        let (pred, tape) = model.forward_taped(&graph).unwrap();
        let d_out = (&pred - &target) * (2.0 / pred.len() as f64);
        let analytic = model.backward(&graph, &tape, d_out).to_flat();
        let numeric = common::central_difference(&model.params(), |p| {
            let mut m = model.clone();
            m.set_params(p).unwrap();
            mse(m.forward(&graph).unwrap().view(), target.view())
        });
        let err = common::relative_error(&analytic, &numeric);
        assert!(err < 1e-5, "trial {trial}: relative error {err:e}");
    }
}
