use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use granule_core::gns::{FeatureStats, GnsConfig, GnsModel};
use granule_core::harvest::InSituConfig;
use granule_core::insitu::{RunReport, TimingRecord, ViewTiming};
use granule_core::io::*;
use granule_core::neural::{AdamConfig, OptimizerState};
use granule_core::{Bounds, Camera, Colormap, ParticleFrame, Provenance, RolloutResult};

fn rollout(seed: u64, dim: usize, n: usize, frames: usize) -> RolloutResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = |k: usize| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<f64>>();
    let frames = (0..frames)
        .map(|k| {
            let d = r(n).into_iter().map(f64::abs).collect();
            ParticleFrame::new(k as u64 * 25, k as f64 * 0.0025, dim, r(n * dim), r(n * dim), d).unwrap()
        })
        .collect();
    RolloutResult {
        frames,
        dt: 0.0025,
        provenance: Provenance::Surrogate,
        bounds: Bounds::new(vec![-5.0; dim], vec![5.0; dim]).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectory_round_trip_is_exact(seed in any::<u64>(), dim in 2usize..=3, n in 0usize..50, frames in 1usize..8) {
        let r = rollout(seed, dim, n, frames);
        let bytes = encode_trajectory(&r).unwrap();
        prop_assert_eq!(decode_trajectory(&bytes).unwrap(), r);
    }

    #[test]
    fn corrupted_trajectory_is_rejected(seed in any::<u64>(), at in any::<prop::sample::Index>()) {
        let r = rollout(seed, 2, 10, 3);
        let mut bytes = encode_trajectory(&r).unwrap();
        let i = at.index(bytes.len());
        bytes[i] ^= 0x10;
        prop_assert!(decode_trajectory(&bytes).is_err());
        prop_assert!(decode_trajectory(&bytes[..i]).is_err());
    }
}

#[test]
fn trajectory_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = rollout(1, 3, 20, 4);
    let path = dir.path().join("t.gtraj");
    write_trajectory(&path, &r).unwrap();
    assert_eq!(read_trajectory(&path).unwrap(), r);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let config = GnsConfig {
        latent_size: 8,
        message_passing_steps: 2,
        ..GnsConfig::default()
    };
    let model = GnsModel::new(config, 77).unwrap().with_stats(FeatureStats::identity(2));
    let mut opt = OptimizerState::new(model.num_params(), AdamConfig::default());
    let mut params = model.params();
    let grad: Vec<f64> = (0..params.len()).map(|k| ((k * 7919) % 13) as f64 * 1e-3 - 6e-3).collect();
    opt.step(&mut params, &grad).unwrap();
    let path = dir.path().join("c.json");
    let ckpt = Checkpoint::from_model(&model, Some(&opt), 77);
    write_checkpoint(&path, &ckpt).unwrap();
    let back = read_checkpoint(&path).unwrap();
    assert_eq!(back, ckpt);
    let restored = back.to_model().unwrap();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(restored.params()), bits(model.params()));
    assert_eq!(back.optimizer.unwrap(), opt);
}

fn config() -> InSituConfig {
    let b = Bounds::new(vec![0.0, 0.0], vec![1.5, 0.5]).unwrap();
    let mut c = InSituConfig::full_window("desk", Camera::presets(&b, 64, 48), Colormap::viridis(0.0, 0.137), 5000, 20, 0.005);
    c.view_windows.insert("side".into(), [0, 1500]);
    c.view_windows.insert("top".into(), [1500, 5000]);
    c.flags.push("example".into());
    c
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = config();
    let path = dir.path().join("c.json");
    write_config(&path, &c).unwrap();
    let back = read_config(&path).unwrap();
    assert_eq!(back, c);
    assert_eq!(to_config_json(&back), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn report_and_timings_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<TimingRecord> = (0..5)
        .map(|k| TimingRecord {
            step: 20 * k,
            receive_s: 0.001 * (k + 1) as f64,
            setup_s: 0.0005,
            render_s: 0.01 + 1e-4 * k as f64,
            views: vec![ViewTiming {
                view: "side".into(),
                render_s: 0.01 + 1e-4 * k as f64,
                error: None,
            }],
            particles: 800,
        })
        .collect();
    let mut report = RunReport::from_records("r", "abc", "def", 2, &records);
    report.wall_s = 1.25;
    let path = dir.path().join("report.json");
    write_report(&path, &report).unwrap();
    assert_eq!(read_report(&path).unwrap(), report);

    let csv = dir.path().join("timings.csv");
    write_timings_csv(&csv, &records).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), TIMINGS_HEADER.join(","));
    let back = read_timings_csv(&csv).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in back.iter().zip(&records) {
        assert_eq!((a.step, a.receive_s, a.setup_s, a.render_s, a.particles), (b.step, b.receive_s, b.setup_s, b.render_s, b.particles));
    }
}

fn parse_array(doc: &roxmltree::Document, name: &str) -> Vec<f64> {
    let node = doc
        .descendants()
        .find(|n| n.has_tag_name("DataArray") && n.attribute("Name") == Some(name))
        .unwrap_or_else(|| panic!("no {name} array"));
    node.text().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect()
}

fn same_to_six_digits(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 5e-7 * a.abs().max(b.abs())
}

#[test]
fn vtp_reparses_with_matching_coordinates() {
    for dim in [2, 3] {
        let r = rollout(4, dim, 37, 1);
        let frame = &r.frames[0];
        let text = vtp_string(frame);
        let doc = roxmltree::Document::parse(&text).unwrap();
        let piece = doc.descendants().find(|n| n.has_tag_name("Piece")).unwrap();
        assert_eq!(piece.attribute("NumberOfPoints"), Some("37"));
        let points = parse_array(&doc, "Points");
        assert_eq!(points.len(), 3 * 37);
        for i in 0..frame.len() {
            let p = frame.position3(i);
            for a in 0..3 {
                assert!(same_to_six_digits(points[3 * i + a], p[a]), "{} vs {}", points[3 * i + a], p[a]);
            }
        }
        let disp = parse_array(&doc, "displacement");
        assert!(disp.iter().zip(&frame.displacement).all(|(a, b)| same_to_six_digits(*a, *b)));
        assert_eq!(parse_array(&doc, "velocity").len(), 3 * 37);
        assert_eq!(parse_array(&doc, "offsets").last().copied(), Some(37.0));
    }
}

#[test]
fn shipped_schema_matches_embedded_copy() {
    let docs = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/insitu_config.schema.json");
    assert_eq!(std::fs::read_to_string(docs).unwrap(), config_schema());
}

#[test]
fn shard_round_trip_and_stream() {
    let r = rollout(2, 2, 12, 1);
    let f = &r.frames[0];
    let shard = FrameShard {
        rank: 3,
        step: f.step,
        time: f.time,
        dim: 2,
        ids: (100..112).collect(),
        positions: f.positions.clone(),
        velocities: f.velocities.clone(),
        displacement: f.displacement.clone(),
    };
    let bytes = encode_shard(&shard);
    let mut stream = std::io::Cursor::new([bytes.clone(), bytes].concat());
    assert_eq!(read_shard(&mut stream).unwrap().unwrap(), shard);
    assert_eq!(read_shard(&mut stream).unwrap().unwrap(), shard);
    assert!(read_shard(&mut stream).unwrap().is_none());
}
