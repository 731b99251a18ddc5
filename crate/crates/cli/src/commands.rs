use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use granule_core::gns::{compute_stats, evaluate_loss, rollout as gns_rollout, windows_from, GnsModel, Trainer, TrainingSample};
use granule_core::harvest::{harvest as harvest_rollout, InSituConfig};
use granule_core::insitu::{compare_runs, run_pipeline, PipelineOptions};
use granule_core::io::{
    export_vtp, read_checkpoint, read_config, read_report, read_trajectory, write_checkpoint, write_config, write_report,
    write_timings_csv, write_trajectory, Checkpoint,
};
use granule_core::mpm::{init_column, run as run_mpm, Simulation};
use granule_core::neural::AdamConfig;
use granule_core::{Bounds, Camera, RolloutResult};

use crate::{CliError, RunSpec};

pub const MANIFEST: &str = "manifest.json";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const LOSS_CSV: &str = "loss.csv";

/// Layout under the data directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }
    pub fn model(&self) -> PathBuf {
        self.root.join("model")
    }
    pub fn rollouts(&self) -> PathBuf {
        self.root.join("rollouts")
    }
    pub fn configs(&self) -> PathBuf {
        self.root.join("configs")
    }
    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: Option<String>,
    pub width: f64,
    pub height: f64,
    pub particles: usize,
    pub frames: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub spacing: f64,
    pub trajectories: Vec<ManifestEntry>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn snap(x: f64, pitch: f64) -> f64 {
    ((x / pitch).round() * pitch).max(pitch)
}

/// Simulates `count` columns of random width and aspect ratio at the
/// training resolution. Failed simulations are recorded in the manifest and
/// skipped; the command fails only if none succeed.
pub fn gen_data(spec: &RunSpec, ws: &Workspace, count: Option<usize>) -> Result<Manifest, CliError> {
    let count = count.unwrap_or(spec.data.count);
    if count == 0 {
        return Err(CliError::Validation("count must be at least 1".into()));
    }
    let d = &spec.data;
    if !(d.width_range[0] > 0.0 && d.width_range[0] <= d.width_range[1]) {
        return Err(CliError::Validation(format!("bad width_range {:?}", d.width_range)));
    }
    if !(d.aspect_range[0] > 0.0 && d.aspect_range[0] <= d.aspect_range[1]) {
        return Err(CliError::Validation(format!("bad aspect_range {:?}", d.aspect_range)));
    }
    let dir = ws.data();
    fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let width = snap(rng.random_range(d.width_range[0]..=d.width_range[1]), d.spacing);
        let aspect = rng.random_range(d.aspect_range[0]..=d.aspect_range[1]);
        let height = snap(width * aspect, d.spacing);
        let config = spec.sim.column(width, height, d.spacing, 2.0 * d.spacing, d.total_steps);
        let t = Instant::now();
        let mut entry = ManifestEntry {
            file: None,
            width,
            height,
            particles: 0,
            frames: 0,
            error: None,
        };
        match config.validate().map_err(granule_core::Error::from).and_then(|_| Ok(run_mpm(&config)?)) {
            Ok(traj) => {
                let name = format!("traj_{i:03}.gtraj");
                write_trajectory(&dir.join(&name), &traj)?;
                entry.file = Some(name);
                entry.particles = traj.num_particles();
                entry.frames = traj.frames.len();
                info!("trajectory {i}: {width:.2} x {height:.2} m, {} particles, {:.1?}", entry.particles, t.elapsed());
            }
            Err(e) => {
                warn!("trajectory {i} failed: {e}");
                entry.error = Some(e.to_string());
            }
        }
        entries.push(entry);
    }
    let manifest = Manifest {
        seed: spec.seed,
        spacing: d.spacing,
        trajectories: entries,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    let ok = manifest.trajectories.iter().filter(|e| e.file.is_some()).count();
    println!("{ok}/{count} trajectories written to {}", dir.display());
    if ok == 0 {
        return Err(CliError::Runtime("every simulation failed".into()));
    }
    Ok(manifest)
}

fn load_dataset(ws: &Workspace) -> Result<Vec<RolloutResult>, CliError> {
    let dir = ws.data();
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let mut out = Vec::new();
    for e in &manifest.trajectories {
        if let Some(f) = &e.file {
            out.push(read_trajectory(&dir.join(f))?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation("manifest lists no usable trajectories".into()));
    }
    Ok(out)
}

fn spread(samples: Vec<TrainingSample>, cap: usize) -> Vec<TrainingSample> {
    if cap == 0 || samples.len() <= cap {
        return samples;
    }
    let n = samples.len();
    (0..cap).map(|k| samples[k * n / cap].clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub steps: u64,
    pub initial_val_loss: f64,
    pub final_val_loss: f64,
}

/// Trains the surrogate on the generated trajectories, logging losses to
/// `model/loss.csv` and checkpointing to `model/checkpoint.json`.
pub fn train(spec: &RunSpec, ws: &Workspace, steps: Option<u64>, resume: bool) -> Result<TrainSummary, CliError> {
    let steps = steps.unwrap_or(spec.train.steps);
    let t = &spec.train;
    if t.batch_size == 0 {
        return Err(CliError::Validation("batch_size must be at least 1".into()));
    }
    let trajectories = load_dataset(ws)?;
    let hold = if trajectories.len() > 1 {
        t.validation_trajectories.min(trajectories.len() - 1)
    } else {
        0
    };
    let (train_set, val_set) = trajectories.split_at(trajectories.len() - hold);
    let val_set = if val_set.is_empty() { train_set } else { val_set };
    let context = spec.gns.context_len;
    let samples: Vec<TrainingSample> = train_set.iter().flat_map(|r| windows_from(r, context)).collect();
    let val_samples = spread(val_set.iter().flat_map(|r| windows_from(r, context)).collect(), t.validation_windows);
    if samples.is_empty() || val_samples.is_empty() {
        return Err(CliError::Validation(format!(
            "trajectories are too short for a context of {context} frames"
        )));
    }

    let dir = ws.model();
    fs::create_dir_all(&dir)?;
    let ckpt_path = dir.join(CHECKPOINT);
    let loss_path = dir.join(LOSS_CSV);
    let adam = AdamConfig {
        lr: t.lr,
        final_lr: t.final_lr,
        decay_steps: t.decay_steps,
        ..AdamConfig::default()
    };

    let mut trainer = if resume {
        let ckpt = read_checkpoint(&ckpt_path)?;
        let model = ckpt.to_model()?;
        let opt = ckpt
            .optimizer
            .ok_or_else(|| CliError::Validation("checkpoint has no optimizer state to resume".into()))?;
        info!("resuming from step {}", opt.step);
        Trainer::resume(model, opt, spec.seed)?
    } else {
        let stats = compute_stats(train_set, spec.gns.noise_std);
        let model = GnsModel::new(spec.gns.clone(), spec.seed)?.with_stats(stats);
        Trainer::new(model, adam, spec.seed)?
    };

    let start = trainer.step();
    let mut log = if resume && loss_path.exists() {
        fs::OpenOptions::new().append(true).open(&loss_path)?
    } else {
        let mut f = fs::File::create(&loss_path)?;
        writeln!(f, "step,train_loss,val_loss,lr")?;
        f
    };
    let initial_val = evaluate_loss(&trainer.model, &val_samples)?;
    if !resume {
        writeln!(log, "{start},,{initial_val:.6e},{:.6e}", trainer.optimizer.learning_rate())?;
    }
    if steps == 0 {
        warn!("zero training steps; writing the untrained model");
    }

    let end = start + steps;
    let mut running = 0.0;
    let mut since = 0u64;
    let mut last_val = initial_val;
    let clock = Instant::now();
    for step in start + 1..=end {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let batch: Vec<TrainingSample> = (0..t.batch_size)
            .map(|_| samples[rng.random_range(0..samples.len())].clone())
            .collect();
        let loss = trainer.train_step(&batch)?;
        running += loss;
        since += 1;
        let validate = t.validation_every > 0 && step % t.validation_every == 0;
        if validate || step == end {
            last_val = evaluate_loss(&trainer.model, &val_samples)?;
            writeln!(
                log,
                "{step},{:.6e},{last_val:.6e},{:.6e}",
                running / since as f64,
                trainer.optimizer.learning_rate()
            )?;
            info!("step {step}: train {:.4e} val {last_val:.4e} ({:.1?})", running / since as f64, clock.elapsed());
            running = 0.0;
            since = 0;
        }
        if t.checkpoint_every > 0 && step % t.checkpoint_every == 0 {
            write_checkpoint(&ckpt_path, &Checkpoint::from_model(&trainer.model, Some(&trainer.optimizer), spec.seed))?;
        }
    }
    log.flush()?;
    write_checkpoint(&ckpt_path, &Checkpoint::from_model(&trainer.model, Some(&trainer.optimizer), spec.seed))?;
    println!(
        "trained {steps} steps (now at {}); validation loss {initial_val:.4e} -> {last_val:.4e}; checkpoint {}",
        trainer.step(),
        ckpt_path.display()
    );
    Ok(TrainSummary {
        checkpoint: ckpt_path,
        steps: trainer.step(),
        initial_val_loss: initial_val,
        final_val_loss: last_val,
    })
}

/// Identifiers become file names; keep them tame.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSummary {
    pub path: PathBuf,
    pub frames: usize,
    pub wall_s: f64,
}

/// Predicts the held-out column from rest.
pub fn rollout(
    spec: &RunSpec,
    ws: &Workspace,
    checkpoint: Option<&Path>,
    steps: Option<usize>,
    vtp: bool,
    id: &str,
) -> Result<RolloutSummary, CliError> {
    if !valid_id(id) {
        return Err(CliError::Validation(format!("rollout id {id:?} must be 1-64 of [A-Za-z0-9_-]")));
    }
    let steps = steps.unwrap_or(spec.rollout.steps);
    if steps == 0 {
        return Err(CliError::Validation("steps must be at least 1".into()));
    }
    let ckpt_path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| ws.model().join(CHECKPOINT));
    let model = read_checkpoint(&ckpt_path)?.to_model()?;
    let column = spec.held_out_column();
    column.validate()?;
    let rest: Vec<f64> = init_column::<2>(&column)?
        .iter()
        .flat_map(|p| p.position.iter().copied().collect::<Vec<_>>())
        .collect();
    let window = vec![rest; model.config.context_len + 1];
    let clock = Instant::now();
    let result = gns_rollout(&model, &window, &column.domain, steps, spec.rollout.dt)?;
    let wall_s = clock.elapsed().as_secs_f64();
    let dir = ws.rollouts();
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{id}.gtraj"));
    write_trajectory(&path, &result)?;
    if vtp {
        let vdir = dir.join(format!("{id}_vtp"));
        fs::create_dir_all(&vdir)?;
        for (k, f) in result.frames.iter().enumerate() {
            export_vtp(f, &vdir.join(format!("frame_{k:04}.vtp")))?;
        }
    }
    println!(
        "rollout {id}: {} frames of {} particles in {wall_s:.2} s -> {}",
        result.frames.len(),
        result.num_particles(),
        path.display()
    );
    Ok(RolloutSummary {
        path,
        frames: result.frames.len(),
        wall_s,
    })
}

/// Derives the in situ configuration from a rollout.
pub fn harvest(
    spec: &RunSpec,
    ws: &Workspace,
    rollout_path: &Path,
    cameras: Option<&Path>,
    label: &str,
) -> Result<InSituConfig, CliError> {
    let rollout = read_trajectory(rollout_path)?;
    let p = &spec.harvest;
    let cameras: Vec<Camera> = match cameras {
        Some(path) => read_json(path)?,
        None => Camera::presets(&rollout.bounds, p.image_width, p.image_height),
    };
    let h = harvest_rollout(label, &rollout, &cameras, p)?;
    let dir = ws.configs();
    fs::create_dir_all(&dir)?;
    write_config(&dir.join("insitu.json"), &h.config)?;
    write_json(&ws.root.join("harvest.json"), &h)?;
    for flag in &h.config.flags {
        warn!("harvest flag: {flag}");
    }
    if h.phases.detected {
        println!(
            "initiation ends at rollout frame {} (step {} of {})",
            h.phases.initiation_end_frame, h.phases.initiation_end_step, h.phases.total_steps
        );
    } else {
        println!("no flow phase detected; early view only");
    }
    for (view, n) in h.config.planned_per_view() {
        let [a, b] = h.config.window(&view);
        println!("  {view:<8} steps {a:>6}..{b:<6} {n} images");
    }
    println!("{} images planned -> {}", h.config.planned_image_count(), dir.join("insitu.json").display());
    Ok(h.config)
}

/// Every view over the whole run at the same cadence: the config's cameras
/// plus any standard preset it dropped, framed on `domain`.
pub fn baseline_of(config: &InSituConfig, domain: &Bounds) -> InSituConfig {
    let (w, h) = config.cameras.first().map_or((320, 240), |c| (c.width, c.height));
    let mut cameras = config.cameras.clone();
    for preset in Camera::presets(domain, w, h) {
        if !cameras.iter().any(|c| c.name == preset.name) {
            cameras.push(preset);
        }
    }
    let mut c = InSituConfig::full_window(
        &format!("{}-baseline", config.run_label),
        cameras,
        config.colormap.clone(),
        config.total_steps,
        config.cadence,
        config.particle_radius,
    );
    c.scalar_field = config.scalar_field;
    c
}

#[derive(Debug, Clone, Default)]
pub struct InsituArgs {
    pub config: Option<PathBuf>,
    pub baseline: bool,
    pub ranks: Option<usize>,
    pub run_name: Option<String>,
    pub dry_run: bool,
    pub no_images: bool,
}

/// Couples the MPM solver to the rendering consumer under `config`.
pub fn insitu_run(spec: &RunSpec, ws: &Workspace, args: &InsituArgs) -> Result<Option<PathBuf>, CliError> {
    let path = args.config.clone().unwrap_or_else(|| ws.configs().join("insitu.json"));
    let mut config = read_config(&path)?;
    let sim_config = spec.sim.to_config();
    sim_config.validate()?;
    if args.baseline {
        config = baseline_of(&config, &sim_config.domain);
    }
    config.validate()?;
    let name = args
        .run_name
        .clone()
        .unwrap_or_else(|| if args.baseline { "baseline".into() } else { "informed".into() });
    if !valid_id(&name) {
        return Err(CliError::Validation(format!("run name {name:?} must be 1-64 of [A-Za-z0-9_-]")));
    }
    if config.total_steps != sim_config.total_steps {
        warn!(
            "config covers {} steps, simulation runs {}; stopping at the shorter",
            config.total_steps, sim_config.total_steps
        );
    }
    println!("{name}: {} images planned", config.planned_image_count());
    for (view, n) in config.planned_per_view() {
        println!("  {view:<8} {n}");
    }
    if args.dry_run {
        return Ok(None);
    }
    let dir = ws.runs().join(&name);
    fs::create_dir_all(&dir)?;
    let options = PipelineOptions {
        run_name: name.clone(),
        ranks: args.ranks.unwrap_or(spec.insitu.ranks),
        channel_capacity: spec.insitu.channel_capacity,
        output_dir: (!args.no_images).then(|| dir.join("images")),
    };
    let mut sim = Simulation::new(sim_config)?;
    let outcome = run_pipeline(&mut sim, &config, &options)?;
    let report_path = dir.join("report.json");
    write_report(&report_path, &outcome.report)?;
    write_timings_csv(&dir.join("timings.csv"), &outcome.records)?;
    print!("{}", outcome.report.table());
    match outcome.failure {
        Some(e) => Err(CliError::Core(e)),
        None => Ok(Some(report_path)),
    }
}

/// Prints one report, or the savings of the second over the first.
pub fn report(paths: &[PathBuf]) -> Result<String, CliError> {
    let mut out = String::new();
    match paths {
        [one] => out.push_str(&read_report(one)?.table()),
        [baseline, informed] => {
            let b = read_report(baseline)?;
            let i = read_report(informed)?;
            out.push_str(&b.table());
            out.push('\n');
            out.push_str(&i.table());
            let s = compare_runs(&b, &i)?;
            out.push_str(&format!(
                "\nimages    {} -> {} ({:.1}% fewer)\nrender    {:.3} s -> {:.3} s ({:.1}% less)\nwall      {:.3} s -> {:.3} s\n",
                s.baseline_images,
                s.informed_images,
                100.0 * s.image_savings,
                s.baseline_render_s,
                s.informed_render_s,
                100.0 * s.render_savings,
                b.wall_s,
                i.wall_s
            ));
        }
        _ => return Err(CliError::Validation("report takes one or two report files".into())),
    }
    print!("{out}");
    Ok(out)
}
