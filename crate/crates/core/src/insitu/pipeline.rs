use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::time::Instant;

use super::{repartition, split_into_ranks, FrameShard, PipelineError, RunReport, TimingRecord, ViewTiming};
use crate::frame::{ParticleFrame, RolloutResult};
use crate::harvest::InSituConfig;
use crate::io::{decode_shard, encode_shard, to_config_json};
use crate::mpm::Simulation;
use crate::render::{render_grid, AccelGrid, Image};

/// A stepping simulation the pipeline can observe.
pub trait FrameSource: Send {
    fn total_steps(&self) -> u64;
    fn current_step(&self) -> u64;
    fn advance(&mut self) -> Result<(), crate::Error>;
    fn frame(&self) -> ParticleFrame;
    /// Identifies the simulated problem; equal for runs that can be compared.
    fn fingerprint(&self) -> String;
}

impl FrameSource for Simulation {
    fn total_steps(&self) -> u64 {
        self.config().total_steps
    }
    fn current_step(&self) -> u64 {
        self.steps_taken()
    }
    fn advance(&mut self) -> Result<(), crate::Error> {
        Ok(self.step()?)
    }
    fn frame(&self) -> ParticleFrame {
        Simulation::frame(self)
    }
    fn fingerprint(&self) -> String {
        self.config().hash()
    }
}

/// Replays a stored trajectory as if it were simulated, holding each frame
/// for `steps_per_frame` steps.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    rollout: RolloutResult,
    steps_per_frame: u64,
    step: u64,
}

impl ReplaySource {
    pub fn new(rollout: RolloutResult, steps_per_frame: u64) -> Result<Self, crate::Error> {
        rollout.validate()?;
        if rollout.frames.is_empty() || steps_per_frame == 0 {
            return Err(PipelineError::Count("frame and step per frame").into());
        }
        Ok(Self {
            rollout,
            steps_per_frame,
            step: 0,
        })
    }
}

impl FrameSource for ReplaySource {
    fn total_steps(&self) -> u64 {
        (self.rollout.frames.len() as u64 - 1) * self.steps_per_frame
    }
    fn current_step(&self) -> u64 {
        self.step
    }
    fn advance(&mut self) -> Result<(), crate::Error> {
        self.step += 1;
        Ok(())
    }
    fn frame(&self) -> ParticleFrame {
        let k = ((self.step / self.steps_per_frame) as usize).min(self.rollout.frames.len() - 1);
        let mut f = self.rollout.frames[k].clone();
        f.step = self.step;
        f.time = self.step as f64 * self.rollout.dt / self.steps_per_frame as f64;
        f
    }
    fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.rollout).expect("rollout serializes");
        format!("replay-{:08x}-{}", crc32fast::hash(&bytes), self.steps_per_frame)
    }
}

/// Images rendered at one step and the setup/render timings.
#[derive(Debug, Clone)]
pub struct VizOutput {
    pub images: Vec<(String, Image)>,
    pub record: TimingRecord,
}

/// Builds the acceleration structure and renders every view due at `step`.
/// A failed view is recorded in the timing record and skipped.
pub fn viz_step(frame: &ParticleFrame, config: &InSituConfig, step: u64) -> VizOutput {
    let due = config.views_due(step);
    let mut record = TimingRecord {
        step,
        receive_s: 0.0,
        setup_s: 0.0,
        render_s: 0.0,
        views: Vec::new(),
        particles: frame.len(),
    };
    let mut images = Vec::new();
    if due.is_empty() {
        return VizOutput { images, record };
    }
    let t = Instant::now();
    let centers: Vec<[f64; 3]> = (0..frame.len()).map(|i| frame.position3(i)).collect();
    let grid = AccelGrid::build(&centers, config.particle_radius);
    let scalars = frame.scalars(config.scalar_field);
    record.setup_s = t.elapsed().as_secs_f64();
    for i in due {
        let cam = &config.cameras[i];
        let t = Instant::now();
        let result = grid
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|g| render_grid(g, &scalars, cam, &config.colormap).map_err(|e| e.to_string()));
        let secs = t.elapsed().as_secs_f64();
        let error = match result {
            Ok(img) => {
                images.push((cam.name.clone(), img));
                None
            }
            Err(e) => {
                log::warn!("view {} failed at step {step}: {e}", cam.name);
                Some(e)
            }
        };
        record.views.push(ViewTiming {
            view: cam.name.clone(),
            render_s: secs,
            error,
        });
    }
    record.render_s = record.views.iter().map(|v| v.render_s).sum();
    VizOutput { images, record }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub run_name: String,
    /// Simulation ranks producing shards.
    pub ranks: usize,
    /// Bound of each channel; producers block when it is full.
    pub channel_capacity: usize,
    /// Where images go, as `<dir>/<view>/frame_<step:06>.ppm`; `None` keeps
    /// them in memory only long enough to count.
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            run_name: "run".into(),
            ranks: 2,
            channel_capacity: 2,
            output_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: RunReport,
    pub records: Vec<TimingRecord>,
    /// Why the run stopped early, when it did. The report is then partial.
    pub failure: Option<crate::Error>,
}

fn drive<S: FrameSource>(
    source: &mut S,
    config: &InSituConfig,
    ranks: usize,
    senders: Vec<SyncSender<FrameShard>>,
) -> Result<(), crate::Error> {
    let total = source.total_steps().min(config.total_steps);
    loop {
        let step = source.current_step();
        if config.is_viz_step(step) {
            let frame = source.frame();
            for (tx, shard) in senders.iter().zip(split_into_ranks(&frame, ranks)) {
                if tx.send(shard).is_err() {
                    return Err(PipelineError::Stage("consumer stopped".into()).into());
                }
            }
        }
        if step >= total {
            return Ok(());
        }
        source.advance()?;
    }
}

fn rank_loop(rx: Receiver<FrameShard>, tx: SyncSender<Vec<u8>>) {
    for shard in rx {
        if tx.send(encode_shard(&shard)).is_err() {
            return;
        }
    }
}

fn save_images(dir: &Option<PathBuf>, step: u64, images: &[(String, Image)]) -> Result<(), crate::Error> {
    if let Some(dir) = dir {
        for (view, img) in images {
            let d = dir.join(view);
            std::fs::create_dir_all(&d).map_err(crate::render::RenderError::from)?;
            img.write_ppm(&d.join(format!("frame_{step:06}.ppm")))?;
        }
    }
    Ok(())
}

/// Runs the source to the end of the config, streaming eligible frames from
/// `ranks` producer threads to this thread, which gathers, repartitions,
/// builds the acceleration grid and renders each due view.
///
/// Receive time runs from the first shard of a step reaching the consumer
/// to the repartitioned frame.
pub fn run_pipeline<S: FrameSource>(
    source: &mut S,
    config: &InSituConfig,
    options: &PipelineOptions,
) -> Result<PipelineOutcome, crate::Error> {
    config.validate()?;
    let ranks = options.ranks;
    if ranks == 0 {
        return Err(PipelineError::Count("rank").into());
    }
    let capacity = options.channel_capacity.max(1);
    let config_hash = format!("{:08x}", crc32fast::hash(to_config_json(config).as_bytes()));
    let sim_hash = source.fingerprint();
    let wall = Instant::now();

    let mut records = Vec::new();
    let mut failure: Option<crate::Error> = None;
    std::thread::scope(|scope| {
        let (out_tx, out_rx) = sync_channel::<Vec<u8>>(capacity * ranks);
        let mut rank_txs = Vec::with_capacity(ranks);
        for _ in 0..ranks {
            let (tx, rx) = sync_channel::<FrameShard>(capacity);
            rank_txs.push(tx);
            let out = out_tx.clone();
            scope.spawn(move || rank_loop(rx, out));
        }
        drop(out_tx);
        let driver = scope.spawn(|| drive(source, config, ranks, rank_txs));

        let mut pending: BTreeMap<u64, (Instant, Vec<FrameShard>)> = BTreeMap::new();
        let consumed: Result<(), crate::Error> = (|| {
            for bytes in &out_rx {
                let arrived = Instant::now();
                let shard = decode_shard(&bytes)?;
                let step = shard.step;
                let entry = pending.entry(step).or_insert_with(|| (arrived, Vec::with_capacity(ranks)));
                entry.1.push(shard);
                if entry.1.len() < ranks {
                    continue;
                }
                let (first, shards) = pending.remove(&step).expect("present");
                let (frame, _partitions) = repartition(&shards, ranks)?;
                let receive_s = first.elapsed().as_secs_f64();
                let mut out = viz_step(&frame, config, step);
                out.record.receive_s = receive_s;
                save_images(&options.output_dir, step, &out.images)?;
                records.push(out.record);
            }
            Ok(())
        })();
        drop(out_rx);
        let driven = driver.join().expect("driver thread panicked");
        failure = match (consumed, driven) {
            (Err(e), _) => Some(e),
            (Ok(()), Err(e)) => Some(e),
            (Ok(()), Ok(())) => None,
        };
    });

    let mut report = RunReport::from_records(&options.run_name, &config_hash, &sim_hash, ranks, &records);
    report.wall_s = wall.elapsed().as_secs_f64();
    if let Some(e) = &failure {
        report.partial = true;
        report.error = Some(e.to_string());
    }
    Ok(PipelineOutcome {
        report,
        records,
        failure,
    })
}
