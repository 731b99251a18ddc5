//! Instrumented in situ loop: simulation ranks stream shards to a single
//! visualization consumer that times receive, setup and render per step.

mod partition;
mod pipeline;
mod report;

pub use crate::io::FrameShard;
pub use partition::{assemble, repartition, split_into_ranks, Partition};
pub use pipeline::{run_pipeline, viz_step, FrameSource, PipelineOptions, PipelineOutcome, ReplaySource, VizOutput};
pub use report::{compare_runs, RunReport, Savings, StageStats, TimingRecord, ViewTiming};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("particle id {0} delivered by more than one rank")]
    DuplicateParticle(u64),
    #[error("shards disagree: {0}")]
    ShardMismatch(String),
    #[error("need at least one {0}")]
    Count(&'static str),
    #[error("runs simulate different configs ({baseline} vs {informed})")]
    MismatchedRuns { baseline: String, informed: String },
    #[error("pipeline stage failed: {0}")]
    Stage(String),
}
