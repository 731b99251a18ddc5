//! Learned graph network simulator.
//!
//! Particles become graph nodes connected within a radius. An encoder embeds
//! node and edge features into latents, `M` message-passing blocks propagate
//! interactions, and a decoder reads out per-particle accelerations that a
//! semi-implicit Euler step turns into the next positions.
//!
//! The network works in unit-timestep coordinates: velocities are per-step
//! displacements and accelerations per-step-squared. Physical time only enters
//! when frames are written out.

pub mod datasets;
mod features;
mod graph;
mod integrate;
mod model;
mod rollout;
mod train;

pub use features::{encode_features, FeatureStats, GraphSample, NormStats};
pub use graph::{build_graph, Connectivity};
pub use integrate::{euler_update, inverse_euler_acceleration};
pub use model::{aggregate_incoming, message_passing_step, GnsConfig, GnsGrad, GnsModel};
pub use rollout::{rollout, DIVERGENCE_MARGIN};
pub use train::{compute_stats, evaluate_loss, windows_from, Trainer, TrainingSample};

use thiserror::Error;

use crate::neural::NeuralError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnsError {
    #[error("non-finite position for particle {0}")]
    NonFinitePosition(usize),
    #[error("connectivity radius must be positive, got {0}")]
    Radius(f64),
    #[error("window has {got} frames, need {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("window frames disagree on particle count or dimension")]
    WindowShape,
    #[error("edge {edge} references node {node} but the graph has {num_nodes} nodes")]
    DanglingEdge {
        edge: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("normalization statistics are not set on this model")]
    MissingStats,
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("rollout diverged at step {step}: particle {particle} left the domain by more than 10%")]
    Divergence { step: usize, particle: usize },
    #[error("non-finite training loss at step {0}")]
    NonFiniteLoss(u64),
    #[error("training batch is invalid: {0}")]
    Batch(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

impl GnsError {
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            GnsError::Divergence { .. } | GnsError::NonFiniteLoss(_) | GnsError::Neural(NeuralError::NonFinite { .. })
        )
    }
}
