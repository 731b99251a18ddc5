//! Dense neural-network substrate: multilayer perceptrons with hand-written
//! reverse-mode gradients and an adaptive-moment optimizer.
//!
//! Everything is `f64` so analytic gradients can be checked against central
//! finite differences.

mod mlp;
mod optim;

pub use mlp::{loss_gradient, mse, Activation, GradientTape, Mlp, MlpGrad};
pub use optim::{AdamConfig, OptimizerState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("invalid layer sizes {0:?}: need at least two positive sizes")]
    LayerSizes(Vec<usize>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
}
