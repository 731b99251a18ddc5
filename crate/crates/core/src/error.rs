//! Crate-level error type aggregating the per-module errors.

use thiserror::Error;

use crate::frame::FrameError;
use crate::gns::GnsError;
use crate::harvest::{HarvestError, ValidationErrors};
use crate::insitu::PipelineError;
use crate::io::FormatError;
use crate::mpm::MpmError;
use crate::neural::NeuralError;
use crate::render::RenderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Gns(#[from] GnsError),
    #[error(transparent)]
    Mpm(#[from] MpmError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Harvest(#[from] HarvestError),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl Error {
    /// True when the failure is a numerical blow-up rather than bad input or I/O.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Gns(e) => e.is_divergence(),
            Error::Mpm(e) => e.is_divergence(),
            Error::Neural(NeuralError::NonFinite { .. }) => true,
            _ => false,
        }
    }

    /// True when the failure is a rejected input (configuration, geometry, schema).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) => true,
            Error::Harvest(_) => true,
            Error::Frame(_) => true,
            Error::Mpm(e) => e.is_validation(),
            Error::Format(FormatError::Config(_)) => true,
            _ => false,
        }
    }
}
