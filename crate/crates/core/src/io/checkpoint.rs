use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::gns::{FeatureStats, GnsConfig, GnsModel};
use crate::neural::OptimizerState;

pub const CHECKPOINT_VERSION: u32 = 1;
const KIND: &str = "gns-checkpoint";

/// Model parameters, normalization statistics and training state as JSON.
/// Floats are written in shortest round-trip form, so loading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub kind: String,
    pub version: u32,
    pub config: GnsConfig,
    pub stats: Option<FeatureStats>,
    /// Layer sizes of every MLP, in parameter order.
    pub layer_sizes: Vec<Vec<usize>>,
    pub params: Vec<f64>,
    pub optimizer: Option<OptimizerState>,
    /// Optimizer steps taken.
    pub step: u64,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_model(model: &GnsModel, optimizer: Option<&OptimizerState>, seed: u64) -> Self {
        Self {
            kind: KIND.to_string(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            stats: model.stats().ok().cloned(),
            layer_sizes: model.mlps().iter().map(|m| m.layer_sizes().to_vec()).collect(),
            params: model.params(),
            optimizer: optimizer.cloned(),
            step: optimizer.map_or(0, |o| o.step),
            seed,
        }
    }

    pub fn to_model(&self) -> Result<GnsModel, crate::Error> {
        let mut model = GnsModel::new(self.config.clone(), 0)?;
        let sizes: Vec<Vec<usize>> = model.mlps().iter().map(|m| m.layer_sizes().to_vec()).collect();
        if sizes != self.layer_sizes {
            return Err(FormatError::Malformed("layer sizes do not match the stored config".into()).into());
        }
        model.set_params(&self.params)?;
        if let Some(stats) = &self.stats {
            model = model.with_stats(stats.clone());
        }
        model.validate()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), FormatError> {
        if self.kind != KIND {
            return Err(FormatError::BadMagic { expected: "checkpoint" });
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(FormatError::VersionMismatch {
                what: "checkpoint",
                found: self.version,
                supported: CHECKPOINT_VERSION,
            });
        }
        Ok(())
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), FormatError> {
    let json = serde_json::to_vec(checkpoint)?;
    // write-then-rename keeps the previous checkpoint intact on failure
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, json)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, FormatError> {
    let c: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
    c.check()?;
    Ok(c)
}
