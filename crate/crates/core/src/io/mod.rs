//! Persistent and wire formats.

mod bytes;
mod checkpoint;
mod config_doc;
mod report;
mod trajectory;
mod vtp;
mod wire;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use config_doc::{config_schema, parse_config, read_config, to_config_json, write_config};
pub use report::{read_report, read_timings_csv, write_report, write_timings_csv, TIMINGS_HEADER};
pub use trajectory::{decode_trajectory, encode_trajectory, read_trajectory, write_trajectory, TRAJECTORY_VERSION};
pub use vtp::{export_vtp, vtp_string};
pub use wire::{decode_shard, encode_shard, read_shard, FrameShard, WIRE_VERSION};

use thiserror::Error;

use crate::harvest::ValidationErrors;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not a {expected} file (bad magic)")]
    BadMagic { expected: &'static str },
    #[error("unsupported {what} version {found}, this build reads {supported}")]
    VersionMismatch {
        what: &'static str,
        found: u32,
        supported: u32,
    },
    #[error("truncated {what}: need {needed} bytes, {available} available")]
    Truncated {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("invalid config: {0}")]
    Config(ValidationErrors),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        match e.classify() {
            serde_json::error::Category::Io => FormatError::Io(e.into()),
            _ => FormatError::Malformed(e.to_string()),
        }
    }
}
