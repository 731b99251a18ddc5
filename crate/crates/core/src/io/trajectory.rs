use std::path::Path;

use super::bytes::{Reader, Writer};
use super::FormatError;
use crate::frame::{Bounds, ParticleFrame, Provenance, RolloutResult};

const MAGIC: &[u8; 8] = b"GRNTRAJ\0";
const END: &[u8; 4] = b"TEND";
pub const TRAJECTORY_VERSION: u32 = 1;
const FIELDS: [&str; 3] = ["positions", "velocities", "displacement"];

/// Layout (little endian): magic, version u32, dim u32, particles u64,
/// frames u64, dt f64, provenance u8, bounds lo/hi, field names, then per
/// frame step u64, time f64, positions, velocities, displacement; footer is
/// a CRC-32 of everything before it and an end marker.
pub fn encode_trajectory(rollout: &RolloutResult) -> Result<Vec<u8>, FormatError> {
    rollout.validate().map_err(|e| FormatError::Malformed(e.to_string()))?;
    let dim = rollout.dim();
    let n = rollout.num_particles();
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(TRAJECTORY_VERSION);
    w.u32(dim as u32);
    w.u64(n as u64);
    w.u64(rollout.frames.len() as u64);
    w.f64(rollout.dt);
    w.u8(match rollout.provenance {
        Provenance::Surrogate => 0,
        Provenance::GroundTruth => 1,
    });
    w.f64s(&rollout.bounds.lo);
    w.f64s(&rollout.bounds.hi);
    w.u32(FIELDS.len() as u32);
    for f in FIELDS {
        w.str(f);
    }
    for f in &rollout.frames {
        w.u64(f.step);
        w.f64(f.time);
        w.f64s(&f.positions);
        w.f64s(&f.velocities);
        w.f64s(&f.displacement);
    }
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.bytes(END);
    Ok(w.buf)
}

pub fn decode_trajectory(data: &[u8]) -> Result<RolloutResult, FormatError> {
    let mut r = Reader::new(data, "trajectory");
    if r.take(MAGIC.len()).map_err(|_| FormatError::BadMagic { expected: "trajectory" })? != MAGIC {
        return Err(FormatError::BadMagic { expected: "trajectory" });
    }
    let version = r.u32()?;
    if version != TRAJECTORY_VERSION {
        return Err(FormatError::VersionMismatch {
            what: "trajectory",
            found: version,
            supported: TRAJECTORY_VERSION,
        });
    }
    let dim = r.u32()? as usize;
    if !(2..=3).contains(&dim) {
        return Err(FormatError::Malformed(format!("dimension {dim}")));
    }
    let n = r.u64()? as usize;
    let frames = r.u64()? as usize;
    let dt = r.f64()?;
    let provenance = match r.u8()? {
        0 => Provenance::Surrogate,
        1 => Provenance::GroundTruth,
        p => return Err(FormatError::Malformed(format!("provenance tag {p}"))),
    };
    let lo = r.f64s(dim)?;
    let hi = r.f64s(dim)?;
    let nfields = r.u32()? as usize;
    let mut names = Vec::new();
    for _ in 0..nfields.min(16) {
        names.push(r.str()?);
    }
    if names != FIELDS {
        return Err(FormatError::Malformed(format!("unexpected field list {names:?}")));
    }

    let frame_bytes = n
        .checked_mul(2 * dim + 1)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(16))
        .ok_or_else(|| FormatError::Malformed("size overflow".into()))?;
    let body = frames
        .checked_mul(frame_bytes)
        .ok_or_else(|| FormatError::Malformed("size overflow".into()))?;
    let total = r.position().saturating_add(body).saturating_add(4 + END.len());
    if data.len() < total {
        return Err(FormatError::Truncated {
            what: "trajectory",
            needed: total,
            available: data.len(),
        });
    }
    if data.len() > total {
        return Err(FormatError::Malformed(format!("{} trailing bytes", data.len() - total)));
    }
    let crc_at = total - 4 - END.len();
    let stored = u32::from_le_bytes(data[crc_at..crc_at + 4].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&data[..crc_at]);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }
    if &data[total - END.len()..] != END {
        return Err(FormatError::Malformed("missing end marker".into()));
    }

    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let step = r.u64()?;
        let time = r.f64()?;
        let positions = r.f64s(n * dim)?;
        let velocities = r.f64s(n * dim)?;
        let displacement = r.f64s(n)?;
        out.push(ParticleFrame {
            step,
            time,
            dim,
            positions,
            velocities,
            displacement,
        });
    }
    let rollout = RolloutResult {
        frames: out,
        dt,
        provenance,
        bounds: Bounds { lo, hi },
    };
    rollout.validate().map_err(|e| FormatError::Malformed(e.to_string()))?;
    Ok(rollout)
}

pub fn write_trajectory(path: &Path, rollout: &RolloutResult) -> Result<(), FormatError> {
    std::fs::write(path, encode_trajectory(rollout)?)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<RolloutResult, FormatError> {
    decode_trajectory(&std::fs::read(path)?)
}
