use std::io::Read;

use serde::{Deserialize, Serialize};

use super::bytes::{Reader, Writer};
use super::FormatError;

const MAGIC: &[u8; 4] = b"GSHD";
pub const WIRE_VERSION: u32 = 1;
/// Largest accepted payload, bytes.
const MAX_PAYLOAD: usize = 1 << 30;

/// The particles one simulation rank holds at one step. `ids` are global
/// particle indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameShard {
    pub rank: u32,
    pub step: u64,
    pub time: f64,
    pub dim: usize,
    pub ids: Vec<u64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl FrameShard {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// u32 payload length followed by the payload.
pub fn encode_shard(shard: &FrameShard) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(WIRE_VERSION);
    w.u32(shard.rank);
    w.u64(shard.step);
    w.f64(shard.time);
    w.u32(shard.dim as u32);
    w.u64(shard.ids.len() as u64);
    for id in &shard.ids {
        w.u64(*id);
    }
    w.f64s(&shard.positions);
    w.f64s(&shard.velocities);
    w.f64s(&shard.displacement);
    let mut out = Vec::with_capacity(w.buf.len() + 4);
    out.extend_from_slice(&(w.buf.len() as u32).to_le_bytes());
    out.extend_from_slice(&w.buf);
    out
}

fn decode_payload(payload: &[u8]) -> Result<FrameShard, FormatError> {
    let mut r = Reader::new(payload, "frame shard");
    if r.take(4)? != MAGIC {
        return Err(FormatError::BadMagic { expected: "frame shard" });
    }
    let version = r.u32()?;
    if version != WIRE_VERSION {
        return Err(FormatError::VersionMismatch {
            what: "frame shard",
            found: version,
            supported: WIRE_VERSION,
        });
    }
    let rank = r.u32()?;
    let step = r.u64()?;
    let time = r.f64()?;
    let dim = r.u32()? as usize;
    if !(2..=3).contains(&dim) {
        return Err(FormatError::Malformed(format!("dimension {dim}")));
    }
    let n = r.u64()? as usize;
    if n > r.remaining() / 8 {
        return Err(FormatError::Truncated {
            what: "frame shard",
            needed: n.saturating_mul(8),
            available: r.remaining(),
        });
    }
    let ids = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let positions = r.f64s(n * dim)?;
    let velocities = r.f64s(n * dim)?;
    let displacement = r.f64s(n)?;
    if r.remaining() != 0 {
        return Err(FormatError::Malformed(format!("{} trailing bytes in shard", r.remaining())));
    }
    Ok(FrameShard {
        rank,
        step,
        time,
        dim,
        ids,
        positions,
        velocities,
        displacement,
    })
}

/// Decodes one length-prefixed shard occupying all of `data`.
pub fn decode_shard(data: &[u8]) -> Result<FrameShard, FormatError> {
    let mut r = Reader::new(data, "frame shard");
    let len = r.u32()? as usize;
    let payload = r.take(len)?;
    if r.remaining() != 0 {
        return Err(FormatError::Malformed("bytes after shard payload".into()));
    }
    decode_payload(payload)
}

/// Reads the next shard from a stream; `None` on a clean end of stream.
pub fn read_shard<R: Read>(reader: &mut R) -> Result<Option<FrameShard>, FormatError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let k = reader.read(&mut len[got..])?;
        if k == 0 {
            return if got == 0 {
                Ok(None)
            } else {
                Err(FormatError::Truncated {
                    what: "shard length",
                    needed: 4,
                    available: got,
                })
            };
        }
        got += k;
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_PAYLOAD {
        return Err(FormatError::Malformed(format!("shard payload of {len} bytes")));
    }
    let mut payload = vec![0u8; len];
    reader.read_exact(&mut payload).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => FormatError::Truncated {
            what: "frame shard",
            needed: len,
            available: 0,
        },
        _ => FormatError::Io(e),
    })?;
    decode_payload(&payload).map(Some)
}
