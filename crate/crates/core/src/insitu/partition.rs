use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{FrameShard, PipelineError};
use crate::frame::ParticleFrame;

/// Axis-aligned box owning a set of particles of the assembled frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub rank: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Indices into the assembled frame.
    pub indices: Vec<usize>,
}

/// Splits a frame by static ownership: rank `r` holds a contiguous block of
/// particle ids, as a domain-decomposed simulation would after start-up.
pub fn split_into_ranks(frame: &ParticleFrame, ranks: usize) -> Vec<FrameShard> {
    let n = frame.len();
    let d = frame.dim;
    (0..ranks)
        .map(|r| {
            let (a, b) = (r * n / ranks, (r + 1) * n / ranks);
            FrameShard {
                rank: r as u32,
                step: frame.step,
                time: frame.time,
                dim: d,
                ids: (a as u64..b as u64).collect(),
                positions: frame.positions[a * d..b * d].to_vec(),
                velocities: frame.velocities[a * d..b * d].to_vec(),
                displacement: frame.displacement[a..b].to_vec(),
            }
        })
        .collect()
}

/// Merges rank shards into one frame ordered by global id.
pub fn assemble(shards: &[FrameShard]) -> Result<ParticleFrame, PipelineError> {
    let first = shards.first().ok_or(PipelineError::Count("shard"))?;
    let (dim, step) = (first.dim, first.step);
    let mut order: Vec<(u64, usize, usize)> = Vec::new();
    for (s, shard) in shards.iter().enumerate() {
        if shard.dim != dim || shard.step != step {
            return Err(PipelineError::ShardMismatch(format!(
                "rank {} sent dim {} step {}, expected dim {dim} step {step}",
                shard.rank, shard.dim, shard.step
            )));
        }
        let n = shard.ids.len();
        if shard.positions.len() != n * dim || shard.velocities.len() != n * dim || shard.displacement.len() != n {
            return Err(PipelineError::ShardMismatch(format!("rank {} field lengths disagree", shard.rank)));
        }
        order.extend(shard.ids.iter().enumerate().map(|(i, &id)| (id, s, i)));
    }
    order.sort_unstable();
    if let Some(w) = order.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(PipelineError::DuplicateParticle(w[0].0));
    }
    let mut frame = ParticleFrame {
        step,
        time: first.time,
        dim,
        positions: Vec::with_capacity(order.len() * dim),
        velocities: Vec::with_capacity(order.len() * dim),
        displacement: Vec::with_capacity(order.len()),
    };
    for &(_, s, i) in &order {
        let sh = &shards[s];
        frame.positions.extend_from_slice(&sh.positions[i * dim..(i + 1) * dim]);
        frame.velocities.extend_from_slice(&sh.velocities[i * dim..(i + 1) * dim]);
        frame.displacement.push(sh.displacement[i]);
    }
    Ok(frame)
}

fn split(frame: &ParticleFrame, mut indices: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>, parts: usize, out: &mut Vec<Partition>) {
    if parts == 1 {
        out.push(Partition {
            rank: out.len(),
            lo,
            hi,
            indices,
        });
        return;
    }
    let axis = (0..lo.len())
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .expect("dim >= 2");
    indices.sort_by(|&a, &b| {
        frame.position(a)[axis]
            .total_cmp(&frame.position(b)[axis])
            .then(a.cmp(&b))
    });
    let left_parts = parts / 2;
    let m = indices.len() * left_parts / parts;
    let plane = match (m.checked_sub(1).map(|i| indices[i]), indices.get(m)) {
        (Some(a), Some(&b)) => 0.5 * (frame.position(a)[axis] + frame.position(b)[axis]),
        (None, Some(&b)) => frame.position(b)[axis],
        (Some(a), None) => frame.position(a)[axis],
        (None, None) => 0.5 * (lo[axis] + hi[axis]),
    };
    let right = indices.split_off(m);
    let (mut left_hi, mut right_lo) = (hi.clone(), lo.clone());
    left_hi[axis] = plane;
    right_lo[axis] = plane;
    split(frame, indices, lo, left_hi, left_parts, out);
    split(frame, right, right_lo, hi, parts - left_parts, out);
}

/// Assembles the shards and re-bins particles into `parts` disjoint boxes by
/// recursive median splits along the longest box axis.
pub fn repartition(shards: &[FrameShard], parts: usize) -> Result<(ParticleFrame, Vec<Partition>), PipelineError> {
    if parts == 0 {
        return Err(PipelineError::Count("partition"));
    }
    let frame = assemble(shards)?;
    let dim = frame.dim;
    let (mut lo, mut hi) = (vec![0.0; dim], vec![0.0; dim]);
    if !frame.is_empty() {
        lo = vec![f64::INFINITY; dim];
        hi = vec![f64::NEG_INFINITY; dim];
        for i in 0..frame.len() {
            for (a, x) in frame.position(i).iter().enumerate() {
                lo[a] = lo[a].min(*x);
                hi[a] = hi[a].max(*x);
            }
        }
    }
    let mut out = Vec::with_capacity(parts);
    split(&frame, (0..frame.len()).collect(), lo, hi, parts, &mut out);
    debug_assert_eq!(
        out.iter().flat_map(|p| p.indices.iter()).collect::<HashSet<_>>().len(),
        frame.len()
    );
    Ok((frame, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> ParticleFrame {
        let pos = xs.iter().flat_map(|&x| [x, 0.0]).collect();
        ParticleFrame::at_rest(0, 0.0, 2, pos).unwrap()
    }

    #[test]
    fn median_split_of_four() {
        let f = line(&[3.0, 1.0, 4.0, 2.0]);
        let (frame, parts) = repartition(&split_into_ranks(&f, 2), 2).unwrap();
        assert_eq!(frame, f);
        let xs = |p: &Partition| {
            let mut v: Vec<f64> = p.indices.iter().map(|&i| frame.position(i)[0]).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(xs(&parts[0]), vec![1.0, 2.0]);
        assert_eq!(xs(&parts[1]), vec![3.0, 4.0]);
        assert_eq!(parts[0].hi[0], 2.5);
        assert_eq!(parts[1].lo[0], 2.5);
    }

    #[test]
    fn more_parts_than_particles_keeps_boxes_tight() {
        let f = line(&[0.2, 0.9]);
        let (frame, parts) = repartition(&split_into_ranks(&f, 1), 3).unwrap();
        for p in &parts {
            for &i in &p.indices {
                let x = frame.position(i)[0];
                assert!(p.lo[0] <= x && x <= p.hi[0], "{x} outside {:?}..{:?}", p.lo, p.hi);
            }
        }
    }

    #[test]
    fn single_partition_is_identity() {
        let f = line(&[0.5, 0.1, 0.9]);
        let (_, parts) = repartition(&split_into_ranks(&f, 1), 1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].indices, vec![0, 1, 2]);
    }

    #[test]
    fn duplicates_rejected() {
        let f = line(&[0.5, 0.1]);
        let mut shards = split_into_ranks(&f, 2);
        shards[1].ids[0] = 0;
        assert!(matches!(repartition(&shards, 2), Err(PipelineError::DuplicateParticle(0))));
    }

    #[test]
    fn empty_frame() {
        let f = ParticleFrame::empty(2);
        let (frame, parts) = repartition(&split_into_ranks(&f, 3), 4).unwrap();
        assert!(frame.is_empty());
        assert_eq!(parts.len(), 4);
        assert!(parts.iter().all(|p| p.indices.is_empty()));
    }
}
