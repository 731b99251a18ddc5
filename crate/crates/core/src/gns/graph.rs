use std::collections::HashMap;

use super::GnsError;
use crate::frame::Bounds;

/// Directed edge lists of a radius graph.
///
/// Edges are grouped by receiver in ascending order. Within one receiver the
/// senders are sorted by distance and then by coordinates, so the order never
/// depends on particle labels and per-node sums are reproducible under any
/// relabelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub num_nodes: usize,
    pub senders: Vec<usize>,
    pub receivers: Vec<usize>,
}

impl Connectivity {
    pub fn num_edges(&self) -> usize {
        self.senders.len()
    }

    pub fn check(&self) -> Result<(), GnsError> {
        for (edge, (&s, &r)) in self.senders.iter().zip(&self.receivers).enumerate() {
            for node in [s, r] {
                if node >= self.num_nodes {
                    return Err(GnsError::DanglingEdge {
                        edge,
                        node,
                        num_nodes: self.num_nodes,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Connects every ordered pair `(i, j)`, `i != j`, with `|x_i - x_j| <= radius`.
///
/// Candidates come from a cell list with cell size `radius`; `bounds` only
/// anchors the cell lattice.
pub fn build_graph(positions: &[f64], dim: usize, radius: f64, bounds: &Bounds) -> Result<Connectivity, GnsError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GnsError::Radius(radius));
    }
    let n = positions.len() / dim;
    if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
        return Err(GnsError::NonFinitePosition(i / dim));
    }
    let cell_of = |i: usize| -> [i64; 3] {
        let mut key = [0i64; 3];
        for (a, k) in key.iter_mut().enumerate().take(dim) {
            *k = ((positions[i * dim + a] - bounds.lo[a]) / radius).floor() as i64;
        }
        key
    };
    let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..n {
        cells.entry(cell_of(i)).or_default().push(i);
    }
    let r2 = radius * radius;
    let offsets: Vec<[i64; 3]> = neighbor_offsets(dim);
    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        let xi = &positions[i * dim..(i + 1) * dim];
        let base = cell_of(i);
        candidates.clear();
        for off in &offsets {
            let key = [base[0] + off[0], base[1] + off[1], base[2] + off[2]];
            let Some(members) = cells.get(&key) else { continue };
            for &j in members {
                if j == i {
                    continue;
                }
                let xj = &positions[j * dim..(j + 1) * dim];
                let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= r2 {
                    candidates.push((d2, j));
                }
            }
        }
        candidates.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let pa = &positions[a.1 * dim..(a.1 + 1) * dim];
                let pb = &positions[b.1 * dim..(b.1 + 1) * dim];
                pa.iter()
                    .zip(pb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        for &(_, j) in &candidates {
            senders.push(j);
            receivers.push(i);
        }
    }
    Ok(Connectivity {
        num_nodes: n,
        senders,
        receivers,
    })
}

fn neighbor_offsets(dim: usize) -> Vec<[i64; 3]> {
    let range = |a: usize| if a < dim { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for x in range(0) {
        for y in range(1) {
            for z in range(2) {
                out.push([x, y, z]);
            }
        }
    }
    out
}
