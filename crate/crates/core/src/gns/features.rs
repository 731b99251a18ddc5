use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::graph::{build_graph, Connectivity};
use super::model::GnsConfig;
use super::GnsError;
use crate::frame::Bounds;

/// Per-axis mean and standard deviation of one vector channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), GnsError> {
        if self.mean.len() != dim || self.std.len() != dim {
            return Err(GnsError::Config(format!(
                "normalization stats must have {dim} components"
            )));
        }
        if self.std.iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(GnsError::Config("normalization std must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Dataset statistics used to normalize velocities and accelerations
/// (both in unit-timestep coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub velocity: NormStats,
    pub acceleration: NormStats,
}

impl FeatureStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            velocity: NormStats::identity(dim),
            acceleration: NormStats::identity(dim),
        }
    }
}

/// Graph with raw (pre-encoder) node, edge and global features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub connectivity: Connectivity,
    /// `(num_nodes, context_len * dim + 2 * dim)`: normalized velocity history,
    /// then clipped distances to the lower and upper wall of each axis.
    pub node_features: Array2<f64>,
    /// `(num_edges, dim + 1)`: sender minus receiver displacement over the
    /// radius, then its norm.
    pub edge_features: Array2<f64>,
    pub globals: Vec<f64>,
}

impl GraphSample {
    pub fn num_nodes(&self) -> usize {
        self.connectivity.num_nodes
    }
}

/// Checks a window of `context_len + 1` position frames and returns the particle count.
pub(crate) fn check_window(window: &[Vec<f64>], config: &GnsConfig) -> Result<usize, GnsError> {
    let expected = config.context_len + 1;
    if window.len() != expected {
        return Err(GnsError::WindowLength {
            expected,
            got: window.len(),
        });
    }
    let len = window[0].len();
    if !len.is_multiple_of(config.dim) || window.iter().any(|f| f.len() != len) {
        return Err(GnsError::WindowShape);
    }
    Ok(len / config.dim)
}

/// Builds the input graph for one prediction from a history of positions.
pub fn encode_features(
    window: &[Vec<f64>],
    bounds: &Bounds,
    config: &GnsConfig,
    stats: &FeatureStats,
) -> Result<GraphSample, GnsError> {
    let n = check_window(window, config)?;
    let dim = config.dim;
    let c = config.context_len;
    let r = config.radius;
    let current = &window[c];
    let connectivity = build_graph(current, dim, r, bounds)?;

    let node_width = c * dim + 2 * dim;
    let mut node_features = Array2::zeros((n, node_width));
    for i in 0..n {
        let mut row = node_features.row_mut(i);
        for k in 0..c {
            for a in 0..dim {
                let v = window[k + 1][i * dim + a] - window[k][i * dim + a];
                row[k * dim + a] = (v - stats.velocity.mean[a]) / stats.velocity.std[a];
            }
        }
        for a in 0..dim {
            let x = current[i * dim + a];
            row[c * dim + 2 * a] = ((x - bounds.lo[a]) / r).clamp(-1.0, 1.0);
            row[c * dim + 2 * a + 1] = ((bounds.hi[a] - x) / r).clamp(-1.0, 1.0);
        }
    }

    let e = connectivity.num_edges();
    let mut edge_features = Array2::zeros((e, dim + 1));
    for k in 0..e {
        let (s, rcv) = (connectivity.senders[k], connectivity.receivers[k]);
        let mut norm2 = 0.0;
        for a in 0..dim {
            let d = (current[s * dim + a] - current[rcv * dim + a]) / r;
            edge_features[[k, a]] = d;
            norm2 += d * d;
        }
        edge_features[[k, dim]] = norm2.sqrt();
    }

    Ok(GraphSample {
        connectivity,
        node_features,
        edge_features,
        globals: vec![0.0; config.global_size],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> GnsConfig {
        GnsConfig {
            dim: 2,
            context_len: 3,
            radius: 0.1,
            ..GnsConfig::default()
        }
    }

    fn bounds() -> Bounds {
        Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn stationary_particle_has_zero_velocity() {
        let window = vec![vec![0.5, 0.5]; 4];
        let g = encode_features(&window, &bounds(), &config(), &FeatureStats::identity(2)).unwrap();
        assert!(g.node_features.row(0).iter().take(6).all(|v| *v == 0.0));
        // Far from every wall: all four clipped distances saturate at 1.
        assert!(g.node_features.row(0).iter().skip(6).all(|v| *v == 1.0));
    }

    #[test]
    fn finite_difference_velocity() {
        let window: Vec<Vec<f64>> = (0..4).map(|k| vec![0.5 + 0.001 * k as f64, 0.5]).collect();
        let g = encode_features(&window, &bounds(), &config(), &FeatureStats::identity(2)).unwrap();
        for k in 0..3 {
            assert!((g.node_features[[0, 2 * k]] - 0.001).abs() < 1e-15);
            assert_eq!(g.node_features[[0, 2 * k + 1]], 0.0);
        }
    }

    #[test]
    fn edge_at_radius_has_unit_distance() {
        let frame = vec![0.25, 0.5, 0.35, 0.5];
        let window = vec![frame; 4];
        let g = encode_features(&window, &bounds(), &config(), &FeatureStats::identity(2)).unwrap();
        let dist = 0.35f64 - 0.25;
        assert_eq!(g.connectivity.num_edges(), 2, "{dist} <= 0.1");
        for k in 0..2 {
            assert!((g.edge_features[[k, 2]] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_distance_is_clipped() {
        let window = vec![vec![0.02, 0.5]; 4];
        let g = encode_features(&window, &bounds(), &config(), &FeatureStats::identity(2)).unwrap();
        assert!((g.node_features[[0, 6]] - 0.2).abs() < 1e-12);
        assert_eq!(g.node_features[[0, 7]], 1.0);
    }

    #[test]
    fn short_window_rejected() {
        let window = vec![vec![0.5, 0.5]; 2];
        assert_eq!(
            encode_features(&window, &bounds(), &config(), &FeatureStats::identity(2)).unwrap_err(),
            GnsError::WindowLength { expected: 4, got: 2 }
        );
    }
}
