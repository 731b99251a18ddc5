use ndarray::{s, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{check_window, encode_features, FeatureStats, GraphSample};
use super::graph::Connectivity;
use super::GnsError;
use crate::frame::Bounds;
use crate::neural::{GradientTape, Mlp, MlpGrad};

/// Architecture and feature hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnsConfig {
    /// Spatial dimension, 2 or 3.
    pub dim: usize,
    /// Number of past velocities fed to the node encoder.
    pub context_len: usize,
    pub latent_size: usize,
    /// Hidden layers per MLP (each `latent_size` wide).
    pub hidden_layers: usize,
    pub message_passing_steps: usize,
    /// Connectivity radius in meters.
    pub radius: f64,
    /// Length of the global feature vector `u` (zero unless populated).
    pub global_size: usize,
    /// Standard deviation of the random-walk noise on the last input velocity, meters per step.
    pub noise_std: f64,
}

impl Default for GnsConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            context_len: 5,
            latent_size: 64,
            hidden_layers: 2,
            message_passing_steps: 5,
            radius: 0.015,
            global_size: 0,
            noise_std: 1e-4,
        }
    }
}

impl GnsConfig {
    pub fn node_feature_size(&self) -> usize {
        self.context_len * self.dim + 2 * self.dim
    }

    pub fn edge_feature_size(&self) -> usize {
        self.dim + 1
    }

    fn mlp_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(self.latent_size, self.hidden_layers));
        sizes.push(output);
        sizes
    }

    pub fn validate(&self) -> Result<(), GnsError> {
        let bad = |m: &str| Err(GnsError::Config(m.to_string()));
        if !(2..=3).contains(&self.dim) {
            return bad("dim must be 2 or 3");
        }
        if self.context_len == 0 {
            return bad("context_len must be at least 1");
        }
        if self.latent_size == 0 {
            return bad("latent_size must be positive");
        }
        if self.message_passing_steps == 0 {
            return bad("message_passing_steps must be at least 1");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GnsError::Radius(self.radius));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative");
        }
        Ok(())
    }
}

/// One round of message passing: `edge_fn` is φ^e, `node_fn` is φ^v.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorBlock {
    pub edge_fn: Mlp,
    pub node_fn: Mlp,
}

/// Encoder, processor blocks and decoder plus normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsModel {
    pub config: GnsConfig,
    pub node_encoder: Mlp,
    pub edge_encoder: Mlp,
    pub blocks: Vec<ProcessorBlock>,
    pub decoder: Mlp,
    pub stats: Option<FeatureStats>,
}

/// Gradient of every model parameter, one entry per MLP in [`GnsModel::mlps`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsGrad {
    pub mlps: Vec<MlpGrad>,
}

impl GnsGrad {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.mlps {
            g.extend_flat(&mut out);
        }
        out
    }
}

pub struct GnsTape {
    node_encoder: GradientTape,
    edge_encoder: GradientTape,
    blocks: Vec<(GradientTape, GradientTape)>,
    decoder: GradientTape,
}

impl GnsModel {
    pub fn new(config: GnsConfig, seed: u64) -> Result<Self, GnsError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = config.latent_size;
        let g = config.global_size;
        let node_encoder = Mlp::with_rng(&config.mlp_sizes(config.node_feature_size(), l), &mut rng)?;
        let edge_encoder = Mlp::with_rng(&config.mlp_sizes(config.edge_feature_size(), l), &mut rng)?;
        let mut blocks = Vec::with_capacity(config.message_passing_steps);
        for _ in 0..config.message_passing_steps {
            blocks.push(ProcessorBlock {
                edge_fn: Mlp::with_rng(&config.mlp_sizes(3 * l + g, l), &mut rng)?,
                node_fn: Mlp::with_rng(&config.mlp_sizes(2 * l + g, l), &mut rng)?,
            });
        }
        let decoder = Mlp::with_rng(&config.mlp_sizes(l, config.dim), &mut rng)?;
        Ok(Self {
            config,
            node_encoder,
            edge_encoder,
            blocks,
            decoder,
            stats: None,
        })
    }

    pub fn with_stats(mut self, stats: FeatureStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn stats(&self) -> Result<&FeatureStats, GnsError> {
        self.stats.as_ref().ok_or(GnsError::MissingStats)
    }

    pub fn mlps(&self) -> Vec<&Mlp> {
        let mut out = vec![&self.node_encoder, &self.edge_encoder];
        for b in &self.blocks {
            out.push(&b.edge_fn);
            out.push(&b.node_fn);
        }
        out.push(&self.decoder);
        out
    }

    fn mlps_mut(&mut self) -> Vec<&mut Mlp> {
        let mut out = vec![&mut self.node_encoder, &mut self.edge_encoder];
        for b in &mut self.blocks {
            out.push(&mut b.edge_fn);
            out.push(&mut b.node_fn);
        }
        out.push(&mut self.decoder);
        out
    }

    pub fn num_params(&self) -> usize {
        self.mlps().iter().map(|m| m.num_params()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for m in self.mlps() {
            m.extend_params(&mut out);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), GnsError> {
        let expected = self.num_params();
        if params.len() != expected {
            return Err(GnsError::Config(format!(
                "parameter vector has {} entries, model has {expected}",
                params.len()
            )));
        }
        let mut offset = 0;
        for m in self.mlps_mut() {
            offset += m.read_params(&params[offset..]);
        }
        Ok(())
    }

    /// Checks structural invariants: shapes consistent with the config, finite
    /// parameters, positive statistics.
    pub fn validate(&self) -> Result<(), GnsError> {
        self.config.validate()?;
        let c = &self.config;
        let l = c.latent_size;
        let expect = |m: &Mlp, input: usize, output: usize, what: &str| {
            if m.input_size() != input || m.output_size() != output {
                Err(GnsError::Config(format!("{what} has shape {:?}", m.layer_sizes())))
            } else {
                Ok(())
            }
        };
        expect(&self.node_encoder, c.node_feature_size(), l, "node encoder")?;
        expect(&self.edge_encoder, c.edge_feature_size(), l, "edge encoder")?;
        if self.blocks.len() != c.message_passing_steps {
            return Err(GnsError::Config("processor block count differs from config".into()));
        }
        for b in &self.blocks {
            expect(&b.edge_fn, 3 * l + c.global_size, l, "edge update")?;
            expect(&b.node_fn, 2 * l + c.global_size, l, "node update")?;
        }
        expect(&self.decoder, l, c.dim, "decoder")?;
        if !self.mlps().iter().all(|m| m.all_finite()) {
            return Err(GnsError::Config("non-finite parameters".into()));
        }
        if let Some(stats) = &self.stats {
            stats.velocity.validate(c.dim)?;
            stats.acceleration.validate(c.dim)?;
        }
        Ok(())
    }

    /// Normalized accelerations, one row per node.
    pub fn forward(&self, sample: &GraphSample) -> Result<Array2<f64>, GnsError> {
        sample.connectivity.check()?;
        let conn = &sample.connectivity;
        let mut nodes = self.node_encoder.forward_batch(sample.node_features.view());
        let mut edges = self.edge_encoder.forward_batch(sample.edge_features.view());
        for block in &self.blocks {
            let (n, e) = block_forward(conn, &nodes, &edges, &sample.globals, &block.edge_fn, &block.node_fn);
            nodes = n;
            edges = e;
        }
        Ok(self.decoder.forward_batch(nodes.view()))
    }

    pub fn forward_taped(&self, sample: &GraphSample) -> Result<(Array2<f64>, GnsTape), GnsError> {
        sample.connectivity.check()?;
        let conn = &sample.connectivity;
        let u = &sample.globals;
        let (mut nodes, node_tape) = self.node_encoder.forward_taped(sample.node_features.clone());
        let (mut edges, edge_tape) = self.edge_encoder.forward_taped(sample.edge_features.clone());
        let mut block_tapes = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let edge_input = edge_inputs(conn, &edges, &nodes, u);
            let (messages, te) = block.edge_fn.forward_taped(edge_input);
            let aggregated = aggregate_incoming(&conn.receivers, messages.view(), conn.num_nodes);
            let node_input = concat_rows(&[aggregated.view(), nodes.view()], u);
            let (delta, tv) = block.node_fn.forward_taped(node_input);
            nodes += &delta;
            edges += &messages;
            block_tapes.push((te, tv));
        }
        let (out, decoder_tape) = self.decoder.forward_taped(nodes);
        Ok((
            out,
            GnsTape {
                node_encoder: node_tape,
                edge_encoder: edge_tape,
                blocks: block_tapes,
                decoder: decoder_tape,
            },
        ))
    }

    /// Reverse pass through decoder, processor and encoders.
    pub fn backward(&self, sample: &GraphSample, tape: &GnsTape, grad_output: Array2<f64>) -> GnsGrad {
        let conn = &sample.connectivity;
        let l = self.config.latent_size;
        let mut grads: Vec<MlpGrad> = self.mlps().into_iter().map(MlpGrad::zeros_like).collect();
        let last = grads.len() - 1;
        let mut d_nodes = self.decoder.backward(&tape.decoder, grad_output, &mut grads[last]);
        let mut d_edges = Array2::zeros((conn.num_edges(), l));
        for (b, block) in self.blocks.iter().enumerate().rev() {
            let (te, tv) = &tape.blocks[b];
            // v' = v + φv([agg, v, u]); e' = e + m; agg_i = Σ_{recv(k)=i} m_k.
            let d_node_in = block.node_fn.backward(tv, d_nodes.clone(), &mut grads[3 + 2 * b]);
            let d_agg = d_node_in.slice(s![.., 0..l]);
            d_nodes += &d_node_in.slice(s![.., l..2 * l]);
            let mut d_msg = d_edges.clone();
            gather_add(&conn.receivers, d_agg, &mut d_msg);
            let d_edge_in = block.edge_fn.backward(te, d_msg, &mut grads[2 + 2 * b]);
            d_edges += &d_edge_in.slice(s![.., 0..l]);
            scatter_add(&conn.receivers, d_edge_in.slice(s![.., l..2 * l]), &mut d_nodes);
            scatter_add(&conn.senders, d_edge_in.slice(s![.., 2 * l..3 * l]), &mut d_nodes);
        }
        self.node_encoder.backward(&tape.node_encoder, d_nodes, &mut grads[0]);
        self.edge_encoder.backward(&tape.edge_encoder, d_edges, &mut grads[1]);
        GnsGrad { mlps: grads }
    }

    /// Per-particle accelerations in unit-timestep coordinates, de-normalized
    /// with the stored statistics. Flat, `dim` values per particle.
    pub fn predict_accelerations(&self, window: &[Vec<f64>], bounds: &Bounds) -> Result<Vec<f64>, GnsError> {
        let stats = self.stats()?;
        check_window(window, &self.config)?;
        let sample = encode_features(window, bounds, &self.config, stats)?;
        let normalized = self.forward(&sample)?;
        let dim = self.config.dim;
        let mut out = Vec::with_capacity(normalized.len());
        for row in normalized.rows() {
            for a in 0..dim {
                out.push(row[a] * stats.acceleration.std[a] + stats.acceleration.mean[a]);
            }
        }
        Ok(out)
    }
}

fn block_forward(
    conn: &Connectivity,
    nodes: &Array2<f64>,
    edges: &Array2<f64>,
    globals: &[f64],
    edge_fn: &Mlp,
    node_fn: &Mlp,
) -> (Array2<f64>, Array2<f64>) {
    let messages = edge_fn.forward_batch(edge_inputs(conn, edges, nodes, globals).view());
    let aggregated = aggregate_incoming(&conn.receivers, messages.view(), conn.num_nodes);
    let delta = node_fn.forward_batch(concat_rows(&[aggregated.view(), nodes.view()], globals).view());
    (nodes + &delta, edges + &messages)
}

/// One message-passing step with residual connections:
/// `m_k = φe(e_k, v_{r_k}, v_{s_k}, u)`, `ē_i = Σ_{r_k = i} m_k`,
/// `v'_i = v_i + φv(ē_i, v_i, u)`, `e'_k = e_k + m_k`.
pub fn message_passing_step(
    connectivity: &Connectivity,
    node_latents: &Array2<f64>,
    edge_latents: &Array2<f64>,
    globals: &[f64],
    edge_fn: &Mlp,
    node_fn: &Mlp,
) -> Result<(Array2<f64>, Array2<f64>), GnsError> {
    connectivity.check()?;
    if node_latents.nrows() != connectivity.num_nodes || edge_latents.nrows() != connectivity.num_edges() {
        return Err(GnsError::Config("latent row counts differ from the graph".into()));
    }
    let width = 2 * node_latents.ncols() + edge_latents.ncols() + globals.len();
    if edge_fn.input_size() != width {
        return Err(GnsError::Config(format!(
            "edge function expects {} inputs, latents provide {width}",
            edge_fn.input_size()
        )));
    }
    if node_fn.input_size() != edge_fn.output_size() + node_latents.ncols() + globals.len()
        || node_fn.output_size() != node_latents.ncols()
        || edge_fn.output_size() != edge_latents.ncols()
    {
        return Err(GnsError::Config("node/edge function widths do not match the latents".into()));
    }
    Ok(block_forward(connectivity, node_latents, edge_latents, globals, edge_fn, node_fn))
}

/// Sums the message rows of all edges into their receivers, in edge order.
pub fn aggregate_incoming(receivers: &[usize], messages: ArrayView2<f64>, num_nodes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((num_nodes, messages.ncols()));
    scatter_add(receivers, messages, &mut out);
    out
}

fn scatter_add(index: &[usize], rows: ArrayView2<f64>, out: &mut Array2<f64>) {
    let w = rows.ncols();
    let rows = rows.as_standard_layout();
    let src = rows.as_slice().expect("standard layout");
    let dst = out.as_slice_mut().expect("standard layout");
    for (k, &i) in index.iter().enumerate() {
        let (from, to) = (&src[k * w..(k + 1) * w], &mut dst[i * w..(i + 1) * w]);
        for (d, s) in to.iter_mut().zip(from) {
            *d += s;
        }
    }
}

fn gather_add(index: &[usize], rows: ArrayView2<f64>, out: &mut Array2<f64>) {
    let w = rows.ncols();
    let rows = rows.as_standard_layout();
    let src = rows.as_slice().expect("standard layout");
    let dst = out.as_slice_mut().expect("standard layout");
    for (k, &i) in index.iter().enumerate() {
        let (from, to) = (&src[i * w..(i + 1) * w], &mut dst[k * w..(k + 1) * w]);
        for (d, s) in to.iter_mut().zip(from) {
            *d += s;
        }
    }
}

/// `[e_k, v_{r_k}, v_{s_k}, u]` for every edge.
fn edge_inputs(conn: &Connectivity, edges: &Array2<f64>, nodes: &Array2<f64>, globals: &[f64]) -> Array2<f64> {
    let l_e = edges.ncols();
    let l_v = nodes.ncols();
    let g = globals.len();
    let width = l_e + 2 * l_v + g;
    let mut out = Array2::zeros((conn.num_edges(), width));
    let e_src = edges.as_slice().expect("standard layout");
    let v_src = nodes.as_slice().expect("standard layout");
    let dst = out.as_slice_mut().expect("standard layout");
    for k in 0..conn.num_edges() {
        let row = &mut dst[k * width..(k + 1) * width];
        row[..l_e].copy_from_slice(&e_src[k * l_e..(k + 1) * l_e]);
        let (r, s) = (conn.receivers[k], conn.senders[k]);
        row[l_e..l_e + l_v].copy_from_slice(&v_src[r * l_v..(r + 1) * l_v]);
        row[l_e + l_v..l_e + 2 * l_v].copy_from_slice(&v_src[s * l_v..(s + 1) * l_v]);
        row[l_e + 2 * l_v..].copy_from_slice(globals);
    }
    out
}

fn concat_rows(parts: &[ArrayView2<f64>], globals: &[f64]) -> Array2<f64> {
    let n = parts[0].nrows();
    let width: usize = parts.iter().map(|p| p.ncols()).sum::<usize>() + globals.len();
    let mut out = Array2::zeros((n, width));
    let mut col = 0;
    for p in parts {
        out.slice_mut(s![.., col..col + p.ncols()]).assign(p);
        col += p.ncols();
    }
    if !globals.is_empty() {
        for mut row in out.rows_mut() {
            for (j, u) in globals.iter().enumerate() {
                row[col + j] = *u;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line_graph() -> Connectivity {
        // Edges 1->0, 2->0, 3->0.
        Connectivity {
            num_nodes: 4,
            senders: vec![1, 2, 3],
            receivers: vec![0, 0, 0],
        }
    }

    #[test]
    fn isolated_node_aggregates_to_zero() {
        let agg = aggregate_incoming(&[0, 0], array![[1.0], [2.0]].view(), 3);
        assert_eq!(agg, array![[3.0], [0.0], [0.0]]);
    }

    #[test]
    fn identity_edge_function_sums_incoming() {
        // φe picks e_k out of [e_k, v_r, v_s]; φv is zero so nodes are unchanged.
        let mut edge_fn = Mlp::zeros(&[3, 1]).unwrap();
        edge_fn.layer_mut(0).0[[0, 0]] = 1.0;
        let node_fn = Mlp::zeros(&[2, 1]).unwrap();
        let edges = array![[1.0], [2.0], [4.0]];
        let nodes = Array2::zeros((4, 1));
        let (_, new_edges) = message_passing_step(&line_graph(), &nodes, &edges, &[], &edge_fn, &node_fn).unwrap();
        assert_eq!(new_edges, array![[2.0], [4.0], [8.0]]);
        let messages = edge_fn.forward_batch(edge_inputs(&line_graph(), &edges, &nodes, &[]).view());
        let agg = aggregate_incoming(&line_graph().receivers, messages.view(), 4);
        assert_eq!(agg[[0, 0]], 7.0);
    }

    #[test]
    fn dangling_edge_rejected() {
        let conn = Connectivity {
            num_nodes: 2,
            senders: vec![5],
            receivers: vec![0],
        };
        let f = Mlp::zeros(&[3, 1]).unwrap();
        let g = Mlp::zeros(&[2, 1]).unwrap();
        let err = message_passing_step(&conn, &Array2::zeros((2, 1)), &Array2::zeros((1, 1)), &[], &f, &g).unwrap_err();
        assert_eq!(err, GnsError::DanglingEdge { edge: 0, node: 5, num_nodes: 2 });
    }

    #[test]
    fn params_round_trip_through_model() {
        let config = GnsConfig {
            latent_size: 8,
            message_passing_steps: 2,
            ..GnsConfig::default()
        };
        let a = GnsModel::new(config.clone(), 1).unwrap();
        let mut b = GnsModel::new(config, 2).unwrap();
        assert_ne!(a.params(), b.params());
        b.set_params(&a.params()).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn zero_decoder_predicts_mean() {
        let config = GnsConfig {
            latent_size: 8,
            message_passing_steps: 1,
            context_len: 2,
            radius: 0.2,
            ..GnsConfig::default()
        };
        let mut model = GnsModel::new(config, 3).unwrap();
        model.decoder = Mlp::zeros(model.decoder.layer_sizes()).unwrap();
        let stats = FeatureStats {
            velocity: crate::gns::NormStats::identity(2),
            acceleration: crate::gns::NormStats {
                mean: vec![0.5, -2.0],
                std: vec![3.0, 4.0],
            },
        };
        let model = model.with_stats(stats);
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let window = vec![vec![0.3, 0.3, 0.4, 0.35]; 3];
        let acc = model.predict_accelerations(&window, &bounds).unwrap();
        assert_eq!(acc, vec![0.5, -2.0, 0.5, -2.0]);
    }

    #[test]
    fn prediction_without_stats_fails() {
        let model = GnsModel::new(GnsConfig { latent_size: 4, ..GnsConfig::default() }, 0).unwrap();
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let window = vec![vec![0.5, 0.5]; 6];
        assert_eq!(model.predict_accelerations(&window, &bounds).unwrap_err(), GnsError::MissingStats);
    }
}
