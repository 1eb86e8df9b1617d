//! Contrastive graph encoder: a 2-layer multi-head graph attention network
//! with mean/sum/max readout and a two-layer projection head, trained with
//! the NT-Xent objective over augmented positives and corpus negatives.
//!
//! All forward and backward passes are hand-written over f64 ndarrays and
//! validated against central finite differences (see `gradcheck`). Message
//! passing adds reverse edges and self-loops internally so leaf values can
//! reach the root representation within two layers; the stored graph itself
//! stays a DAG.

mod checkpoint;
mod gradcheck;
mod loss;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{gradient_check, GradCheckInstance};
pub use loss::{cosine_similarity, nt_xent_loss, nt_xent_with_grads};
pub use train::{train, TrainConfig, TrainLog};

use crate::ast::parse_sql;
use crate::embed::{assemble_features, EmbedError, Embedder};
use crate::graph::{build_graph, GraphError, SqlGraph};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GclError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot encode an empty graph")]
    EmptyGraph,
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("zero-norm embedding in similarity")]
    ZeroNormEmbedding,
    #[error(transparent)]
    Syntax(#[from] crate::ast::SyntaxError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Augment(#[from] crate::augment::AugmentError),
}

pub const LEAKY_SLOPE: f64 = 0.2;

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// (d_in, d_h)
    pub weight: Array2<f64>,
    pub attn_src: Array1<f64>,
    pub attn_dst: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    pub heads: Vec<HeadParams>,
}

impl GatLayer {
    fn new(d_in: usize, d_h: usize, heads: usize, rng: &mut ChaCha8Rng) -> GatLayer {
        GatLayer {
            heads: (0..heads)
                .map(|_| HeadParams {
                    weight: xavier(d_in, d_h, rng),
                    attn_src: xavier_vec(d_h, rng),
                    attn_dst: xavier_vec(d_h, rng),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Hyperparameters pinned at construction and recorded in checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMeta {
    pub d_text: usize,
    pub d_h: usize,
    pub heads: usize,
    pub d_z: usize,
    pub tau: f64,
    pub pq_p: usize,
    pub pq_q: usize,
    pub provider_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub layer1: GatLayer,
    pub layer2: GatLayer,
    pub projection: Projection,
    pub meta: EncoderMeta,
}

impl EncoderParams {
    pub fn init(meta: EncoderMeta, seed: u64) -> EncoderParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d_in = crate::embed::feature_width(meta.d_text);
        let layer1 = GatLayer::new(d_in, meta.d_h, meta.heads, &mut rng);
        let width = meta.d_h * meta.heads;
        let layer2 = GatLayer::new(width, meta.d_h, meta.heads, &mut rng);
        let readout_width = 3 * width;
        let projection = Projection {
            w1: xavier(meta.d_z, readout_width, &mut rng),
            b1: Array1::zeros(meta.d_z),
            w2: xavier(meta.d_z, meta.d_z, &mut rng),
            b2: Array1::zeros(meta.d_z),
        };
        EncoderParams {
            layer1,
            layer2,
            projection,
            meta,
        }
    }

    /// Visit every tensor with a stable name, for checkpoints and the
    /// finite-difference harness.
    pub fn tensors(&self) -> Vec<(String, Tensor<'_>)> {
        let mut out = Vec::new();
        for (li, layer) in [(1, &self.layer1), (2, &self.layer2)] {
            for (hi, head) in layer.heads.iter().enumerate() {
                out.push((format!("layer{li}.head{hi}.weight"), Tensor::Mat(&head.weight)));
                out.push((format!("layer{li}.head{hi}.attn_src"), Tensor::Vec(&head.attn_src)));
                out.push((format!("layer{li}.head{hi}.attn_dst"), Tensor::Vec(&head.attn_dst)));
            }
        }
        out.push(("projection.w1".to_string(), Tensor::Mat(&self.projection.w1)));
        out.push(("projection.b1".to_string(), Tensor::Vec(&self.projection.b1)));
        out.push(("projection.w2".to_string(), Tensor::Mat(&self.projection.w2)));
        out.push(("projection.b2".to_string(), Tensor::Vec(&self.projection.b2)));
        out
    }

    /// Total number of scalar parameters (excluding τ).
    pub fn parameter_count(&self) -> usize {
        self.tensors()
            .iter()
            .map(|(_, t)| match t {
                Tensor::Mat(m) => m.len(),
                Tensor::Vec(v) => v.len(),
            })
            .sum()
    }

    /// Round every parameter (and τ) to f32 precision. Checkpoints store
    /// f32, so doing this before saving makes save→load→embed bit-exact.
    pub fn quantize_f32(&mut self) {
        let round = |x: &mut f64| *x = f64::from(*x as f32);
        for layer in [&mut self.layer1, &mut self.layer2] {
            for head in &mut layer.heads {
                head.weight.iter_mut().for_each(&round);
                head.attn_src.iter_mut().for_each(&round);
                head.attn_dst.iter_mut().for_each(&round);
            }
        }
        self.projection.w1.iter_mut().for_each(&round);
        self.projection.b1.iter_mut().for_each(&round);
        self.projection.w2.iter_mut().for_each(&round);
        self.projection.b2.iter_mut().for_each(&round);
        self.meta.tau = f64::from(self.meta.tau as f32);
    }
}

pub enum Tensor<'a> {
    Mat(&'a Array2<f64>),
    Vec(&'a Array1<f64>),
}

fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

fn xavier_vec(len: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let bound = (6.0 / (len as f64 + 1.0)).sqrt();
    Array1::from_shape_fn(len, |_| rng.gen_range(-bound..bound))
}

// ---------------------------------------------------------------------------
// gradients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub weight: Array2<f64>,
    pub attn_src: Array1<f64>,
    pub attn_dst: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub layer1: Vec<HeadGrads>,
    pub layer2: Vec<HeadGrads>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub tau: f64,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> EncoderGrads {
        let zero_heads = |layer: &GatLayer| {
            layer
                .heads
                .iter()
                .map(|h| HeadGrads {
                    weight: Array2::zeros(h.weight.dim()),
                    attn_src: Array1::zeros(h.attn_src.len()),
                    attn_dst: Array1::zeros(h.attn_dst.len()),
                })
                .collect()
        };
        EncoderGrads {
            layer1: zero_heads(&params.layer1),
            layer2: zero_heads(&params.layer2),
            w1: Array2::zeros(params.projection.w1.dim()),
            b1: Array1::zeros(params.projection.b1.len()),
            w2: Array2::zeros(params.projection.w2.dim()),
            b2: Array1::zeros(params.projection.b2.len()),
            tau: 0.0,
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in [&mut self.layer1, &mut self.layer2] {
            for head in layer.iter_mut() {
                head.weight *= factor;
                head.attn_src *= factor;
                head.attn_dst *= factor;
            }
        }
        self.w1 *= factor;
        self.b1 *= factor;
        self.w2 *= factor;
        self.b2 *= factor;
        self.tau *= factor;
    }

    pub fn add(&mut self, other: &EncoderGrads) {
        for (mine, theirs) in self.layer1.iter_mut().zip(&other.layer1) {
            mine.weight += &theirs.weight;
            mine.attn_src += &theirs.attn_src;
            mine.attn_dst += &theirs.attn_dst;
        }
        for (mine, theirs) in self.layer2.iter_mut().zip(&other.layer2) {
            mine.weight += &theirs.weight;
            mine.attn_src += &theirs.attn_src;
            mine.attn_dst += &theirs.attn_dst;
        }
        self.w1 += &other.w1;
        self.b1 += &other.b1;
        self.w2 += &other.w2;
        self.b2 += &other.b2;
        self.tau += other.tau;
    }
}

/// Plain gradient step; τ is a fixed hyperparameter and is not updated.
pub fn sgd_step(params: &mut EncoderParams, grads: &EncoderGrads, lr: f64) {
    for (layer, glayer) in [
        (&mut params.layer1, &grads.layer1),
        (&mut params.layer2, &grads.layer2),
    ] {
        for (head, ghead) in layer.heads.iter_mut().zip(glayer) {
            head.weight.scaled_add(-lr, &ghead.weight);
            head.attn_src.scaled_add(-lr, &ghead.attn_src);
            head.attn_dst.scaled_add(-lr, &ghead.attn_dst);
        }
    }
    params.projection.w1.scaled_add(-lr, &grads.w1);
    params.projection.b1.scaled_add(-lr, &grads.b1);
    params.projection.w2.scaled_add(-lr, &grads.w2);
    params.projection.b2.scaled_add(-lr, &grads.b2);
}

// ---------------------------------------------------------------------------
// forward pass
// ---------------------------------------------------------------------------

/// Message-passing edge list: original edges, their reverses, and a self-loop
/// per node, deduplicated, sorted by (target, source) so per-target groups
/// are contiguous.
pub fn message_edges(graph: &SqlGraph) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    for &(s, d) in &graph.edges {
        set.insert((s, d));
        set.insert((d, s));
    }
    for v in 0..graph.nodes.len() {
        set.insert((v, v));
    }
    let mut edges: Vec<(usize, usize)> = set.into_iter().collect();
    edges.sort_by_key(|&(s, d)| (d, s));
    edges
}

pub(crate) struct HeadCache {
    /// projected inputs P = X·W, (n, d_h)
    p: Array2<f64>,
    /// pre-activation attention logits per edge
    gate: Vec<f64>,
    /// softmax weights per edge
    alpha: Vec<f64>,
}

pub(crate) struct LayerCache {
    input: Array2<f64>,
    heads: Vec<HeadCache>,
    /// concatenated head outputs before any activation, (n, H·d_h)
    output: Array2<f64>,
}

pub(crate) struct ForwardCache {
    edges: Vec<(usize, usize)>,
    layer1: LayerCache,
    layer2: LayerCache,
    readout: Array1<f64>,
    /// argmax row per column for the max part of the readout
    max_rows: Vec<usize>,
    hidden_pre: Array1<f64>,
    hidden: Array1<f64>,
    pub z: Array1<f64>,
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn elu_grad_from_out(pre: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        pre.exp()
    }
}

fn gat_layer_forward(
    layer: &GatLayer,
    input: &Array2<f64>,
    edges: &[(usize, usize)],
) -> Result<LayerCache, GclError> {
    let n = input.nrows();
    let d_h = layer.heads[0].weight.ncols();
    if layer.heads[0].weight.nrows() != input.ncols() {
        return Err(GclError::ShapeMismatch(format!(
            "layer expects input width {}, got {}",
            layer.heads[0].weight.nrows(),
            input.ncols()
        )));
    }
    let mut output = Array2::<f64>::zeros((n, layer.heads.len() * d_h));
    let mut head_caches = Vec::with_capacity(layer.heads.len());
    for (hi, head) in layer.heads.iter().enumerate() {
        let p = input.dot(&head.weight);
        let src_score: Vec<f64> = (0..n).map(|v| p.row(v).dot(&head.attn_src)).collect();
        let dst_score: Vec<f64> = (0..n).map(|v| p.row(v).dot(&head.attn_dst)).collect();
        let gate: Vec<f64> = edges
            .iter()
            .map(|&(u, v)| leaky(src_score[u] + dst_score[v]))
            .collect();
        // softmax per target; edges are sorted by target so groups are runs
        let mut alpha = vec![0f64; edges.len()];
        let mut start = 0;
        while start < edges.len() {
            let target = edges[start].1;
            let mut end = start;
            while end < edges.len() && edges[end].1 == target {
                end += 1;
            }
            let max = gate[start..end]
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut denom = 0.0;
            for i in start..end {
                alpha[i] = (gate[i] - max).exp();
                denom += alpha[i];
            }
            for a in &mut alpha[start..end] {
                *a /= denom;
            }
            start = end;
        }
        for (idx, &(u, v)) in edges.iter().enumerate() {
            let weight = alpha[idx];
            let source = p.row(u);
            for j in 0..d_h {
                output[[v, hi * d_h + j]] += weight * source[j];
            }
        }
        head_caches.push(HeadCache { p, gate, alpha });
    }
    Ok(LayerCache {
        input: input.clone(),
        heads: head_caches,
        output,
    })
}

fn gat_layer_backward(
    layer: &GatLayer,
    cache: &LayerCache,
    edges: &[(usize, usize)],
    d_output: &Array2<f64>,
    grads: &mut [HeadGrads],
) -> Array2<f64> {
    let n = cache.input.nrows();
    let d_h = layer.heads[0].weight.ncols();
    let mut d_input = Array2::<f64>::zeros(cache.input.dim());
    for (hi, head) in layer.heads.iter().enumerate() {
        let hc = &cache.heads[hi];
        let d_out_head = d_output.slice(ndarray::s![.., hi * d_h..(hi + 1) * d_h]);
        let mut d_p = Array2::<f64>::zeros((n, d_h));
        let mut d_alpha = vec![0f64; edges.len()];
        for (idx, &(u, v)) in edges.iter().enumerate() {
            d_alpha[idx] = d_out_head.row(v).dot(&hc.p.row(u));
            let weight = hc.alpha[idx];
            for j in 0..d_h {
                d_p[[u, j]] += weight * d_out_head[[v, j]];
            }
        }
        // softmax backward per target group
        let mut d_gate = vec![0f64; edges.len()];
        let mut start = 0;
        while start < edges.len() {
            let target = edges[start].1;
            let mut end = start;
            while end < edges.len() && edges[end].1 == target {
                end += 1;
            }
            let weighted_sum: f64 = (start..end).map(|i| hc.alpha[i] * d_alpha[i]).sum();
            for i in start..end {
                let d_e = hc.alpha[i] * (d_alpha[i] - weighted_sum);
                let slope = if hc.gate[i] > 0.0 { 1.0 } else { LEAKY_SLOPE };
                d_gate[i] = d_e * slope;
            }
            start = end;
        }
        let g = &mut grads[hi];
        for (idx, &(u, v)) in edges.iter().enumerate() {
            let dg = d_gate[idx];
            if dg == 0.0 {
                continue;
            }
            g.attn_src.scaled_add(dg, &hc.p.row(u));
            g.attn_dst.scaled_add(dg, &hc.p.row(v));
            d_p.row_mut(u).scaled_add(dg, &head.attn_src);
            d_p.row_mut(v).scaled_add(dg, &head.attn_dst);
        }
        g.weight += &cache.input.t().dot(&d_p);
        d_input += &d_p.dot(&head.weight.t());
    }
    d_input
}

/// Run the full encoder on one featurized graph.
pub(crate) fn forward(
    params: &EncoderParams,
    features: &Array2<f64>,
    edges: &[(usize, usize)],
) -> Result<ForwardCache, GclError> {
    if features.nrows() == 0 {
        return Err(GclError::EmptyGraph);
    }
    let layer1 = gat_layer_forward(&params.layer1, features, edges)?;
    let activated = layer1.output.mapv(elu);
    let layer2 = gat_layer_forward(&params.layer2, &activated, edges)?;

    let n = layer2.output.nrows();
    let width = layer2.output.ncols();
    let mean = layer2.output.mean_axis(Axis(0)).expect("non-empty");
    let sum = layer2.output.sum_axis(Axis(0));
    let mut max = Array1::<f64>::from_elem(width, f64::NEG_INFINITY);
    let mut max_rows = vec![0usize; width];
    for v in 0..n {
        for j in 0..width {
            let x = layer2.output[[v, j]];
            if x > max[j] {
                max[j] = x;
                max_rows[j] = v;
            }
        }
    }
    let mut readout = Array1::<f64>::zeros(3 * width);
    readout.slice_mut(ndarray::s![0..width]).assign(&mean);
    readout.slice_mut(ndarray::s![width..2 * width]).assign(&sum);
    readout.slice_mut(ndarray::s![2 * width..]).assign(&max);

    let hidden_pre = params.projection.w1.dot(&readout) + &params.projection.b1;
    let hidden = hidden_pre.mapv(|x| x.max(0.0));
    let z = params.projection.w2.dot(&hidden) + &params.projection.b2;
    Ok(ForwardCache {
        edges: edges.to_vec(),
        layer1,
        layer2,
        readout,
        max_rows,
        hidden_pre,
        hidden,
        z,
    })
}

/// Accumulate parameter gradients for one graph given ∂L/∂z.
pub(crate) fn backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    d_z: &Array1<f64>,
    grads: &mut EncoderGrads,
) {
    // projection head
    for i in 0..d_z.len() {
        for j in 0..cache.hidden.len() {
            grads.w2[[i, j]] += d_z[i] * cache.hidden[j];
        }
    }
    grads.b2 += d_z;
    let d_hidden = params.projection.w2.t().dot(d_z);
    let d_hidden_pre = Array1::from_shape_fn(d_hidden.len(), |i| {
        if cache.hidden_pre[i] > 0.0 {
            d_hidden[i]
        } else {
            0.0
        }
    });
    for i in 0..d_hidden_pre.len() {
        for j in 0..cache.readout.len() {
            grads.w1[[i, j]] += d_hidden_pre[i] * cache.readout[j];
        }
    }
    grads.b1 += &d_hidden_pre;
    let d_readout = params.projection.w1.t().dot(&d_hidden_pre);

    // readout: mean ∥ sum ∥ max
    let n = cache.layer2.output.nrows();
    let width = cache.layer2.output.ncols();
    let mut d_out2 = Array2::<f64>::zeros((n, width));
    for j in 0..width {
        let d_mean = d_readout[j] / n as f64;
        let d_sum = d_readout[width + j];
        for v in 0..n {
            d_out2[[v, j]] += d_mean + d_sum;
        }
        d_out2[[cache.max_rows[j], j]] += d_readout[2 * width + j];
    }

    // layers in reverse
    let d_activated = gat_layer_backward(
        &params.layer2,
        &cache.layer2,
        &cache.edges,
        &d_out2,
        &mut grads.layer2,
    );
    let d_out1 = Array2::from_shape_fn(cache.layer1.output.dim(), |(v, j)| {
        d_activated[[v, j]] * elu_grad_from_out(cache.layer1.output[[v, j]])
    });
    let _ = gat_layer_backward(
        &params.layer1,
        &cache.layer1,
        &cache.edges,
        &d_out1,
        &mut grads.layer1,
    );
}

// ---------------------------------------------------------------------------
// public embedding API
// ---------------------------------------------------------------------------

/// Encode a featurized graph into its embedding vector.
pub fn embed_graph(
    params: &EncoderParams,
    graph: &SqlGraph,
    masked: &BTreeSet<usize>,
    embedder: &Embedder,
) -> Result<Array1<f64>, GclError> {
    let features = assemble_features(graph, masked, embedder)?;
    let edges = message_edges(graph);
    Ok(forward(params, &features, &edges)?.z)
}

/// Parse, build the graph, featurize, and encode one SQL statement.
pub fn embed_sql(
    params: &EncoderParams,
    sql: &str,
    embedder: &Embedder,
) -> Result<Array1<f64>, GclError> {
    let query = parse_sql(sql)?;
    let graph = build_graph(&query)?;
    embed_graph(params, &graph, &BTreeSet::new(), embedder)
}

/// Pool node embeddings with concatenated mean, sum, and max reductions.
/// Exposed for the readout-oracle tests; `forward` inlines the same math.
pub fn readout(node_embeddings: &Array2<f64>) -> Result<Array1<f64>, GclError> {
    if node_embeddings.nrows() == 0 {
        return Err(GclError::EmptyGraph);
    }
    let width = node_embeddings.ncols();
    let mut out = Array1::<f64>::zeros(3 * width);
    let mean = node_embeddings.mean_axis(Axis(0)).expect("non-empty");
    let sum = node_embeddings.sum_axis(Axis(0));
    for j in 0..width {
        let mut max = f64::NEG_INFINITY;
        for v in 0..node_embeddings.nrows() {
            max = max.max(node_embeddings[[v, j]]);
        }
        out[j] = mean[j];
        out[width + j] = sum[j];
        out[2 * width + j] = max;
    }
    Ok(out)
}

/// Encode node features through the two attention layers only (no readout),
/// returning one embedding row per node.
pub fn encode_nodes(
    params: &EncoderParams,
    features: &Array2<f64>,
    edges: &[(usize, usize)],
) -> Result<Array2<f64>, GclError> {
    let layer1 = gat_layer_forward(&params.layer1, features, edges)?;
    let activated = layer1.output.mapv(elu);
    let layer2 = gat_layer_forward(&params.layer2, &activated, edges)?;
    Ok(layer2.output)
}

/// Apply the projection head alone.
pub fn project(params: &EncoderParams, pooled: &Array1<f64>) -> Result<Array1<f64>, GclError> {
    if pooled.len() != params.projection.w1.ncols() {
        return Err(GclError::ShapeMismatch(format!(
            "projection expects width {}, got {}",
            params.projection.w1.ncols(),
            pooled.len()
        )));
    }
    let hidden = (params.projection.w1.dot(pooled) + &params.projection.b1).mapv(|x| x.max(0.0));
    Ok(params.projection.w2.dot(&hidden) + &params.projection.b2)
}

#[cfg(test)]
mod tests;
