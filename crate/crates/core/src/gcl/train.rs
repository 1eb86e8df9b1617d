//! Unsupervised training loop: per anchor, augment positives, sample corpus
//! negatives, and take plain gradient steps on the NT-Xent loss.

use super::*;
use crate::augment::{feature_mask, sample_positive, sample_negatives, AugmentKind, ValuePool};
use crate::schema::SchemaCatalog;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub tau: f64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub mask_rate: f64,
    pub d_h: usize,
    pub heads: usize,
    pub d_z: usize,
    pub pq_p: usize,
    pub pq_q: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 0.5,
            n_positive: 2,
            n_negative: 16,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 1,
            seed: 0,
            mask_rate: 0.2,
            d_h: 64,
            heads: 4,
            d_z: 128,
            pq_p: 2,
            pq_q: 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    /// Mean per-anchor loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Corpus rows skipped because they failed to parse or graph-build.
    pub skipped: usize,
}

fn sub_seed(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut x = seed
        .wrapping_add(a.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(b.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(c.wrapping_mul(0x94d049bb133111eb));
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

struct CorpusEntry {
    sql: String,
    graph: SqlGraph,
    features: Array2<f64>,
    edges: Vec<(usize, usize)>,
}

/// Train the encoder on a SQL corpus. Deterministic for a fixed seed; the
/// returned parameters are rounded to f32 precision so that saving and
/// reloading the checkpoint reproduces embeddings bit-exactly.
pub fn train(
    corpus: &[String],
    donors: &SchemaCatalog,
    cfg: &TrainConfig,
    embedder: &Embedder,
) -> Result<(EncoderParams, TrainLog), GclError> {
    let mut log = TrainLog::default();
    let mut entries: Vec<CorpusEntry> = Vec::with_capacity(corpus.len());
    let mut queries = Vec::new();
    for sql in corpus {
        let prepared = parse_sql(sql).map_err(GclError::from).and_then(|query| {
            let graph = build_graph(&query)?;
            let features = assemble_features(&graph, &BTreeSet::new(), embedder)?;
            let edges = message_edges(&graph);
            Ok((query, graph, features, edges))
        });
        match prepared {
            Ok((query, graph, features, edges)) => {
                queries.push(query);
                entries.push(CorpusEntry {
                    sql: sql.clone(),
                    graph,
                    features,
                    edges,
                });
            }
            Err(err) => {
                log::warn!("skipping corpus row `{sql}`: {err}");
                log.skipped += 1;
            }
        }
    }
    if entries.len() <= cfg.n_negative {
        return Err(GclError::ShapeMismatch(format!(
            "corpus of {} usable rows cannot supply {} negatives",
            entries.len(),
            cfg.n_negative
        )));
    }
    let pool = ValuePool::harvest(queries.iter());

    let meta = EncoderMeta {
        d_text: embedder.dim(),
        d_h: cfg.d_h,
        heads: cfg.heads,
        d_z: cfg.d_z,
        tau: cfg.tau,
        pq_p: cfg.pq_p,
        pq_q: cfg.pq_q,
        provider_id: embedder.provider_id(),
    };
    let mut params = EncoderParams::init(meta, cfg.seed);

    let batch = cfg.batch_size.max(1);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, epoch as u64, 0, 0));
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut steps = 0usize;
        for chunk in order.chunks(batch) {
            let mut grads = EncoderGrads::zeros_like(&params);
            let mut chunk_loss = 0.0;
            for &idx in chunk {
                let loss = anchor_step(
                    &params,
                    &entries,
                    idx,
                    donors,
                    &pool,
                    cfg,
                    embedder,
                    epoch as u64,
                    &mut grads,
                )?;
                chunk_loss += loss;
            }
            grads.scale(1.0 / chunk.len() as f64);
            sgd_step(&mut params, &grads, cfg.learning_rate);
            epoch_loss += chunk_loss;
            steps += chunk.len();
        }
        let mean = epoch_loss / steps.max(1) as f64;
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        log.epoch_losses.push(mean);
    }
    params.quantize_f32();
    Ok((params, log))
}

#[allow(clippy::too_many_arguments)]
fn anchor_step(
    params: &EncoderParams,
    entries: &[CorpusEntry],
    idx: usize,
    donors: &SchemaCatalog,
    pool: &ValuePool,
    cfg: &TrainConfig,
    embedder: &Embedder,
    epoch: u64,
    grads: &mut EncoderGrads,
) -> Result<f64, GclError> {
    let entry = &entries[idx];
    let anchor_cache = forward(params, &entry.features, &entry.edges)?;

    let mut pos_caches = Vec::with_capacity(cfg.n_positive);
    for j in 0..cfg.n_positive {
        let seed = sub_seed(cfg.seed, epoch, idx as u64, 1000 + j as u64);
        let instance = match sample_positive(&entry.sql, donors, pool, cfg.mask_rate, seed) {
            Ok(instance) => instance,
            // degenerate anchors fall back to a pure masking view
            Err(crate::augment::AugmentError::NoApplicableOperator) => {
                feature_mask(&entry.graph, &entry.sql, cfg.mask_rate, seed)
            }
            Err(other) => return Err(other.into()),
        };
        debug_assert!(
            instance.kind != AugmentKind::FeatureMasking || instance.graph == entry.graph
        );
        let features = assemble_features(&instance.graph, &instance.masked_node_ids, embedder)?;
        let edges = message_edges(&instance.graph);
        pos_caches.push(forward(params, &features, &edges)?);
    }

    let neg_seed = sub_seed(cfg.seed, epoch, idx as u64, 2);
    let neg_indices = sample_negatives(entries.len(), idx, cfg.n_negative, neg_seed)?;
    let mut neg_caches = Vec::with_capacity(neg_indices.len());
    for nidx in neg_indices {
        let negative = &entries[nidx];
        neg_caches.push(forward(params, &negative.features, &negative.edges)?);
    }

    let z_pos: Vec<_> = pos_caches.iter().map(|c| c.z.clone()).collect();
    let z_neg: Vec<_> = neg_caches.iter().map(|c| c.z.clone()).collect();
    let result = nt_xent_with_grads(&anchor_cache.z, &z_pos, &z_neg, cfg.tau)?;
    backward(params, &anchor_cache, &result.d_anchor, grads);
    for (cache, d_z) in pos_caches.iter().zip(&result.d_positives) {
        backward(params, cache, d_z, grads);
    }
    for (cache, d_z) in neg_caches.iter().zip(&result.d_negatives) {
        backward(params, cache, d_z, grads);
    }
    Ok(result.loss)
}
