//! Demonstration selection over a precomputed candidate pool.
//!
//! Five strategies: random, same-hardness random, Jaccard similarity of
//! question token sets, smallest pq-gram distance to a zero-shot initial SQL
//! (the tree route), and highest cosine similarity of contrastive graph
//! embeddings (the graph route). Pools stay small enough (≤10⁴) that every
//! top-k is an exact linear scan.

use crate::ast::{self, normalize_ast, parse_sql, Expr, Query, SelectItem, SetExpr};
use crate::embed::Embedder;
use crate::gcl::{embed_sql, EncoderParams};
use crate::llm::{extract_sql, LlmClient, LlmError};
use crate::prompt::{build_prompt, PromptBundle};
use crate::treedist::{pq_gram_distance, pq_gram_profile, PqGramProfile};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("pool of {0} candidates cannot supply {1}")]
    PoolTooSmall(usize, usize),
    #[error("index was built without an encoder checkpoint; graph strategy unavailable")]
    MissingEmbeddings,
    #[error("index was built with checkpoint {built}, queried with {queried}")]
    CheckpointMismatch { built: String, queried: String },
    #[error(transparent)]
    Syntax(#[from] ast::SyntaxError),
    #[error(transparent)]
    Metric(#[from] crate::treedist::TreeMetricError),
    #[error(transparent)]
    Gcl(#[from] crate::gcl::GclError),
    #[error("index i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("index format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    Extra,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra];

    pub fn name(self) -> &'static str {
        match self {
            Hardness::Easy => "easy",
            Hardness::Medium => "medium",
            Hardness::Hard => "hard",
            Hardness::Extra => "extra",
        }
    }

    pub fn parse(s: &str) -> Option<Hardness> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Some(Hardness::Easy),
            "medium" | "normal" => Some(Hardness::Medium),
            "hard" => Some(Hardness::Hard),
            "extra" | "extra hard" => Some(Hardness::Extra),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// hardness classification
// ---------------------------------------------------------------------------

/// Clause statistics in the shape the standard Spider difficulty rules
/// expect. Counts for a compound query come from its first select core, with
/// each further arm counted as one nested query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HardnessCounts {
    pub has_where: bool,
    pub has_group_by: bool,
    pub has_order_by: bool,
    pub has_limit: bool,
    pub join_count: usize,
    pub or_count: usize,
    pub like_count: usize,
    pub nested_count: usize,
    pub aggregate_count: usize,
    pub select_columns: usize,
    pub where_conditions: usize,
    pub group_by_columns: usize,
}

impl HardnessCounts {
    fn component1(&self) -> usize {
        usize::from(self.has_where)
            + usize::from(self.has_group_by)
            + usize::from(self.has_order_by)
            + usize::from(self.has_limit)
            + self.join_count
            + self.or_count
            + self.like_count
    }

    /// The standard four-way difficulty decision over component counts.
    pub fn classify(&self) -> Hardness {
        let comp1 = self.component1();
        let comp2 = self.nested_count;
        let mut others = 0;
        if self.aggregate_count > 1 {
            others += 1;
        }
        if self.select_columns > 1 {
            others += 1;
        }
        if self.where_conditions > 1 {
            others += 1;
        }
        if self.group_by_columns > 1 {
            others += 1;
        }
        if comp1 <= 1 && others == 0 && comp2 == 0 {
            Hardness::Easy
        } else if (others <= 2 && comp1 <= 1 && comp2 == 0)
            || (comp1 <= 2 && others < 2 && comp2 == 0)
        {
            Hardness::Medium
        } else if (others > 2 && comp1 <= 2 && comp2 == 0)
            || (comp1 > 2 && comp1 <= 3 && others <= 2 && comp2 == 0)
            || (comp1 <= 1 && others == 0 && comp2 <= 1)
        {
            Hardness::Hard
        } else {
            Hardness::Extra
        }
    }
}

/// Extract clause statistics from a parsed query.
pub fn hardness_counts(query: &Query) -> HardnessCounts {
    let mut counts = HardnessCounts::default();
    // walk to the first select core; other compound arms are nested queries
    let mut body = &query.body;
    loop {
        match body {
            SetExpr::Select(select) => {
                fill_core_counts(select, &mut counts);
                break;
            }
            SetExpr::Compound { left, .. } => {
                counts.nested_count += 1;
                body = left;
            }
        }
    }
    counts.has_order_by = !query.order_by.is_empty();
    counts.has_limit = query.limit.is_some();
    for item in &query.order_by {
        counts.aggregate_count += count_aggregates(&item.expr);
    }
    counts
}

fn fill_core_counts(select: &ast::Select, counts: &mut HardnessCounts) {
    counts.select_columns = select.items.len();
    for item in &select.items {
        if let SelectItem::Expr { expr, .. } = item {
            counts.aggregate_count += count_aggregates(expr);
        }
    }
    if let Some(from) = &select.from {
        counts.join_count = from.joins.len();
        for table in std::iter::once(&from.base).chain(from.joins.iter().map(|j| &j.table)) {
            if matches!(table, ast::TableRef::Subquery { .. }) {
                counts.nested_count += 1;
            }
        }
    }
    if let Some(pred) = &select.where_clause {
        counts.has_where = true;
        let conditions = connective_chain(pred);
        counts.where_conditions = conditions.len();
        for condition in &conditions {
            counts.aggregate_count += count_aggregates(condition);
            counts.like_count += usize::from(matches!(condition, Expr::Like { .. }));
            counts.nested_count += count_condition_subqueries(condition);
        }
        counts.or_count += count_or_connectives(pred);
    }
    counts.has_group_by = !select.group_by.is_empty();
    counts.group_by_columns = select.group_by.len();
    for expr in &select.group_by {
        counts.aggregate_count += count_aggregates(expr);
    }
    if let Some(pred) = &select.having {
        let conditions = connective_chain(pred);
        for condition in &conditions {
            counts.aggregate_count += count_aggregates(condition);
            counts.like_count += usize::from(matches!(condition, Expr::Like { .. }));
            counts.nested_count += count_condition_subqueries(condition);
        }
        counts.or_count += count_or_connectives(pred);
    }
}

/// Leaves of the top-level AND/OR tree.
fn connective_chain(expr: &Expr) -> Vec<&Expr> {
    match expr {
        Expr::Binary { left, op, right } if op.is_logical() => {
            let mut out = connective_chain(left);
            out.extend(connective_chain(right));
            out
        }
        other => vec![other],
    }
}

fn count_or_connectives(expr: &Expr) -> usize {
    match expr {
        Expr::Binary {
            left,
            op: ast::BinaryOp::Or,
            right,
        } => 1 + count_or_connectives(left) + count_or_connectives(right),
        Expr::Binary { left, op, right } if op.is_logical() => {
            count_or_connectives(left) + count_or_connectives(right)
        }
        _ => 0,
    }
}

fn count_aggregates(expr: &Expr) -> usize {
    let mut n = 0;
    // subqueries are counted separately as nesting, not aggregation
    fn walk(expr: &Expr, n: &mut usize) {
        if expr.is_aggregate() {
            *n += 1;
        }
        match expr {
            Expr::Unary { operand, .. } | Expr::IsNull { operand, .. } | Expr::Cast { operand, .. } => {
                walk(operand, n)
            }
            Expr::Binary { left, right, .. } => {
                walk(left, n);
                walk(right, n);
            }
            Expr::Function { args, .. } => {
                for arg in args {
                    walk(arg, n);
                }
            }
            Expr::InList { operand, items, .. } => {
                walk(operand, n);
                for item in items {
                    walk(item, n);
                }
            }
            Expr::Between {
                operand, low, high, ..
            } => {
                walk(operand, n);
                walk(low, n);
                walk(high, n);
            }
            Expr::Like {
                operand, pattern, ..
            } => {
                walk(operand, n);
                walk(pattern, n);
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(operand) = operand {
                    walk(operand, n);
                }
                for (c, r) in branches {
                    walk(c, n);
                    walk(r, n);
                }
                if let Some(e) = else_result {
                    walk(e, n);
                }
            }
            _ => {}
        }
    }
    walk(expr, &mut n);
    n
}

fn count_condition_subqueries(expr: &Expr) -> usize {
    match expr {
        Expr::InSubquery { .. } | Expr::Exists { .. } => 1,
        Expr::Subquery(_) => 1,
        Expr::Binary { left, right, .. } => {
            count_condition_subqueries(left) + count_condition_subqueries(right)
        }
        Expr::Unary { operand, .. } => count_condition_subqueries(operand),
        Expr::Between {
            operand, low, high, ..
        } => {
            count_condition_subqueries(operand)
                + count_condition_subqueries(low)
                + count_condition_subqueries(high)
        }
        Expr::Like {
            operand, pattern, ..
        } => count_condition_subqueries(operand) + count_condition_subqueries(pattern),
        _ => 0,
    }
}

/// Rule-based difficulty of one statement, following the standard Spider
/// evaluation convention.
pub fn classify_hardness(query: &Query) -> Hardness {
    hardness_counts(query).classify()
}

// ---------------------------------------------------------------------------
// candidate index
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DemonstrationCandidate {
    pub question: String,
    pub sql: String,
    pub db_id: String,
    pub hardness: Hardness,
    pub pq_profile: PqGramProfile,
    pub embedding: Option<Vec<f32>>,
}

#[derive(Debug)]
pub struct CandidateIndex {
    pub candidates: Vec<DemonstrationCandidate>,
    pub p: usize,
    pub q: usize,
    /// Content hash of the encoder checkpoint the embeddings came from.
    pub checkpoint_id: Option<String>,
    token_sets: Vec<BTreeSet<String>>,
}

/// Content hash identifying a set of encoder parameters.
pub fn checkpoint_id(params: &EncoderParams) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(params.meta.provider_id.as_bytes());
    for (name, tensor) in params.tensors() {
        hasher.update(name.as_bytes());
        match tensor {
            crate::gcl::Tensor::Mat(m) => {
                for x in m.iter() {
                    hasher.update((*x as f32).to_le_bytes());
                }
            }
            crate::gcl::Tensor::Vec(v) => {
                for x in v.iter() {
                    hasher.update((*x as f32).to_le_bytes());
                }
            }
        }
    }
    hasher
        .finalize()
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn question_tokens(question: &str) -> BTreeSet<String> {
    question
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

/// Outcome of building an index: the index plus how many rows were skipped
/// as unparseable (or out of the modeled graph subset when embedding).
pub struct BuildReport {
    pub index: CandidateIndex,
    pub skipped: usize,
    pub unembedded: usize,
}

/// Precompute profiles, hardness labels, and (when an encoder is supplied)
/// graph embeddings for every training pair.
pub fn build_index(
    rows: &[(String, String, String)],
    encoder: Option<(&EncoderParams, &Embedder)>,
    p: usize,
    q: usize,
) -> Result<BuildReport, SelectError> {
    let mut candidates = Vec::with_capacity(rows.len());
    let mut token_sets = Vec::with_capacity(rows.len());
    let mut skipped = 0usize;
    let mut unembedded = 0usize;
    for (question, sql, db_id) in rows {
        let query = match parse_sql(sql) {
            Ok(query) => query,
            Err(err) => {
                log::warn!("skipping unparseable training row `{sql}`: {err}");
                skipped += 1;
                continue;
            }
        };
        let tree = normalize_ast(&query);
        let profile = pq_gram_profile(&tree, p, q)?;
        let hardness = classify_hardness(&query);
        let embedding = match encoder {
            Some((params, embedder)) => match embed_sql(params, sql, embedder) {
                Ok(z) => Some(z.iter().map(|x| *x as f32).collect()),
                Err(err) => {
                    log::warn!("no embedding for `{sql}`: {err}");
                    unembedded += 1;
                    None
                }
            },
            None => None,
        };
        token_sets.push(question_tokens(question));
        candidates.push(DemonstrationCandidate {
            question: question.clone(),
            sql: sql.clone(),
            db_id: db_id.clone(),
            hardness,
            pq_profile: profile,
            embedding,
        });
    }
    Ok(BuildReport {
        index: CandidateIndex {
            candidates,
            p,
            q,
            checkpoint_id: encoder.map(|(params, _)| checkpoint_id(params)),
            token_sets,
        },
        skipped,
        unembedded,
    })
}

impl CandidateIndex {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// k distinct uniform picks.
    pub fn select_random(&self, k: usize, seed: u64) -> Result<Vec<usize>, SelectError> {
        if k > self.len() {
            return Err(SelectError::PoolTooSmall(self.len(), k));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids: Vec<usize> = (0..self.len()).collect();
        ids.shuffle(&mut rng);
        ids.truncate(k);
        Ok(ids)
    }

    /// k random picks sharing the target difficulty, widening to adjacent
    /// buckets (with a warning) when the bucket is too small.
    pub fn select_hardness(&self, target: Hardness, k: usize, seed: u64) -> Result<Vec<usize>, SelectError> {
        if k > self.len() {
            return Err(SelectError::PoolTooSmall(self.len(), k));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bucket_of = |h: Hardness| -> Vec<usize> {
            (0..self.len())
                .filter(|&i| self.candidates[i].hardness == h)
                .collect()
        };
        let mut pool = bucket_of(target);
        if pool.len() < k {
            log::warn!(
                "hardness bucket {} has only {} candidates; widening to adjacent buckets",
                target.name(),
                pool.len()
            );
            let target_pos = Hardness::ALL.iter().position(|h| *h == target).unwrap();
            let mut by_distance: Vec<Hardness> = Hardness::ALL.to_vec();
            by_distance.sort_by_key(|h| {
                let pos = Hardness::ALL.iter().position(|x| x == h).unwrap();
                (pos.abs_diff(target_pos), pos)
            });
            for h in by_distance.into_iter().skip(1) {
                if pool.len() >= k {
                    break;
                }
                pool.extend(bucket_of(h));
            }
        }
        pool.shuffle(&mut rng);
        pool.truncate(k);
        Ok(pool)
    }

    /// Deterministic top-k by Jaccard similarity of lowercased question
    /// token sets, ties broken by ascending candidate id.
    pub fn select_jaccard(&self, question: &str, k: usize) -> Result<Vec<usize>, SelectError> {
        if k > self.len() {
            return Err(SelectError::PoolTooSmall(self.len(), k));
        }
        let tokens = question_tokens(question);
        let mut scored: Vec<(usize, f64)> = self
            .token_sets
            .iter()
            .enumerate()
            .map(|(i, set)| (i, jaccard(&tokens, set)))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
    }

    /// Top-k smallest pq-gram distance between the initial SQL's label tree
    /// and each candidate's, ties by ascending candidate id.
    pub fn select_struct_tree(&self, initial_sql: &str, k: usize) -> Result<Vec<usize>, SelectError> {
        if k > self.len() {
            return Err(SelectError::PoolTooSmall(self.len(), k));
        }
        let query = parse_sql(initial_sql)?;
        let profile = pq_gram_profile(&normalize_ast(&query), self.p, self.q)?;
        let mut scored: Vec<(usize, u64)> = Vec::with_capacity(self.len());
        for (i, candidate) in self.candidates.iter().enumerate() {
            scored.push((i, pq_gram_distance(&profile, &candidate.pq_profile)?));
        }
        scored.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
    }

    /// Top-k largest cosine similarity between the initial SQL's graph
    /// embedding and each candidate's, ties by ascending candidate id.
    pub fn select_struct_graph(
        &self,
        initial_sql: &str,
        k: usize,
        params: &EncoderParams,
        embedder: &Embedder,
    ) -> Result<Vec<usize>, SelectError> {
        if k > self.len() {
            return Err(SelectError::PoolTooSmall(self.len(), k));
        }
        let built = self
            .checkpoint_id
            .as_ref()
            .ok_or(SelectError::MissingEmbeddings)?;
        let queried = checkpoint_id(params);
        if *built != queried {
            return Err(SelectError::CheckpointMismatch {
                built: built.clone(),
                queried,
            });
        }
        let z = embed_sql(params, initial_sql, embedder)?;
        let query_norm = z.dot(&z).sqrt();
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(self.len());
        for (i, candidate) in self.candidates.iter().enumerate() {
            let score = match &candidate.embedding {
                Some(embedding) => {
                    let dot: f64 = embedding
                        .iter()
                        .zip(z.iter())
                        .map(|(a, b)| f64::from(*a) * b)
                        .sum();
                    let norm: f64 = embedding
                        .iter()
                        .map(|a| f64::from(*a) * f64::from(*a))
                        .sum::<f64>()
                        .sqrt();
                    if norm == 0.0 || query_norm == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        dot / (norm * query_norm)
                    }
                }
                None => f64::NEG_INFINITY,
            };
            scored.push((i, score));
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
    }

    // ----- persistence ------------------------------------------------------

    const MAGIC: &'static [u8; 8] = b"T2SQIDX\x01";

    pub fn save(&self, path: &Path) -> Result<(), SelectError> {
        let mut out = Vec::new();
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(self.p as u32).to_le_bytes());
        out.extend_from_slice(&(self.q as u32).to_le_bytes());
        let ckpt = self.checkpoint_id.clone().unwrap_or_default();
        out.extend_from_slice(&(ckpt.len() as u32).to_le_bytes());
        out.extend_from_slice(ckpt.as_bytes());
        out.extend_from_slice(&(self.candidates.len() as u64).to_le_bytes());
        let write_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        for candidate in &self.candidates {
            write_str(&mut out, &candidate.question);
            write_str(&mut out, &candidate.sql);
            write_str(&mut out, &candidate.db_id);
            out.push(match candidate.hardness {
                Hardness::Easy => 0,
                Hardness::Medium => 1,
                Hardness::Hard => 2,
                Hardness::Extra => 3,
            });
            let grams = candidate.pq_profile.grams();
            out.extend_from_slice(&(grams.len() as u32).to_le_bytes());
            for gram in grams {
                for label in gram {
                    out.push(match label {
                        None => u8::MAX,
                        Some(l) => *l as u8,
                    });
                }
            }
            match &candidate.embedding {
                Some(embedding) => {
                    out.extend_from_slice(&(embedding.len() as u32).to_le_bytes());
                    for x in embedding {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                None => out.extend_from_slice(&0u32.to_le_bytes()),
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CandidateIndex, SelectError> {
        let data = std::fs::read(path)?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], SelectError> {
            if *pos + n > data.len() {
                return Err(SelectError::Format("truncated index".to_string()));
            }
            let slice = &data[*pos..*pos + n];
            *pos += n;
            Ok(slice)
        };
        macro_rules! read_u32 {
            () => {
                u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize
            };
        }
        if take(&mut pos, 8)? != Self::MAGIC {
            return Err(SelectError::Format("bad index magic".to_string()));
        }
        let p = read_u32!();
        let q = read_u32!();
        let ckpt_len = read_u32!();
        let ckpt = String::from_utf8(take(&mut pos, ckpt_len)?.to_vec())
            .map_err(|_| SelectError::Format("bad checkpoint id".to_string()))?;
        let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let mut candidates = Vec::with_capacity(count);
        let mut token_sets = Vec::with_capacity(count);
        for _ in 0..count {
            let qlen = read_u32!();
            let question = String::from_utf8(take(&mut pos, qlen)?.to_vec())
                .map_err(|_| SelectError::Format("bad question".to_string()))?;
            let slen = read_u32!();
            let sql = String::from_utf8(take(&mut pos, slen)?.to_vec())
                .map_err(|_| SelectError::Format("bad sql".to_string()))?;
            let dlen = read_u32!();
            let db_id = String::from_utf8(take(&mut pos, dlen)?.to_vec())
                .map_err(|_| SelectError::Format("bad db id".to_string()))?;
            let hardness = match take(&mut pos, 1)?[0] {
                0 => Hardness::Easy,
                1 => Hardness::Medium,
                2 => Hardness::Hard,
                3 => Hardness::Extra,
                other => {
                    return Err(SelectError::Format(format!("bad hardness byte {other}")))
                }
            };
            let gram_count = read_u32!();
            let gram_len = p + q;
            let mut grams = Vec::with_capacity(gram_count);
            for _ in 0..gram_count {
                let bytes = take(&mut pos, gram_len)?;
                let gram: Result<Vec<_>, SelectError> = bytes
                    .iter()
                    .map(|&b| {
                        if b == u8::MAX {
                            Ok(None)
                        } else {
                            crate::treedist::label_from_code(b)
                                .map(Some)
                                .ok_or_else(|| {
                                    SelectError::Format(format!("bad label code {b}"))
                                })
                        }
                    })
                    .collect();
                grams.push(gram?);
            }
            let profile = PqGramProfile::from_sorted_grams(p, q, grams)
                .map_err(|e| SelectError::Format(e.to_string()))?;
            let elen = read_u32!();
            let embedding = if elen == 0 {
                None
            } else {
                let mut v = Vec::with_capacity(elen);
                for _ in 0..elen {
                    v.push(f32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()));
                }
                Some(v)
            };
            token_sets.push(question_tokens(&question));
            candidates.push(DemonstrationCandidate {
                question,
                sql,
                db_id,
                hardness,
                pq_profile: profile,
                embedding,
            });
        }
        Ok(CandidateIndex {
            candidates,
            p,
            q,
            checkpoint_id: if ckpt.is_empty() { None } else { Some(ckpt) },
            token_sets,
        })
    }
}

// ---------------------------------------------------------------------------
// zero-shot initial SQL
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSql {
    /// Parsed zero-shot generation, usable as the structural query.
    Sql(String),
    /// Both attempts failed to parse; callers fall back to the Jaccard
    /// strategy.
    Fallback,
}

/// Ask the model once with a zero-shot prompt (no demonstration section) for
/// an initial SQL to use as the structural query; one retry on a reply with
/// no parseable statement.
pub fn initial_sql(
    question: &str,
    schema_ddl: &str,
    client: &LlmClient,
) -> Result<InitialSql, LlmError> {
    let bundle = PromptBundle::zero_shot(schema_ddl.to_string(), question.to_string());
    let prompt = build_prompt(&bundle);
    debug_assert!(!prompt.contains("example pairs"));
    for attempt in 0..2 {
        let reply = client.complete(&prompt)?;
        match extract_sql(&reply.text) {
            Ok(sql) => return Ok(InitialSql::Sql(sql)),
            Err(_) if attempt == 0 => continue,
            Err(_) => break,
        }
    }
    Ok(InitialSql::Fallback)
}

#[cfg(test)]
mod tests;
