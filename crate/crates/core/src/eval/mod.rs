//! Execution-based evaluation harness: load a dataset, drive the full
//! pipeline per instance (select demonstrations → build prompt → complete →
//! extract → correct), and score with exact-set-match and execution-match
//! accuracy plus a difficulty breakdown and token cost.

mod dataset;
mod em;
mod ex;

pub use dataset::{database_path, load_dataset, DatasetFormat, DatasetInstance};
pub use em::exact_set_match;
pub use ex::execution_match;

use crate::ast::parse_sql;
use crate::correct::{correct, DbContext, GuidelineCatalog};
use crate::embed::Embedder;
use crate::gcl::EncoderParams;
use crate::llm::LlmClient;
use crate::prompt::{build_prompt_with_layout, render_schema_ddl, PromptBundle, SPIDER_LAYOUT};
use crate::schema::SchemaCatalog;
use crate::select::{classify_hardness, initial_sql, CandidateIndex, Hardness, InitialSql};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset format: {0}")]
    Format(String),
    #[error("database error: {0}")]
    Db(String),
    #[error("gold SQL failed to execute: {0}")]
    GoldExecution(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Schema(#[from] crate::schema::SchemaError),
    #[error(transparent)]
    Select(#[from] crate::select::SelectError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
    #[error(transparent)]
    Correct(#[from] crate::correct::CorrectError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("record store: {0}")]
    Records(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Hardness,
    Jaccard,
    StructTree,
    StructGraph,
    /// Score the gold SQL against itself — the harness self-test.
    Gold,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Strategy> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Some(Strategy::Random),
            "hardness" => Some(Strategy::Hardness),
            "jaccard" | "question" => Some(Strategy::Jaccard),
            "struct-tree" | "tree" => Some(Strategy::StructTree),
            "struct-graph" | "graph" => Some(Strategy::StructGraph),
            "gold" | "gold-passthrough" => Some(Strategy::Gold),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Hardness => "hardness",
            Strategy::Jaccard => "jaccard",
            Strategy::StructTree => "struct-tree",
            Strategy::StructGraph => "struct-graph",
            Strategy::Gold => "gold",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub layout: String,
    pub correction: bool,
    pub max_instances: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: Strategy::Jaccard,
            k: 5,
            seed: 0,
            layout: SPIDER_LAYOUT.to_string(),
            correction: true,
            max_instances: None,
        }
    }
}

/// Everything the pipeline needs that outlives one run.
pub struct EvalDeps<'a> {
    pub catalog: &'a SchemaCatalog,
    pub db_root: &'a Path,
    pub index: Option<&'a CandidateIndex>,
    pub encoder: Option<&'a EncoderParams>,
    pub embedder: Option<&'a Embedder>,
    pub client: Option<&'a LlmClient>,
    pub guidelines: &'a GuidelineCatalog,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceRecord {
    pub index: usize,
    pub question: String,
    pub db_id: String,
    pub hardness: String,
    pub gold_sql: String,
    pub predicted_sql: String,
    pub corrected_sql: String,
    pub prompt_tokens: u64,
    pub exact_match: bool,
    pub execution_match: bool,
    pub applied_rules: Vec<String>,
    pub prompt_correction_used: bool,
    pub error_tags: Vec<String>,
    /// Set when the instance was skipped (gold failed to execute).
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct HardnessRow {
    pub count: usize,
    pub exact_matches: usize,
    pub execution_matches: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub strategy: String,
    pub k: usize,
    pub instances: usize,
    pub scored: usize,
    pub skipped: usize,
    pub em_accuracy: f64,
    pub ex_accuracy: f64,
    pub per_hardness: BTreeMap<String, HardnessRow>,
    pub total_prompt_tokens: u64,
    pub records: Vec<InstanceRecord>,
}

impl EvalReport {
    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "strategy={} k={} instances={} scored={} skipped={}\n",
            self.strategy, self.k, self.instances, self.scored, self.skipped
        ));
        out.push_str(&format!(
            "EM {:.4}  EX {:.4}  prompt-tokens {}\n",
            self.em_accuracy, self.ex_accuracy, self.total_prompt_tokens
        ));
        out.push_str("hardness  count  EM      EX\n");
        for (name, row) in &self.per_hardness {
            let em = if row.count > 0 {
                row.exact_matches as f64 / row.count as f64
            } else {
                0.0
            };
            let ex = if row.count > 0 {
                row.execution_matches as f64 / row.count as f64
            } else {
                0.0
            };
            out.push_str(&format!("{name:<9} {:<6} {em:.4}  {ex:.4}\n", row.count));
        }
        out
    }
}

/// Run the pipeline over a dataset. When `records_path` is given, existing
/// per-instance records are reused (resume) and new ones appended.
pub fn evaluate(
    instances: &[DatasetInstance],
    config: &PipelineConfig,
    deps: &EvalDeps<'_>,
    records_path: Option<&Path>,
) -> Result<EvalReport, EvalError> {
    let limit = config.max_instances.unwrap_or(instances.len());
    let todo: Vec<(usize, &DatasetInstance)> = instances.iter().take(limit).enumerate().collect();

    let mut done: BTreeMap<usize, InstanceRecord> = BTreeMap::new();
    if let Some(path) = records_path {
        if path.exists() {
            for (line_no, line) in std::fs::read_to_string(path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: InstanceRecord = serde_json::from_str(line)
                    .map_err(|e| EvalError::Records(format!("line {line_no}: {e}")))?;
                done.insert(record.index, record);
            }
        }
    }

    // one value-lookup context per database
    let contexts: Mutex<BTreeMap<String, std::sync::Arc<DbContext>>> = Mutex::new(BTreeMap::new());
    let context_for = |db_id: &str| -> Result<std::sync::Arc<DbContext>, EvalError> {
        if let Some(ctx) = contexts.lock().expect("ctx lock").get(db_id) {
            return Ok(ctx.clone());
        }
        let schema = deps.catalog.require(db_id)?.clone();
        let db_file = database_path(deps.db_root, db_id);
        let ctx = if db_file.exists() {
            DbContext::from_sqlite(schema, &db_file)?
        } else {
            DbContext::without_values(schema)
        };
        let ctx = std::sync::Arc::new(ctx);
        contexts
            .lock()
            .expect("ctx lock")
            .insert(db_id.to_string(), ctx.clone());
        Ok(ctx)
    };

    let worker_count = deps
        .client
        .map(|c| c.in_flight_limit())
        .unwrap_or(1)
        .clamp(1, 8);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Mutex<Vec<InstanceRecord>> = Mutex::new(Vec::with_capacity(todo.len()));
    let failure: Mutex<Option<EvalError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if slot >= todo.len() {
                    break;
                }
                let (index, instance) = todo[slot];
                if let Some(existing) = done.get(&index) {
                    results.lock().expect("results").push(existing.clone());
                    continue;
                }
                match run_instance(index, instance, config, deps, &context_for) {
                    Ok(record) => results.lock().expect("results").push(record),
                    Err(err) => {
                        let mut failure = failure.lock().expect("failure");
                        if failure.is_none() {
                            *failure = Some(err);
                        }
                        break;
                    }
                }
            });
        }
    });
    if let Some(err) = failure.into_inner().expect("failure lock") {
        return Err(err);
    }

    let mut records = results.into_inner().expect("results lock");
    records.sort_by_key(|r| r.index);

    if let Some(path) = records_path {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut text = String::new();
        for record in &records {
            text.push_str(&serde_json::to_string(record).expect("serializable record"));
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }

    Ok(summarize(config, &records))
}

fn summarize(config: &PipelineConfig, records: &[InstanceRecord]) -> EvalReport {
    let mut per_hardness: BTreeMap<String, HardnessRow> = BTreeMap::new();
    for h in Hardness::ALL {
        per_hardness.insert(h.name().to_string(), HardnessRow::default());
    }
    let mut em_hits = 0usize;
    let mut ex_hits = 0usize;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    let mut tokens = 0u64;
    for record in records {
        tokens += record.prompt_tokens;
        if record.skipped.is_some() {
            skipped += 1;
            continue;
        }
        scored += 1;
        let row = per_hardness.entry(record.hardness.clone()).or_default();
        row.count += 1;
        if record.exact_match {
            em_hits += 1;
            row.exact_matches += 1;
        }
        if record.execution_match {
            ex_hits += 1;
            row.execution_matches += 1;
        }
    }
    EvalReport {
        strategy: config.strategy.name().to_string(),
        k: config.k,
        instances: records.len(),
        scored,
        skipped,
        em_accuracy: if scored > 0 {
            em_hits as f64 / scored as f64
        } else {
            0.0
        },
        ex_accuracy: if scored > 0 {
            ex_hits as f64 / scored as f64
        } else {
            0.0
        },
        per_hardness,
        total_prompt_tokens: tokens,
        records: records.to_vec(),
    }
}

fn run_instance(
    index: usize,
    instance: &DatasetInstance,
    config: &PipelineConfig,
    deps: &EvalDeps<'_>,
    context_for: &dyn Fn(&str) -> Result<std::sync::Arc<DbContext>, EvalError>,
) -> Result<InstanceRecord, EvalError> {
    let ctx = context_for(&instance.db_id)?;
    let ddl = render_schema_ddl(&ctx.schema);
    let gold_query = parse_sql(&instance.gold_sql).ok();
    let hardness = instance
        .hardness_tag
        .or_else(|| gold_query.as_ref().map(classify_hardness))
        .unwrap_or(Hardness::Medium);

    let mut record = InstanceRecord {
        index,
        question: instance.question.clone(),
        db_id: instance.db_id.clone(),
        hardness: hardness.name().to_string(),
        gold_sql: instance.gold_sql.clone(),
        predicted_sql: String::new(),
        corrected_sql: String::new(),
        prompt_tokens: 0,
        exact_match: false,
        execution_match: false,
        applied_rules: Vec::new(),
        prompt_correction_used: false,
        error_tags: Vec::new(),
        skipped: None,
    };

    let mut demos: Vec<(String, String)> = Vec::new();
    let predicted = if config.strategy == Strategy::Gold {
        instance.gold_sql.clone()
    } else {
        let client = deps
            .client
            .ok_or_else(|| EvalError::Config("strategy requires an LLM client".to_string()))?;
        demos = match pick_demonstrations(instance, config, deps, &ddl, index) {
            Ok(demos) => demos,
            // selection needing a zero-shot call degrades to no demos when
            // the provider fails; the instance is flagged, not fatal
            Err(EvalError::Llm(err)) => {
                record.error_tags.push("provider-error".to_string());
                log::warn!("instance {index}: selection provider failure: {err}");
                Vec::new()
            }
            Err(other) => return Err(other),
        };
        let bundle = PromptBundle {
            instruction: crate::prompt::DEFAULT_INSTRUCTION.to_string(),
            demonstrations: demos.clone(),
            schema_ddl: ddl.clone(),
            evidence: instance.evidence.clone(),
            question: instance.question.clone(),
        };
        let prompt = build_prompt_with_layout(&bundle, &config.layout);
        record.prompt_tokens += crate::prompt::count_tokens(&prompt);
        // a provider failure flags the instance instead of aborting the run
        match client.complete(&prompt) {
            Ok(reply) => match crate::llm::extract_sql(&reply.text) {
                Ok(sql) => sql,
                Err(_) => reply.text,
            },
            Err(err) => {
                record.error_tags.push("provider-error".to_string());
                record.corrected_sql = String::new();
                log::warn!("instance {index}: provider failure: {err}");
                String::new()
            }
        }
    };
    record.predicted_sql = predicted.clone();

    let corrected = if config.correction && config.strategy != Strategy::Gold {
        let outcome = correct(
            &predicted,
            &ctx,
            hardness,
            &demos,
            deps.guidelines,
            deps.client,
        )?;
        record.applied_rules = outcome.applied_rules.clone();
        record.prompt_correction_used = outcome.prompt_correction_used;
        outcome.corrected
    } else {
        predicted
    };
    record.corrected_sql = corrected.clone();

    let pred_query = parse_sql(&corrected).ok();
    record.exact_match = match (&pred_query, &gold_query) {
        (Some(pred), Some(gold)) => exact_set_match(pred, gold),
        _ => false,
    };
    let db_file = database_path(deps.db_root, &instance.db_id);
    match execution_match(&corrected, &instance.gold_sql, &db_file) {
        Ok(matched) => record.execution_match = matched,
        Err(EvalError::GoldExecution(message)) => {
            record.skipped = Some(message);
        }
        Err(other) => return Err(other),
    }
    let mut tags = tag_errors(&record, pred_query.as_ref(), gold_query.as_ref());
    record.error_tags.append(&mut tags);
    Ok(record)
}

fn pick_demonstrations(
    instance: &DatasetInstance,
    config: &PipelineConfig,
    deps: &EvalDeps<'_>,
    ddl: &str,
    index: usize,
) -> Result<Vec<(String, String)>, EvalError> {
    if config.k == 0 {
        return Ok(Vec::new());
    }
    let pool = deps
        .index
        .ok_or_else(|| EvalError::Config("strategy requires a candidate index".to_string()))?;
    let seed = config.seed.wrapping_add(index as u64);
    let picks = match config.strategy {
        Strategy::Random => pool.select_random(config.k, seed)?,
        Strategy::Jaccard => pool.select_jaccard(&instance.question, config.k)?,
        Strategy::Hardness => {
            let client = deps
                .client
                .ok_or_else(|| EvalError::Config("hardness strategy needs a client".to_string()))?;
            let target = match initial_sql(&instance.question, ddl, client)? {
                InitialSql::Sql(sql) => parse_sql(&sql)
                    .map(|q| classify_hardness(&q))
                    .unwrap_or(Hardness::Medium),
                InitialSql::Fallback => Hardness::Medium,
            };
            pool.select_hardness(target, config.k, seed)?
        }
        Strategy::StructTree | Strategy::StructGraph => {
            let client = deps
                .client
                .ok_or_else(|| EvalError::Config("structural strategy needs a client".to_string()))?;
            match initial_sql(&instance.question, ddl, client)? {
                InitialSql::Sql(sql) => {
                    if config.strategy == Strategy::StructTree {
                        pool.select_struct_tree(&sql, config.k)?
                    } else {
                        let encoder = deps.encoder.ok_or_else(|| {
                            EvalError::Config("graph strategy needs a checkpoint".to_string())
                        })?;
                        let embedder = deps.embedder.ok_or_else(|| {
                            EvalError::Config("graph strategy needs an embedder".to_string())
                        })?;
                        pool.select_struct_graph(&sql, config.k, encoder, embedder)?
                    }
                }
                // unparseable zero-shot generations fall back to the
                // question-similarity route
                InitialSql::Fallback => pool.select_jaccard(&instance.question, config.k)?,
            }
        }
        Strategy::Gold => Vec::new(),
    };
    // most similar demonstration closest to the question (recency order)
    Ok(picks
        .into_iter()
        .rev()
        .map(|i| {
            let candidate = &pool.candidates[i];
            (candidate.question.clone(), candidate.sql.clone())
        })
        .collect())
}

/// Heuristic labels for failed instances, multi-label, best effort.
fn tag_errors(
    record: &InstanceRecord,
    pred: Option<&crate::ast::Query>,
    gold: Option<&crate::ast::Query>,
) -> Vec<String> {
    if record.execution_match && record.exact_match {
        return Vec::new();
    }
    let mut tags = Vec::new();
    let Some(pred) = pred else {
        return vec!["syntax".to_string()];
    };
    let Some(gold) = gold else {
        return tags;
    };
    if record.execution_match {
        return tags;
    }
    let shape = |q: &crate::ast::Query| {
        let counts = crate::select::hardness_counts(q);
        (
            counts.join_count,
            counts.nested_count,
            counts.has_group_by,
            counts.has_order_by,
        )
    };
    if shape(pred) != shape(gold) {
        tags.push("structure".to_string());
    }
    if !record.applied_rules.is_empty() || !record.error_tags.contains(&"schema".to_string()) {
        // identifier sets differ
        let idents = |q: &crate::ast::Query| {
            let mut set = std::collections::BTreeSet::new();
            crate::augment::visit_exprs(q, &mut |e| {
                if let crate::ast::Expr::Column(c) = e {
                    set.insert(c.column.to_lowercase());
                }
            });
            set
        };
        let pred_idents = idents(pred);
        let gold_idents = idents(gold);
        if pred_idents != gold_idents {
            tags.push("name-semantics".to_string());
        }
    }
    let aggs = |q: &crate::ast::Query| {
        let mut list = Vec::new();
        crate::augment::visit_exprs(q, &mut |e| {
            if let crate::ast::Expr::Function { name, .. } = e {
                if e.is_aggregate() {
                    list.push(name.to_lowercase());
                }
            }
        });
        list.sort();
        list
    };
    if aggs(pred) != aggs(gold) {
        tags.push("aggregation".to_string());
    }
    if tags.is_empty() {
        tags.push("schema".to_string());
    }
    tags
}
