//! Post-processing of generated SQL: four lightweight rule fixers, a
//! heuristic guideline picker, and an optional prompt-based rewrite pass.
//!
//! Scheduling: all rules run first; if any fired, the prompt pass is
//! skipped. Otherwise the prompt pass runs only for hard/extra instances, or
//! when the demonstrations suggest a structurally tricky case (multi-way
//! joins or set operators). Output always parses or is the original text
//! verbatim.

use crate::ast::{self, parse_sql, render_sql, BinaryOp, ColumnRef, Expr, Literal, Query, TableRef};
use crate::llm::{extract_sql, LlmClient, LlmError};
use crate::prompt::{build_prompt_with_layout, CORRECTION_INSTRUCTION};
use crate::schema::{ColumnType, DatabaseSchema};
use crate::select::Hardness;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrectError {
    #[error("database: {0}")]
    Db(#[from] rusqlite::Error),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

pub const RULE_STRING_FORMAT: &str = "string-format";
pub const RULE_SCHEMA_MISMATCH: &str = "schema-mismatch";
pub const RULE_INVALID_AGGREGATION: &str = "invalid-aggregation";
pub const RULE_JOIN_CONDITION: &str = "join-condition";

/// How far a fixed statement drifted from the model output, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub original: String,
    pub corrected: String,
    pub applied_rules: Vec<String>,
    pub prompt_correction_used: bool,
    pub guidelines_used: Vec<String>,
    /// Identifiers the schema-mismatch rule could not confidently repair.
    pub flagged_identifiers: Vec<String>,
    /// Provider failure that kept a wanted prompt pass from running.
    pub prompt_error: Option<String>,
}

/// Schema plus a bounded sample of distinct text values per column, read
/// from the actual database so literal repairs align with stored spellings.
#[derive(Debug, Clone)]
pub struct DbContext {
    pub schema: DatabaseSchema,
    /// (table lowercase, column lowercase) -> distinct values, sorted
    pub value_lookup: BTreeMap<(String, String), Vec<String>>,
}

pub const VALUE_LOOKUP_LIMIT: usize = 10_000;

impl DbContext {
    pub fn without_values(schema: DatabaseSchema) -> DbContext {
        DbContext {
            schema,
            value_lookup: BTreeMap::new(),
        }
    }

    /// Sample distinct values of every text column, deterministically
    /// (sorted, first 10,000).
    pub fn from_sqlite(schema: DatabaseSchema, db_path: &std::path::Path) -> Result<DbContext, CorrectError> {
        let conn = rusqlite::Connection::open_with_flags(
            db_path,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
        )?;
        let mut value_lookup = BTreeMap::new();
        for table in &schema.tables {
            for column in &table.columns {
                if column.col_type != ColumnType::Text {
                    continue;
                }
                let sql = format!(
                    "SELECT DISTINCT \"{}\" FROM \"{}\" WHERE \"{}\" IS NOT NULL ORDER BY 1 LIMIT {}",
                    column.name, table.name, column.name, VALUE_LOOKUP_LIMIT
                );
                let mut stmt = match conn.prepare(&sql) {
                    Ok(stmt) => stmt,
                    Err(err) => {
                        log::warn!("value lookup skipped for {}.{}: {err}", table.name, column.name);
                        continue;
                    }
                };
                let values: Vec<String> = stmt
                    .query_map([], |row| row.get::<_, String>(0))?
                    .filter_map(Result::ok)
                    .collect();
                value_lookup.insert(
                    (table.name.to_lowercase(), column.name.to_lowercase()),
                    values,
                );
            }
        }
        Ok(DbContext {
            schema,
            value_lookup,
        })
    }

    fn values_of(&self, table: &str, column: &str) -> Option<&Vec<String>> {
        self.value_lookup
            .get(&(table.to_lowercase(), column.to_lowercase()))
    }
}

// ---------------------------------------------------------------------------
// column binding (alias resolution against the statement)
// ---------------------------------------------------------------------------

/// Binding frames for resolving a column reference to its table, matching
/// the statement's own FROM clauses rather than the schema.
fn local_bindings(select: &ast::Select) -> Vec<(String, String)> {
    let mut frame = Vec::new();
    if let Some(from) = &select.from {
        let mut add = |t: &TableRef| {
            if let TableRef::Named { name, alias } = t {
                frame.push((
                    alias.clone().unwrap_or_else(|| name.clone()).to_lowercase(),
                    name.clone(),
                ));
            }
        };
        add(&from.base);
        for join in &from.joins {
            add(&join.table);
        }
    }
    frame
}

fn resolve_column<'a>(frame: &'a [(String, String)], column: &ColumnRef) -> Option<&'a str> {
    match &column.table {
        Some(q) => frame
            .iter()
            .find(|(binding, _)| binding.eq_ignore_ascii_case(q))
            .map(|(_, table)| table.as_str()),
        None => {
            if frame.len() == 1 {
                Some(frame[0].1.as_str())
            } else {
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// rule 1: string format
// ---------------------------------------------------------------------------

fn normalize_for_match(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Replace string literals that match a stored database value up to case
/// and whitespace with the stored spelling.
pub fn fix_string_format(query: &Query, ctx: &DbContext) -> (Query, bool) {
    let mut out = query.clone();
    let mut applied = false;
    fn align(
        ctx: &DbContext,
        frame: &[(String, String)],
        column: &ColumnRef,
        text: &mut String,
    ) -> bool {
        let Some(table) = resolve_column(frame, column) else {
            return false;
        };
        let Some(values) = ctx.values_of(table, &column.column) else {
            return false;
        };
        if values.contains(text) {
            return false;
        }
        let wanted = normalize_for_match(text);
        if let Some(stored) = values.iter().find(|v| normalize_for_match(v) == wanted) {
            *text = stored.clone();
            return true;
        }
        false
    }
    for_each_select_with_frame(&mut out, &mut |select, frame| {
        visit_select_exprs_mut(select, &mut |expr| match expr {
            Expr::Binary { left, op, right } if op.is_comparison() => {
                if let Expr::Column(column) = left.as_ref() {
                    let column = column.clone();
                    if let Expr::Literal(Literal::String(text)) = right.as_mut() {
                        applied |= align(ctx, frame, &column, text);
                    }
                }
            }
            Expr::InList { operand, items, .. } => {
                if let Expr::Column(column) = operand.as_ref() {
                    let column = column.clone();
                    for item in items {
                        if let Expr::Literal(Literal::String(text)) = item {
                            applied |= align(ctx, frame, &column, text);
                        }
                    }
                }
            }
            _ => {}
        });
    });
    (out, applied)
}

// ---------------------------------------------------------------------------
// rule 2: schema mismatch
// ---------------------------------------------------------------------------

/// Normalized edit similarity over lowercased, underscore-split names.
pub fn name_similarity(a: &str, b: &str) -> f64 {
    let canon = |s: &str| s.to_lowercase().split('_').collect::<Vec<_>>().join(" ");
    let a = canon(a);
    let b = canon(b);
    let dist = levenshtein(&a, &b);
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - dist as f64 / longest as f64
}

pub const SCHEMA_SIMILARITY_THRESHOLD: f64 = 0.5;

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        current[0] = i;
        for j in 1..=b.len() {
            let substitution = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            current[j] = substitution.min(prev[j] + 1).min(current[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// Pick the closest name above the threshold; ties go to the shorter name,
/// then lexicographic order.
fn best_match<'a>(target: &str, options: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for option in options {
        let score = name_similarity(target, option);
        if score < SCHEMA_SIMILARITY_THRESHOLD {
            continue;
        }
        let better = match best {
            None => true,
            Some((current, current_score)) => {
                score > current_score
                    || (score == current_score
                        && (option.len() < current.len()
                            || (option.len() == current.len() && option < current)))
            }
        };
        if better {
            best = Some((option, score));
        }
    }
    best.map(|(name, _)| name)
}

/// Rename hallucinated table and column identifiers to the closest schema
/// names; identifiers with no candidate above the threshold are flagged and
/// left intact.
pub fn fix_schema_mismatch(query: &Query, ctx: &DbContext) -> (Query, bool, Vec<String>) {
    let mut out = query.clone();
    let mut applied = false;
    let mut flagged = Vec::new();

    // tables first: column resolution depends on them
    let table_names: Vec<&str> = ctx.schema.tables.iter().map(|t| t.name.as_str()).collect();
    let mut table_renames: BTreeMap<String, String> = BTreeMap::new();
    crate::correct::visit_tables_mut(&mut out, &mut |table| {
        if let TableRef::Named { name, .. } = table {
            if ctx.schema.has_table(name) {
                return;
            }
            match best_match(name, table_names.iter().copied()) {
                Some(fixed) => {
                    table_renames.insert(name.to_lowercase(), fixed.to_string());
                    *name = fixed.to_string();
                    applied = true;
                }
                None => flagged.push(name.clone()),
            }
        }
    });

    // qualifiers written as table names follow the rename
    for_each_select_with_frame(&mut out, &mut |select, frame| {
        visit_select_exprs_mut(select, &mut |expr| {
            if let Expr::Column(col) = expr {
                if let Some(q) = &col.table {
                    if let Some(renamed) = table_renames.get(&q.to_lowercase()) {
                        // only when the qualifier is not an alias in scope
                        let is_alias = frame
                            .iter()
                            .any(|(binding, table)| binding.eq_ignore_ascii_case(q) && !table.eq_ignore_ascii_case(q));
                        if !is_alias {
                            col.table = Some(renamed.clone());
                        }
                    }
                }
            }
        });
    });

    // columns against their (possibly repaired) tables
    for_each_select_with_frame(&mut out, &mut |select, frame| {
        visit_select_exprs_mut(select, &mut |expr| {
            if let Expr::Column(col) = expr {
                let known = match resolve_column(frame, col) {
                    Some(table) => ctx
                        .schema
                        .table(table)
                        .map(|t| t.column(&col.column).is_some())
                        .unwrap_or(false),
                    None => frame.iter().any(|(_, table)| {
                        ctx.schema
                            .table(table)
                            .map(|t| t.column(&col.column).is_some())
                            .unwrap_or(false)
                    }),
                };
                if known {
                    return;
                }
                // candidates: columns of every table bound in this statement,
                // matched against both the bare name and the table-qualified
                // form so `singer_name` can reach singer's `Name`
                let mut candidates: Vec<(String, String)> = Vec::new();
                for (_, table) in frame.iter() {
                    if let Some(schema_table) = ctx.schema.table(table) {
                        for column in &schema_table.columns {
                            candidates.push((column.name.clone(), column.name.clone()));
                            candidates.push((
                                format!("{}_{}", schema_table.name, column.name),
                                column.name.clone(),
                            ));
                        }
                    }
                }
                match best_match(&col.column, candidates.iter().map(|(key, _)| key.as_str())) {
                    Some(fixed_key) => {
                        let fixed = candidates
                            .iter()
                            .find(|(key, _)| key == fixed_key)
                            .map(|(_, name)| name.clone())
                            .expect("key came from candidates");
                        col.column = fixed;
                        applied = true;
                    }
                    None => flagged.push(col.column.clone()),
                }
            }
        });
    });
    (out, applied, flagged)
}

// ---------------------------------------------------------------------------
// rule 3: invalid aggregation
// ---------------------------------------------------------------------------

/// MIN/MAX over a non-numeric, non-time column loses the aggregation;
/// COUNT over several attributes keeps only the first.
pub fn fix_invalid_aggregation(query: &Query, ctx: &DbContext) -> (Query, bool) {
    let mut out = query.clone();
    let mut applied = false;
    for_each_select_with_frame(&mut out, &mut |select, frame| {
        visit_select_exprs_mut(select, &mut |expr| {
            if let Expr::Function { name, args, .. } = expr {
                let lowered = name.to_lowercase();
                if (lowered == "min" || lowered == "max") && args.len() == 1 {
                    if let Expr::Column(col) = &args[0] {
                        let sortable = resolve_column(frame, col)
                            .and_then(|table| ctx.schema.table(table))
                            .and_then(|t| t.column(&col.column))
                            .map(|c| {
                                matches!(c.col_type, ColumnType::Number | ColumnType::Time)
                            })
                            // unknown columns are left for the schema rule
                            .unwrap_or(true);
                        if !sortable {
                            *expr = args[0].clone();
                            applied = true;
                        }
                    }
                } else if lowered == "count" && args.len() > 1 {
                    args.truncate(1);
                    applied = true;
                } else if lowered == "count" && args.is_empty() {
                    args.push(Expr::Wildcard);
                    applied = true;
                }
            }
        });
    });
    (out, applied)
}

// ---------------------------------------------------------------------------
// rule 4: join condition
// ---------------------------------------------------------------------------

/// Rewrite ON equalities that are not declared foreign keys: substitute a
/// declared FK pair between the same two tables when one exists, otherwise
/// drop the ON condition.
pub fn fix_join_condition(query: &Query, ctx: &DbContext) -> (Query, bool) {
    let mut out = query.clone();
    let mut applied = false;
    for_each_select_with_frame(&mut out, &mut |select, frame| {
        let frame = frame.to_vec();
        let Some(from) = &mut select.from else {
            return;
        };
        for join in &mut from.joins {
            let Some(on) = &join.on else { continue };
            let Expr::Binary { left, op: BinaryOp::Eq, right } = on else {
                continue;
            };
            let (Expr::Column(a), Expr::Column(b)) = (left.as_ref(), right.as_ref()) else {
                continue;
            };
            let (Some(table_a), Some(table_b)) =
                (resolve_column(&frame, a), resolve_column(&frame, b))
            else {
                continue;
            };
            if ctx
                .schema
                .is_foreign_key_pair(table_a, &a.column, table_b, &b.column)
            {
                continue;
            }
            let declared = ctx.schema.foreign_keys_between(table_a, table_b);
            match declared.first() {
                Some(fk) => {
                    // orient the pair to the query's qualifiers
                    let (qual_a, qual_b) = (a.table.clone(), b.table.clone());
                    let (col_a, col_b) = if fk.from_table.eq_ignore_ascii_case(table_a) {
                        (fk.from_column.clone(), fk.to_column.clone())
                    } else {
                        (fk.to_column.clone(), fk.from_column.clone())
                    };
                    join.on = Some(Expr::Binary {
                        left: Box::new(Expr::Column(ColumnRef {
                            table: qual_a,
                            column: col_a,
                        })),
                        op: BinaryOp::Eq,
                        right: Box::new(Expr::Column(ColumnRef {
                            table: qual_b,
                            column: col_b,
                        })),
                    });
                }
                None => {
                    join.on = None;
                }
            }
            applied = true;
        }
    });
    (out, applied)
}

// ---------------------------------------------------------------------------
// guidelines and the prompt pass
// ---------------------------------------------------------------------------

/// Editable id → guideline text catalog.
#[derive(Debug, Clone)]
pub struct GuidelineCatalog {
    pub entries: BTreeMap<String, String>,
}

pub const GUIDELINE_JOIN: &str = "join-necessity";
pub const GUIDELINE_ORDER_DISTINCT: &str = "order-distinct";
pub const GUIDELINE_CONJUNCTION: &str = "conjunction";
pub const GUIDELINE_SYNTAX: &str = "syntax";

impl Default for GuidelineCatalog {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            GUIDELINE_JOIN.to_string(),
            "Check whether each join is necessary; if the requested columns all live in one table, drop the join.".to_string(),
        );
        entries.insert(
            GUIDELINE_ORDER_DISTINCT.to_string(),
            "Check whether DESC, ASC, or DISTINCT is needed for the requested ordering or uniqueness.".to_string(),
        );
        entries.insert(
            GUIDELINE_CONJUNCTION.to_string(),
            "Consider whether a set operator (INTERSECT, UNION, EXCEPT) is needed to combine two selections.".to_string(),
        );
        entries.insert(
            GUIDELINE_SYNTAX.to_string(),
            "Reply with exactly one valid sqlite SELECT statement.".to_string(),
        );
        GuidelineCatalog { entries }
    }
}

impl GuidelineCatalog {
    /// Parse a `id<TAB>text` line catalog.
    pub fn from_text(text: &str) -> GuidelineCatalog {
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            if let Some((id, text)) = line.split_once('\t') {
                entries.insert(id.trim().to_string(), text.trim().to_string());
            }
        }
        GuidelineCatalog { entries }
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(id, text)| format!("{id}\t{text}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn text_of(&self, id: &str) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }
}

/// Guideline ids applicable to one statement given its difficulty context
/// and the demonstrations that produced it.
pub fn select_guidelines(
    query: &Query,
    _hardness: Hardness,
    demos: &[(String, String)],
) -> Vec<String> {
    let mut out = Vec::new();
    if single_table_answerable_with_joins(query) {
        out.push(GUIDELINE_JOIN.to_string());
    }
    if has_ordering_or_superlative(query) {
        out.push(GUIDELINE_ORDER_DISTINCT.to_string());
    }
    let demos_have_set_ops = demos.iter().any(|(_, sql)| {
        parse_sql(sql)
            .map(|q| matches!(q.body, ast::SetExpr::Compound { .. }))
            .unwrap_or(false)
    });
    if demos_have_set_ops {
        out.push(GUIDELINE_CONJUNCTION.to_string());
    }
    out
}

fn single_table_answerable_with_joins(query: &Query) -> bool {
    let ast::SetExpr::Select(select) = &query.body else {
        return false;
    };
    let Some(from) = &select.from else {
        return false;
    };
    if from.joins.is_empty() {
        return false;
    }
    let frame = local_bindings(select);
    let mut tables = std::collections::BTreeSet::new();
    for item in &select.items {
        if let ast::SelectItem::Expr { expr, .. } = item {
            let mut resolvable = true;
            visit_expr_columns(expr, &mut |col| match resolve_column(&frame, col) {
                Some(table) => {
                    tables.insert(table.to_lowercase());
                }
                None => resolvable = false,
            });
            if !resolvable {
                return false;
            }
        } else {
            return false;
        }
    }
    tables.len() == 1
}

fn has_ordering_or_superlative(query: &Query) -> bool {
    if !query.order_by.is_empty() {
        return true;
    }
    let mut found = false;
    crate::augment::visit_exprs(query, &mut |expr| {
        if let Expr::Function { name, .. } = expr {
            if name.eq_ignore_ascii_case("min") || name.eq_ignore_ascii_case("max") {
                found = true;
            }
        }
    });
    found
}

const CORRECTION_LAYOUT: &str =
    "### {instruction}\n\n{demonstrations}### Database schema:\n{schema}\n\n{evidence}### Guidelines:\n{guidelines}\n### SQL query to fix: {question}\n";

/// Build the correction prompt (instruction, schema, guidelines, candidate
/// SQL) and ask for a rewrite; an unparseable reply keeps the original.
pub fn prompt_correct(
    sql: &str,
    schema_ddl: &str,
    guideline_texts: &[String],
    client: &LlmClient,
) -> Result<(String, bool), CorrectError> {
    let bundle = crate::prompt::PromptBundle {
        instruction: CORRECTION_INSTRUCTION.to_string(),
        demonstrations: Vec::new(),
        schema_ddl: schema_ddl.to_string(),
        evidence: None,
        question: sql.to_string(),
    };
    let guidelines_block = guideline_texts
        .iter()
        .map(|g| format!("- {g}\n"))
        .collect::<String>();
    let layout = CORRECTION_LAYOUT.replace("{guidelines}", &guidelines_block);
    let prompt = build_prompt_with_layout(&bundle, &layout);
    let reply = client.complete(&prompt)?;
    match extract_sql(&reply.text) {
        Ok(fixed) => Ok((fixed, true)),
        Err(_) => Ok((sql.to_string(), false)),
    }
}

/// Full correction pipeline for one generated statement.
pub fn correct(
    sql: &str,
    ctx: &DbContext,
    hardness: Hardness,
    demos: &[(String, String)],
    catalog: &GuidelineCatalog,
    client: Option<&LlmClient>,
) -> Result<CorrectionOutcome, CorrectError> {
    let mut outcome = CorrectionOutcome {
        original: sql.to_string(),
        corrected: sql.to_string(),
        applied_rules: Vec::new(),
        prompt_correction_used: false,
        guidelines_used: Vec::new(),
        flagged_identifiers: Vec::new(),
        prompt_error: None,
    };

    let parsed = match parse_sql(sql) {
        Ok(query) => query,
        Err(_) => {
            // unparseable output goes straight to the prompt pass
            if let Some(client) = client {
                let guidelines = vec![catalog
                    .text_of(GUIDELINE_SYNTAX)
                    .unwrap_or("Reply with one valid SQL statement.")
                    .to_string()];
                let ddl = crate::prompt::render_schema_ddl(&ctx.schema);
                match prompt_correct(sql, &ddl, &guidelines, client) {
                    Ok((fixed, replaced)) => {
                        outcome.prompt_correction_used = true;
                        outcome.guidelines_used = vec![GUIDELINE_SYNTAX.to_string()];
                        if replaced {
                            outcome.corrected = fixed;
                        }
                    }
                    Err(err) => outcome.prompt_error = Some(err.to_string()),
                }
            }
            return Ok(outcome);
        }
    };

    let (after_strings, strings_applied) = fix_string_format(&parsed, ctx);
    if strings_applied {
        outcome.applied_rules.push(RULE_STRING_FORMAT.to_string());
    }
    let (after_schema, schema_applied, flagged) = fix_schema_mismatch(&after_strings, ctx);
    if schema_applied {
        outcome.applied_rules.push(RULE_SCHEMA_MISMATCH.to_string());
    }
    outcome.flagged_identifiers = flagged;
    let (after_aggregation, agg_applied) = fix_invalid_aggregation(&after_schema, ctx);
    if agg_applied {
        outcome
            .applied_rules
            .push(RULE_INVALID_AGGREGATION.to_string());
    }
    let (after_joins, joins_applied) = fix_join_condition(&after_aggregation, ctx);
    if joins_applied {
        outcome.applied_rules.push(RULE_JOIN_CONDITION.to_string());
    }

    if !outcome.applied_rules.is_empty() {
        outcome.corrected = render_sql(&after_joins);
        return Ok(outcome);
    }

    // no rule fired: prompt pass only for challenging cases
    let demos_suggest_complexity = demos.iter().any(|(_, demo_sql)| {
        parse_sql(demo_sql)
            .map(|q| {
                let compound = matches!(q.body, ast::SetExpr::Compound { .. });
                let mut joins = 0usize;
                if let ast::SetExpr::Select(select) = &q.body {
                    if let Some(from) = &select.from {
                        joins = from.joins.len();
                    }
                }
                compound || joins >= 2
            })
            .unwrap_or(false)
    });
    let challenging = matches!(hardness, Hardness::Hard | Hardness::Extra) || demos_suggest_complexity;
    if challenging {
        if let Some(client) = client {
            let guideline_ids = select_guidelines(&parsed, hardness, demos);
            let guideline_texts: Vec<String> = guideline_ids
                .iter()
                .filter_map(|id| catalog.text_of(id).map(String::from))
                .collect();
            let ddl = crate::prompt::render_schema_ddl(&ctx.schema);
            match prompt_correct(sql, &ddl, &guideline_texts, client) {
                Ok((fixed, replaced)) => {
                    outcome.prompt_correction_used = true;
                    outcome.guidelines_used = guideline_ids;
                    if replaced && parse_sql(&fixed).is_ok() {
                        outcome.corrected = fixed;
                    }
                }
                Err(err) => outcome.prompt_error = Some(err.to_string()),
            }
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// local AST helpers
// ---------------------------------------------------------------------------

/// Visit every select core together with its own binding frame.
fn for_each_select_with_frame(query: &mut Query, f: &mut dyn FnMut(&mut ast::Select, &[(String, String)])) {
    fn walk_body(body: &mut ast::SetExpr, f: &mut dyn FnMut(&mut ast::Select, &[(String, String)])) {
        match body {
            ast::SetExpr::Select(select) => {
                let frame = local_bindings(select);
                f(select, &frame);
                if let Some(from) = &mut select.from {
                    if let TableRef::Subquery { query, .. } = &mut from.base {
                        for_each_select_with_frame(query, f);
                    }
                    for join in &mut from.joins {
                        if let TableRef::Subquery { query, .. } = &mut join.table {
                            for_each_select_with_frame(query, f);
                        }
                    }
                }
                // nested queries
                let mut into_sub = |expr: &mut Expr| match expr {
                    Expr::InSubquery { query, .. }
                    | Expr::Exists { query, .. }
                    | Expr::Subquery(query) => for_each_select_with_frame(query, f),
                    _ => {}
                };
                for item in &mut select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        visit_expr_mut_local(expr, &mut into_sub);
                    }
                }
                if let Some(w) = &mut select.where_clause {
                    visit_expr_mut_local(w, &mut into_sub);
                }
                if let Some(h) = &mut select.having {
                    visit_expr_mut_local(h, &mut into_sub);
                }
            }
            ast::SetExpr::Compound { left, right, .. } => {
                walk_body(left, f);
                walk_body(right, f);
            }
        }
    }
    walk_body(&mut query.body, f);
}

/// Visit every expression inside one select core (not descending into
/// subqueries — those get their own frame).
fn visit_select_exprs_mut(select: &mut ast::Select, f: &mut dyn FnMut(&mut Expr)) {
    let mut shallow = |expr: &mut Expr| {
        if !matches!(
            expr,
            Expr::InSubquery { .. } | Expr::Exists { .. } | Expr::Subquery(_)
        ) {
            f(expr);
        }
    };
    for item in &mut select.items {
        if let ast::SelectItem::Expr { expr, .. } = item {
            visit_expr_mut_local(expr, &mut shallow);
        }
    }
    if let Some(from) = &mut select.from {
        for join in &mut from.joins {
            if let Some(on) = &mut join.on {
                visit_expr_mut_local(on, &mut shallow);
            }
        }
    }
    if let Some(w) = &mut select.where_clause {
        visit_expr_mut_local(w, &mut shallow);
    }
    for g in &mut select.group_by {
        visit_expr_mut_local(g, &mut shallow);
    }
    if let Some(h) = &mut select.having {
        visit_expr_mut_local(h, &mut shallow);
    }
}

fn visit_expr_mut_local(expr: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(expr);
    match expr {
        Expr::Unary { operand, .. } | Expr::IsNull { operand, .. } | Expr::Cast { operand, .. } => {
            visit_expr_mut_local(operand, f)
        }
        Expr::Binary { left, right, .. } => {
            visit_expr_mut_local(left, f);
            visit_expr_mut_local(right, f);
        }
        Expr::Function { args, .. } => {
            for arg in args {
                visit_expr_mut_local(arg, f);
            }
        }
        Expr::InList { operand, items, .. } => {
            visit_expr_mut_local(operand, f);
            for item in items {
                visit_expr_mut_local(item, f);
            }
        }
        Expr::InSubquery { operand, .. } => visit_expr_mut_local(operand, f),
        Expr::Between {
            operand, low, high, ..
        } => {
            visit_expr_mut_local(operand, f);
            visit_expr_mut_local(low, f);
            visit_expr_mut_local(high, f);
        }
        Expr::Like {
            operand, pattern, ..
        } => {
            visit_expr_mut_local(operand, f);
            visit_expr_mut_local(pattern, f);
        }
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            if let Some(operand) = operand {
                visit_expr_mut_local(operand, f);
            }
            for (c, r) in branches {
                visit_expr_mut_local(c, f);
                visit_expr_mut_local(r, f);
            }
            if let Some(e) = else_result {
                visit_expr_mut_local(e, f);
            }
        }
        _ => {}
    }
}

fn visit_expr_columns(expr: &Expr, f: &mut dyn FnMut(&ColumnRef)) {
    if let Expr::Column(col) = expr {
        f(col);
    }
    match expr {
        Expr::Unary { operand, .. } | Expr::IsNull { operand, .. } | Expr::Cast { operand, .. } => {
            visit_expr_columns(operand, f)
        }
        Expr::Binary { left, right, .. } => {
            visit_expr_columns(left, f);
            visit_expr_columns(right, f);
        }
        Expr::Function { args, .. } => {
            for arg in args {
                visit_expr_columns(arg, f);
            }
        }
        _ => {}
    }
}

/// Rename every named table reference in the statement.
fn visit_tables_mut(query: &mut Query, f: &mut dyn FnMut(&mut TableRef)) {
    fn walk_body(body: &mut ast::SetExpr, f: &mut dyn FnMut(&mut TableRef)) {
        match body {
            ast::SetExpr::Select(select) => {
                if let Some(from) = &mut select.from {
                    f(&mut from.base);
                    if let TableRef::Subquery { query, .. } = &mut from.base {
                        visit_tables_mut(query, f);
                    }
                    for join in &mut from.joins {
                        f(&mut join.table);
                        if let TableRef::Subquery { query, .. } = &mut join.table {
                            visit_tables_mut(query, f);
                        }
                    }
                }
                let mut into_sub = |expr: &mut Expr| match expr {
                    Expr::InSubquery { query, .. }
                    | Expr::Exists { query, .. }
                    | Expr::Subquery(query) => visit_tables_mut(query, f),
                    _ => {}
                };
                for item in &mut select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        visit_expr_mut_local(expr, &mut into_sub);
                    }
                }
                if let Some(w) = &mut select.where_clause {
                    visit_expr_mut_local(w, &mut into_sub);
                }
                if let Some(h) = &mut select.having {
                    visit_expr_mut_local(h, &mut into_sub);
                }
            }
            ast::SetExpr::Compound { left, right, .. } => {
                walk_body(left, f);
                walk_body(right, f);
            }
        }
    }
    walk_body(&mut query.body, f);
}

#[cfg(test)]
mod tests;
