//! SQL-semantics-preserving graph augmentation: the positive-instance
//! generators for contrastive training.
//!
//! Generic graph perturbations (edge dropping, subgraph sampling) can turn a
//! query's graph into a different statement entirely, so every operator here
//! is defined at the SQL level. Five of the six rewrite the AST and rebuild
//! the graph — validity is checked by re-parsing the rendered SQL — while
//! feature masking flags graph nodes and leaves the statement alone.

use crate::ast::{self, parse_sql, render_sql, BinaryOp, Expr, JoinKind, Literal, Query, Select, SetExpr, TableRef};
use crate::graph::{build_graph, GraphError, SqlGraph};
use crate::schema::{ColumnType, DatabaseSchema, SchemaCatalog};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("no replaceable keyword in statement")]
    NoReplaceableKeyword,
    #[error("no literal value in statement")]
    NoValue,
    #[error("no donor database with a compatible shape")]
    NoCompatibleDonor,
    #[error("statement has no WHERE or HAVING predicate")]
    NoPredicate,
    #[error("no join clause can be dropped")]
    TooFewJoins,
    #[error("no augmentation operator applies to this statement")]
    NoApplicableOperator,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Syntax(#[from] ast::SyntaxError),
    #[error("corpus of {0} candidates cannot supply {1} negatives")]
    CorpusTooSmall(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentKind {
    FeatureMasking,
    KeywordReplacement,
    ValueReplacement,
    DatabaseReplacement,
    PredicateModification,
    JoinSimplification,
}

pub const ALL_AUGMENT_KINDS: [AugmentKind; 6] = [
    AugmentKind::FeatureMasking,
    AugmentKind::KeywordReplacement,
    AugmentKind::ValueReplacement,
    AugmentKind::DatabaseReplacement,
    AugmentKind::PredicateModification,
    AugmentKind::JoinSimplification,
];

#[derive(Debug, Clone)]
pub struct AugmentedInstance {
    pub graph: SqlGraph,
    /// Non-empty only for feature masking.
    pub masked_node_ids: BTreeSet<usize>,
    /// The SQL this graph encodes: the rewritten statement for AST
    /// operators, the untouched anchor for feature masking.
    pub source_sql: String,
    pub kind: AugmentKind,
    pub seed: u64,
}

/// Literal pools harvested from a corpus, bucketed by type, with synthetic
/// fallbacks so replacement never runs dry.
#[derive(Debug, Clone)]
pub struct ValuePool {
    strings: Vec<String>,
    integers: Vec<String>,
    floats: Vec<String>,
}

impl Default for ValuePool {
    fn default() -> Self {
        ValuePool {
            strings: ["bird", "France", "Tom", "blue", "Europe", "2014", "Anna", "pop"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            integers: ["1", "2", "3", "5", "10", "20", "50", "100", "1000"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            floats: ["0.5", "1.5", "2.5", "3.2", "9.9", "100.0"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ValuePool {
    /// Extend the synthetic defaults with every literal found in the corpus.
    pub fn harvest<'a>(corpus: impl IntoIterator<Item = &'a Query>) -> ValuePool {
        let mut pool = ValuePool::default();
        for query in corpus {
            let mut sites = Vec::new();
            collect_literals(query, &mut sites);
            for lit in sites {
                match lit {
                    Literal::String(s) => {
                        let core = s.trim_matches('%').to_string();
                        if !core.is_empty() && !pool.strings.contains(&core) {
                            pool.strings.push(core);
                        }
                    }
                    Literal::Number(n) => {
                        let bucket = if n.contains('.') || n.contains('e') || n.contains('E') {
                            &mut pool.floats
                        } else {
                            &mut pool.integers
                        };
                        if !bucket.contains(&n) {
                            bucket.push(n);
                        }
                    }
                    _ => {}
                }
            }
        }
        pool
    }
}

// ---------------------------------------------------------------------------
// feature masking
// ---------------------------------------------------------------------------

/// Flag a random subset of non-essential nodes as masked. Topology is
/// untouched; the embedder substitutes the mask sentinel for flagged nodes.
/// Nodes whose keyword is ROOT, SELECT, JOIN, WHERE, GROUP or ORDER are
/// never masked.
pub fn feature_mask(
    graph: &SqlGraph,
    source_sql: &str,
    rate: f64,
    seed: u64,
) -> AugmentedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masked = BTreeSet::new();
    for node in &graph.nodes {
        if graph.is_essential(node.id) {
            continue;
        }
        if rng.gen_bool(rate.clamp(0.0, 1.0)) {
            masked.insert(node.id);
        }
    }
    AugmentedInstance {
        graph: graph.clone(),
        masked_node_ids: masked,
        source_sql: source_sql.to_string(),
        kind: AugmentKind::FeatureMasking,
        seed,
    }
}

// ---------------------------------------------------------------------------
// keyword replacement
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeywordClass {
    Comparison,
    Logical,
    Arithmetic,
    Aggregation,
}

const COMPARISONS: [BinaryOp; 6] = [
    BinaryOp::Eq,
    BinaryOp::NotEq,
    BinaryOp::Lt,
    BinaryOp::LtEq,
    BinaryOp::Gt,
    BinaryOp::GtEq,
];
const ARITHMETIC: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

/// Swap one keyword for a different keyword of the same class: comparison or
/// logical operators, arithmetic operators, or aggregation functions.
pub fn keyword_replace(query: &Query, seed: u64) -> Result<(Query, AugmentKind), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = query.clone();
    let total = count_keyword_sites(&out);
    if total == 0 {
        return Err(AugmentError::NoReplaceableKeyword);
    }
    let target = rng.gen_range(0..total);
    let mut counter = 0usize;
    mutate_keyword_site(&mut out, target, &mut counter, &mut rng);
    Ok((out, AugmentKind::KeywordReplacement))
}

fn keyword_class(op: BinaryOp) -> Option<KeywordClass> {
    if COMPARISONS.contains(&op) {
        Some(KeywordClass::Comparison)
    } else if op.is_logical() {
        Some(KeywordClass::Logical)
    } else if ARITHMETIC.contains(&op) {
        Some(KeywordClass::Arithmetic)
    } else {
        None
    }
}

/// Aggregates over `*` stay fixed: only COUNT accepts a wildcard argument,
/// so a swap could not yield valid SQL.
fn is_swappable_aggregate(name: &str, args: &[Expr]) -> bool {
    ast::AGGREGATE_FUNCTIONS
        .iter()
        .any(|agg| name.eq_ignore_ascii_case(agg))
        && !args.iter().any(|a| matches!(a, Expr::Wildcard))
}

fn count_keyword_sites(query: &Query) -> usize {
    let mut count = 0;
    visit_exprs(query, &mut |expr| match expr {
        Expr::Binary { op, .. } if keyword_class(*op).is_some() => count += 1,
        Expr::Function { name, args, .. } if is_swappable_aggregate(name, args) => count += 1,
        _ => {}
    });
    count
}

fn mutate_keyword_site(query: &mut Query, target: usize, counter: &mut usize, rng: &mut ChaCha8Rng) {
    visit_exprs_mut(query, &mut |expr| {
        match expr {
            Expr::Binary { op, .. } => {
                if let Some(class) = keyword_class(*op) {
                    if *counter == target {
                        *op = match class {
                            KeywordClass::Comparison => pick_other(&COMPARISONS, *op, rng),
                            KeywordClass::Logical => match op {
                                BinaryOp::And => BinaryOp::Or,
                                _ => BinaryOp::And,
                            },
                            KeywordClass::Arithmetic => pick_other(&ARITHMETIC, *op, rng),
                            KeywordClass::Aggregation => unreachable!(),
                        };
                    }
                    *counter += 1;
                }
            }
            Expr::Function { name, args, .. } => {
                if is_swappable_aggregate(name, args) {
                    if *counter == target {
                        let current = name.to_ascii_lowercase();
                        let options: Vec<&str> = ast::AGGREGATE_FUNCTIONS
                            .iter()
                            .copied()
                            .filter(|agg| *agg != current)
                            .collect();
                        *name = options.choose(rng).expect("non-empty").to_string();
                    }
                    *counter += 1;
                }
            }
            _ => {}
        }
    });
}

fn pick_other<T: Copy + PartialEq>(options: &[T], current: T, rng: &mut ChaCha8Rng) -> T {
    let others: Vec<T> = options.iter().copied().filter(|o| *o != current).collect();
    *others.choose(rng).expect("class has at least two members")
}

// ---------------------------------------------------------------------------
// value replacement
// ---------------------------------------------------------------------------

/// Replace one literal with a random same-type value. Wildcard patterns keep
/// their `%` markers; only the inner string changes.
pub fn value_replace(
    query: &Query,
    pool: &ValuePool,
    seed: u64,
) -> Result<(Query, AugmentKind), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = query.clone();
    let mut sites = Vec::new();
    collect_literals(&out, &mut sites);
    if sites.is_empty() {
        return Err(AugmentError::NoValue);
    }
    let target = rng.gen_range(0..sites.len());
    let mut counter = 0usize;
    visit_exprs_mut(&mut out, &mut |expr| {
        if let Expr::Literal(lit) = expr {
            if !matches!(lit, Literal::Null) {
                if counter == target {
                    *lit = replacement_for(lit, pool, &mut rng);
                }
                counter += 1;
            }
        }
    });
    Ok((out, AugmentKind::ValueReplacement))
}

fn replacement_for(lit: &Literal, pool: &ValuePool, rng: &mut ChaCha8Rng) -> Literal {
    match lit {
        Literal::Boolean(b) => Literal::Boolean(!b),
        Literal::Number(n) => {
            let is_float = n.contains('.') || n.contains('e') || n.contains('E');
            let bucket = if is_float { &pool.floats } else { &pool.integers };
            let mut pick = bucket.choose(rng).cloned().unwrap_or_else(|| "1".to_string());
            for _ in 0..8 {
                if &pick != n {
                    break;
                }
                pick = bucket.choose(rng).cloned().unwrap_or_else(|| "1".to_string());
            }
            Literal::Number(pick)
        }
        Literal::String(s) => {
            let leading = s.starts_with('%');
            let trailing = s.len() > 1 && s.ends_with('%');
            let core = s.trim_matches('%');
            let mut pick = pool
                .strings
                .choose(rng)
                .cloned()
                .unwrap_or_else(|| "other".to_string());
            for _ in 0..8 {
                if pick != core {
                    break;
                }
                pick = pool
                    .strings
                    .choose(rng)
                    .cloned()
                    .unwrap_or_else(|| "other".to_string());
            }
            let mut new = String::new();
            if leading {
                new.push('%');
            }
            new.push_str(&pick);
            if trailing {
                new.push('%');
            }
            Literal::String(new)
        }
        Literal::Null => Literal::Null,
    }
}

fn collect_literals(query: &Query, out: &mut Vec<Literal>) {
    visit_exprs(query, &mut |expr| {
        if let Expr::Literal(lit) = expr {
            if !matches!(lit, Literal::Null) {
                out.push(lit.clone());
            }
        }
    });
}

// ---------------------------------------------------------------------------
// database replacement
// ---------------------------------------------------------------------------

/// Consistently rename every table and column so the statement targets a
/// donor database. Columns prefer donor columns of the same type; the donor
/// must differ from the statement's own database.
pub fn database_replace(
    query: &Query,
    donors: &SchemaCatalog,
    seed: u64,
) -> Result<(Query, AugmentKind), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let usage = TableUsage::of(query)?;
    if usage.tables.is_empty() {
        return Err(AugmentError::NoCompatibleDonor);
    }

    // the statement's own database, when the catalog has it, supplies real
    // column types for type-matched donor columns
    let source = donors
        .databases
        .iter()
        .find(|db| usage.tables.keys().all(|t| db.has_table(t)));

    // donor candidates: enough tables, and not a superset of the statement's
    // own tables (that would be the source database)
    let mut candidates: Vec<&DatabaseSchema> = donors
        .databases
        .iter()
        .filter(|db| db.tables.len() >= usage.tables.len())
        .filter(|db| !usage.tables.keys().all(|t| db.has_table(t)))
        .collect();
    candidates.shuffle(&mut rng);

    for donor in candidates {
        if let Some(mapping) = try_map_to_donor(&usage, source, donor, &mut rng) {
            let mut out = query.clone();
            apply_rename(&mut out, &mapping)?;
            return Ok((out, AugmentKind::DatabaseReplacement));
        }
    }
    Err(AugmentError::NoCompatibleDonor)
}

/// Tables referenced by a statement together with the columns used per table
/// (lowercased keys, first-seen spelling preserved in values).
struct TableUsage {
    /// table(lower) -> columns used: column(lower) -> ()
    tables: BTreeMap<String, BTreeSet<String>>,
}

impl TableUsage {
    fn of(query: &Query) -> Result<TableUsage, AugmentError> {
        let mut usage = TableUsage {
            tables: BTreeMap::new(),
        };
        collect_usage(query, &Bindings::default(), &mut usage)?;
        Ok(usage)
    }
}

#[derive(Default, Clone)]
struct Bindings {
    frames: Vec<Vec<(String, String)>>,
}

impl Bindings {
    fn child(&self, select: &Select) -> Bindings {
        let mut frames = self.frames.clone();
        let mut frame = Vec::new();
        if let Some(from) = &select.from {
            let mut add = |t: &TableRef| {
                if let TableRef::Named { name, alias } = t {
                    frame.push((
                        alias.clone().unwrap_or_else(|| name.clone()).to_lowercase(),
                        name.to_lowercase(),
                    ));
                }
            };
            add(&from.base);
            for join in &from.joins {
                add(&join.table);
            }
        }
        frames.push(frame);
        Bindings { frames }
    }

    fn resolve(&self, qualifier: Option<&str>) -> Option<String> {
        match qualifier {
            Some(q) => {
                let q = q.to_lowercase();
                for frame in self.frames.iter().rev() {
                    if let Some((_, table)) = frame.iter().find(|(b, _)| *b == q) {
                        return Some(table.clone());
                    }
                }
                None
            }
            None => {
                for frame in self.frames.iter().rev() {
                    if frame.len() == 1 {
                        return Some(frame[0].1.clone());
                    }
                    if frame.len() > 1 {
                        return None;
                    }
                }
                None
            }
        }
    }
}

fn collect_usage(query: &Query, outer: &Bindings, usage: &mut TableUsage) -> Result<(), AugmentError> {
    match &query.body {
        SetExpr::Select(select) => collect_usage_select(select, outer, usage, &query.order_by)?,
        SetExpr::Compound { left, right, .. } => {
            let l = Query {
                body: (**left).clone(),
                order_by: query.order_by.clone(),
                limit: None,
            };
            collect_usage(&l, outer, usage)?;
            let r = Query {
                body: (**right).clone(),
                order_by: Vec::new(),
                limit: None,
            };
            collect_usage(&r, outer, usage)?;
        }
    }
    Ok(())
}

fn collect_usage_select(
    select: &Select,
    outer: &Bindings,
    usage: &mut TableUsage,
    order_by: &[ast::OrderItem],
) -> Result<(), AugmentError> {
    let bindings = outer.child(select);
    if let Some(from) = &select.from {
        let mut add_table = |t: &TableRef| -> Result<(), AugmentError> {
            match t {
                TableRef::Named { name, .. } => {
                    usage.tables.entry(name.to_lowercase()).or_default();
                    Ok(())
                }
                TableRef::Subquery { query, .. } => collect_usage(query, &bindings, usage),
            }
        };
        add_table(&from.base)?;
        for join in &from.joins {
            add_table(&join.table)?;
        }
    }
    let mut err = None;
    let mut record = |expr: &Expr| {
        if let Expr::Column(col) = expr {
            match bindings.resolve(col.table.as_deref()) {
                Some(table) => {
                    usage
                        .tables
                        .entry(table)
                        .or_default()
                        .insert(col.column.to_lowercase());
                }
                None => {
                    if err.is_none() {
                        err = Some(AugmentError::Graph(GraphError::AmbiguousColumn(
                            col.column.clone(),
                        )));
                    }
                }
            }
        }
    };
    for item in &select.items {
        if let ast::SelectItem::Expr { expr, .. } = item {
            visit_expr(expr, &mut record);
        }
    }
    if let Some(from) = &select.from {
        for join in &from.joins {
            if let Some(on) = &join.on {
                visit_expr(on, &mut record);
            }
        }
    }
    if let Some(w) = &select.where_clause {
        visit_expr(w, &mut record);
    }
    for g in &select.group_by {
        visit_expr(g, &mut record);
    }
    if let Some(h) = &select.having {
        visit_expr(h, &mut record);
    }
    for item in order_by {
        visit_expr(&item.expr, &mut record);
    }
    if let Some(err) = err {
        return Err(err);
    }
    // nested queries inside expressions
    let mut nested_err = None;
    let mut visit_nested = |expr: &Expr| {
        let sub = match expr {
            Expr::InSubquery { query, .. } | Expr::Exists { query, .. } | Expr::Subquery(query) => {
                Some(query)
            }
            _ => None,
        };
        if let Some(sub) = sub {
            if let Err(e) = collect_usage(sub, &bindings, usage) {
                if nested_err.is_none() {
                    nested_err = Some(e);
                }
            }
        }
    };
    for item in &select.items {
        if let ast::SelectItem::Expr { expr, .. } = item {
            visit_expr_shallow(expr, &mut visit_nested);
        }
    }
    if let Some(w) = &select.where_clause {
        visit_expr_shallow(w, &mut visit_nested);
    }
    if let Some(h) = &select.having {
        visit_expr_shallow(h, &mut visit_nested);
    }
    if let Some(e) = nested_err {
        return Err(e);
    }
    Ok(())
}

/// table(lower) -> donor table name; (table(lower), column(lower)) -> donor column name
struct RenameMap {
    tables: BTreeMap<String, String>,
    columns: BTreeMap<(String, String), String>,
}

fn try_map_to_donor(
    usage: &TableUsage,
    source: Option<&DatabaseSchema>,
    donor: &DatabaseSchema,
    rng: &mut ChaCha8Rng,
) -> Option<RenameMap> {
    let mut donor_tables: Vec<&crate::schema::TableSchema> = donor.tables.iter().collect();
    donor_tables.shuffle(rng);
    // assign donor tables with enough columns, largest demands first
    let mut demands: Vec<(&String, usize)> = usage
        .tables
        .iter()
        .map(|(t, cols)| (t, cols.len()))
        .collect();
    demands.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tables = BTreeMap::new();
    let mut columns = BTreeMap::new();
    let mut used = vec![false; donor_tables.len()];
    for (table, demand) in demands {
        let slot = donor_tables
            .iter()
            .enumerate()
            .find(|(i, dt)| !used[*i] && dt.columns.len() >= demand)?;
        used[slot.0] = true;
        let donor_table = slot.1;
        tables.insert(table.clone(), donor_table.name.clone());
        // same-type columns preferred, falling back to any unused column
        let mut available: Vec<&crate::schema::ColumnSchema> = donor_table.columns.iter().collect();
        available.shuffle(rng);
        let mut taken: Vec<bool> = vec![false; available.len()];
        for col in &usage.tables[table] {
            let want = source_column_type(source, table, col).unwrap_or_else(|| {
                if looks_numeric(col) {
                    ColumnType::Number
                } else {
                    ColumnType::Text
                }
            });
            let pick = available
                .iter()
                .enumerate()
                .find(|(i, c)| !taken[*i] && c.col_type == want)
                .or_else(|| available.iter().enumerate().find(|(i, _)| !taken[*i]))?;
            taken[pick.0] = true;
            columns.insert((table.clone(), col.clone()), pick.1.name.clone());
        }
    }
    Some(RenameMap { tables, columns })
}

fn source_column_type(
    source: Option<&DatabaseSchema>,
    table: &str,
    column: &str,
) -> Option<ColumnType> {
    source?
        .table(table)?
        .column(column)
        .map(|c| c.col_type)
}

/// Best-effort type hint when the source schema is unknown: id/count/age-ish
/// names are treated as numeric so they map to numeric donor columns.
fn looks_numeric(column: &str) -> bool {
    let c = column.to_lowercase();
    c.ends_with("id")
        || c.contains("num")
        || c.contains("count")
        || c.contains("age")
        || c.contains("year")
        || c.contains("budget")
        || c.contains("rank")
}

fn apply_rename(query: &mut Query, mapping: &RenameMap) -> Result<(), AugmentError> {
    // Resolve every column against the ORIGINAL bindings first, then rewrite
    // names. Two passes keeps resolution stable while names change.
    let resolved = resolve_all_columns(query)?;
    let mut idx = 0usize;
    visit_exprs_mut(query, &mut |expr| {
        if let Expr::Column(col) = expr {
            let table = &resolved[idx];
            idx += 1;
            if let Some(table) = table {
                if let Some(new_col) = mapping
                    .columns
                    .get(&(table.clone(), col.column.to_lowercase()))
                {
                    col.column = new_col.clone();
                }
                // table-name qualifiers change too; alias qualifiers stay
                if let Some(q) = &col.table {
                    if let Some(new_table) = mapping.tables.get(&q.to_lowercase()) {
                        col.table = Some(new_table.clone());
                    }
                }
            }
        }
    });
    visit_tables_mut(query, &mut |table| {
        if let TableRef::Named { name, .. } = table {
            if let Some(new_name) = mapping.tables.get(&name.to_lowercase()) {
                *name = new_name.clone();
            }
        }
    });
    Ok(())
}

/// The owning table (lowercased) of every column reference, in the fixed
/// visit order of `visit_exprs_mut`; None for positional/unresolvable refs.
fn resolve_all_columns(query: &Query) -> Result<Vec<Option<String>>, AugmentError> {
    let mut out = Vec::new();
    fn walk_query(q: &Query, outer: &Bindings, out: &mut Vec<Option<String>>) {
        let bindings = match &q.body {
            SetExpr::Select(s) => outer.child(s),
            SetExpr::Compound { left, .. } => {
                // order-by of a compound resolves against the first core
                let mut b = left;
                loop {
                    match b.as_ref() {
                        SetExpr::Select(s) => break outer.child(s),
                        SetExpr::Compound { left, .. } => b = left,
                    }
                }
            }
        };
        walk_body(&q.body, outer, out);
        for item in &q.order_by {
            walk_expr(&item.expr, &bindings, out);
        }
        if let Some(limit) = &q.limit {
            walk_expr(&limit.count, &bindings, out);
            if let Some(offset) = &limit.offset {
                walk_expr(offset, &bindings, out);
            }
        }
    }
    fn walk_body(body: &SetExpr, outer: &Bindings, out: &mut Vec<Option<String>>) {
        match body {
            SetExpr::Select(select) => {
                let bindings = outer.child(select);
                for item in &select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        walk_expr(expr, &bindings, out);
                    }
                }
                if let Some(from) = &select.from {
                    if let TableRef::Subquery { query, .. } = &from.base {
                        walk_query(query, &bindings, out);
                    }
                    for join in &from.joins {
                        if let TableRef::Subquery { query, .. } = &join.table {
                            walk_query(query, &bindings, out);
                        }
                        if let Some(on) = &join.on {
                            walk_expr(on, &bindings, out);
                        }
                    }
                }
                if let Some(w) = &select.where_clause {
                    walk_expr(w, &bindings, out);
                }
                for g in &select.group_by {
                    walk_expr(g, &bindings, out);
                }
                if let Some(h) = &select.having {
                    walk_expr(h, &bindings, out);
                }
            }
            SetExpr::Compound { left, right, .. } => {
                walk_body(left, outer, out);
                walk_body(right, outer, out);
            }
        }
    }
    fn walk_expr(expr: &Expr, bindings: &Bindings, out: &mut Vec<Option<String>>) {
        match expr {
            Expr::Column(col) => out.push(bindings.resolve(col.table.as_deref())),
            Expr::InSubquery { operand, query, .. } => {
                walk_expr(operand, bindings, out);
                walk_query(query, bindings, out);
            }
            Expr::Exists { query, .. } => walk_query(query, bindings, out),
            Expr::Subquery(query) => walk_query(query, bindings, out),
            _ => {
                let mut children = Vec::new();
                child_exprs(expr, &mut children);
                for child in children {
                    walk_expr(child, bindings, out);
                }
            }
        }
    }
    walk_query(query, &Bindings::default(), &mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// predicate modification
// ---------------------------------------------------------------------------

/// Drop a WHERE/HAVING clause entirely or remove one conjunct from its
/// top-level AND chain.
pub fn predicate_modify(query: &Query, seed: u64) -> Result<(Query, AugmentKind), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = query.clone();
    let mut site_count = 0usize;
    for_each_select(&out, &mut |select| {
        if select.where_clause.is_some() {
            site_count += 1;
        }
        if select.having.is_some() {
            site_count += 1;
        }
    });
    if site_count == 0 {
        return Err(AugmentError::NoPredicate);
    }
    let target = rng.gen_range(0..site_count);
    let drop_conjunct_roll: f64 = rng.gen();
    let conjunct_pick: u64 = rng.gen();
    let mut counter = 0usize;
    for_each_select_mut(&mut out, &mut |select| {
        for slot in [&mut select.where_clause, &mut select.having] {
            if slot.is_some() {
                if counter == target {
                    let pred = slot.take().expect("checked above");
                    let conjuncts = flatten_and(pred);
                    if conjuncts.len() >= 2 && drop_conjunct_roll < 0.5 {
                        let drop = (conjunct_pick as usize) % conjuncts.len();
                        let kept: Vec<Expr> = conjuncts
                            .into_iter()
                            .enumerate()
                            .filter(|(i, _)| *i != drop)
                            .map(|(_, e)| e)
                            .collect();
                        *slot = Some(rebuild_and(kept));
                    }
                    // else: whole clause stays dropped
                }
                counter += 1;
            }
        }
    });
    Ok((out, AugmentKind::PredicateModification))
}

fn flatten_and(expr: Expr) -> Vec<Expr> {
    match expr {
        Expr::Binary {
            left,
            op: BinaryOp::And,
            right,
        } => {
            let mut out = flatten_and(*left);
            out.extend(flatten_and(*right));
            out
        }
        other => vec![other],
    }
}

fn rebuild_and(mut conjuncts: Vec<Expr>) -> Expr {
    let first = conjuncts.remove(0);
    conjuncts.into_iter().fold(first, |acc, next| Expr::Binary {
        left: Box::new(acc),
        op: BinaryOp::And,
        right: Box::new(next),
    })
}

// ---------------------------------------------------------------------------
// join simplification
// ---------------------------------------------------------------------------

/// Remove one JOIN clause from a select that has at least two. Only joins
/// whose table is referenced nowhere outside their own ON condition are
/// dropped, so the result never dangles.
pub fn join_simplify(query: &Query, seed: u64) -> Result<(Query, AugmentKind), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = query.clone();

    // candidate: (select index, join index)
    let mut selects_with_joins = Vec::new();
    let mut select_idx = 0usize;
    for_each_select(&out, &mut |select| {
        if let Some(from) = &select.from {
            let join_count = from
                .joins
                .iter()
                .filter(|j| !matches!(j.kind, JoinKind::Comma))
                .count();
            if join_count >= 2 {
                for (join_idx, join) in from.joins.iter().enumerate() {
                    if matches!(join.kind, JoinKind::Comma) {
                        continue;
                    }
                    if join_is_droppable(select, join_idx) {
                        selects_with_joins.push((select_idx, join_idx));
                    }
                }
            }
        }
        select_idx += 1;
    });
    if selects_with_joins.is_empty() {
        return Err(AugmentError::TooFewJoins);
    }
    let (target_select, target_join) = *selects_with_joins
        .choose(&mut rng)
        .expect("non-empty candidates");
    let mut idx = 0usize;
    for_each_select_mut(&mut out, &mut |select| {
        if idx == target_select {
            if let Some(from) = &mut select.from {
                from.joins.remove(target_join);
            }
        }
        idx += 1;
    });
    Ok((out, AugmentKind::JoinSimplification))
}

fn join_is_droppable(select: &Select, join_idx: usize) -> bool {
    use std::cell::Cell;
    let Some(from) = &select.from else {
        return false;
    };
    let join = &from.joins[join_idx];
    let Some(binding) = join.table.binding_name() else {
        return false;
    };
    let binding = binding.to_lowercase();
    let referenced = Cell::new(false);
    let ambiguous = Cell::new(false);
    let check = |expr: &Expr| {
        visit_expr(expr, &mut |e| {
            if let Expr::Column(col) = e {
                match &col.table {
                    Some(q) => {
                        if q.to_lowercase() == binding {
                            referenced.set(true);
                        }
                    }
                    // unqualified column in a multi-table select: cannot
                    // prove it doesn't belong to the dropped table
                    None => ambiguous.set(true),
                }
            }
        });
    };
    for item in &select.items {
        match item {
            ast::SelectItem::Expr { expr, .. } => check(expr),
            ast::SelectItem::QualifiedWildcard(q) => {
                if q.to_lowercase() == binding {
                    referenced.set(true);
                }
            }
            ast::SelectItem::Wildcard => {}
        }
    }
    for (i, other) in from.joins.iter().enumerate() {
        if i != join_idx {
            if let Some(on) = &other.on {
                check(on);
            }
        }
    }
    if let Some(w) = &select.where_clause {
        check(w);
    }
    for g in &select.group_by {
        check(g);
    }
    if let Some(h) = &select.having {
        check(h);
    }
    !referenced.get() && !ambiguous.get()
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

/// Uniformly pick an applicable operator and produce one positive instance.
/// When the chosen operator's precondition fails at execution time the next
/// seeded choice is tried until the applicable set is exhausted.
pub fn sample_positive(
    anchor_sql: &str,
    donors: &SchemaCatalog,
    pool: &ValuePool,
    mask_rate: f64,
    seed: u64,
) -> Result<AugmentedInstance, AugmentError> {
    let query = parse_sql(anchor_sql)?;
    let graph = build_graph(&query)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = ALL_AUGMENT_KINDS.to_vec();
    kinds.shuffle(&mut rng);
    let op_seed: u64 = rng.gen();
    for kind in kinds {
        let result: Result<AugmentedInstance, AugmentError> = match kind {
            AugmentKind::FeatureMasking => Ok(feature_mask(&graph, anchor_sql, mask_rate, op_seed)),
            AugmentKind::KeywordReplacement => {
                keyword_replace(&query, op_seed).and_then(|(q, k)| finish(q, k, op_seed))
            }
            AugmentKind::ValueReplacement => {
                value_replace(&query, pool, op_seed).and_then(|(q, k)| finish(q, k, op_seed))
            }
            AugmentKind::DatabaseReplacement => {
                database_replace(&query, donors, op_seed).and_then(|(q, k)| finish(q, k, op_seed))
            }
            AugmentKind::PredicateModification => {
                predicate_modify(&query, op_seed).and_then(|(q, k)| finish(q, k, op_seed))
            }
            AugmentKind::JoinSimplification => {
                join_simplify(&query, op_seed).and_then(|(q, k)| finish(q, k, op_seed))
            }
        };
        match result {
            Ok(instance) => return Ok(instance),
            Err(_) => continue,
        }
    }
    Err(AugmentError::NoApplicableOperator)
}

/// Render, re-parse (validity gate), and rebuild the graph for a rewritten
/// statement.
pub fn finish(query: Query, kind: AugmentKind, seed: u64) -> Result<AugmentedInstance, AugmentError> {
    let sql = render_sql(&query);
    let reparsed = parse_sql(&sql)?;
    let graph = build_graph(&reparsed)?;
    Ok(AugmentedInstance {
        graph,
        masked_node_ids: BTreeSet::new(),
        source_sql: sql,
        kind,
        seed,
    })
}

/// Draw `n` distinct corpus indices different from the anchor's.
pub fn sample_negatives(
    corpus_len: usize,
    anchor_index: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>, AugmentError> {
    if corpus_len <= n {
        return Err(AugmentError::CorpusTooSmall(corpus_len, n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut others: Vec<usize> = (0..corpus_len).filter(|&i| i != anchor_index).collect();
    others.shuffle(&mut rng);
    others.truncate(n);
    Ok(others)
}

// ---------------------------------------------------------------------------
// AST walkers
// ---------------------------------------------------------------------------

fn child_exprs<'a>(expr: &'a Expr, out: &mut Vec<&'a Expr>) {
    match expr {
        Expr::Column(_) | Expr::Literal(_) | Expr::Wildcard => {}
        Expr::Unary { operand, .. } => out.push(operand),
        Expr::Binary { left, right, .. } => {
            out.push(left);
            out.push(right);
        }
        Expr::Function { args, .. } => out.extend(args.iter()),
        Expr::IsNull { operand, .. } => out.push(operand),
        Expr::InList { operand, items, .. } => {
            out.push(operand);
            out.extend(items.iter());
        }
        Expr::InSubquery { operand, .. } => out.push(operand),
        Expr::Between {
            operand, low, high, ..
        } => {
            out.push(operand);
            out.push(low);
            out.push(high);
        }
        Expr::Like {
            operand, pattern, ..
        } => {
            out.push(operand);
            out.push(pattern);
        }
        Expr::Exists { .. } | Expr::Subquery(_) => {}
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            if let Some(operand) = operand {
                out.push(operand);
            }
            for (c, r) in branches {
                out.push(c);
                out.push(r);
            }
            if let Some(e) = else_result {
                out.push(e);
            }
        }
        Expr::Cast { operand, .. } => out.push(operand),
    }
}

/// Depth-first visit of an expression tree, descending into subqueries.
fn visit_expr(expr: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(expr);
    let mut children = Vec::new();
    child_exprs(expr, &mut children);
    for child in children {
        visit_expr(child, f);
    }
    match expr {
        Expr::InSubquery { query, .. } | Expr::Exists { query, .. } | Expr::Subquery(query) => {
            visit_query_exprs(query, f)
        }
        _ => {}
    }
}

/// Visit only the immediate expression (no recursion into its children);
/// used to find nested queries one level at a time.
fn visit_expr_shallow(expr: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(expr);
    let mut children = Vec::new();
    child_exprs(expr, &mut children);
    for child in children {
        visit_expr_shallow(child, f);
    }
}

fn visit_query_exprs(query: &Query, f: &mut dyn FnMut(&Expr)) {
    visit_body_exprs(&query.body, f);
    for item in &query.order_by {
        visit_expr(&item.expr, f);
    }
    if let Some(limit) = &query.limit {
        visit_expr(&limit.count, f);
        if let Some(offset) = &limit.offset {
            visit_expr(offset, f);
        }
    }
}

fn visit_body_exprs(body: &SetExpr, f: &mut dyn FnMut(&Expr)) {
    match body {
        SetExpr::Select(select) => {
            for item in &select.items {
                if let ast::SelectItem::Expr { expr, .. } = item {
                    visit_expr(expr, f);
                }
            }
            if let Some(from) = &select.from {
                if let TableRef::Subquery { query, .. } = &from.base {
                    visit_query_exprs(query, f);
                }
                for join in &from.joins {
                    if let TableRef::Subquery { query, .. } = &join.table {
                        visit_query_exprs(query, f);
                    }
                    if let Some(on) = &join.on {
                        visit_expr(on, f);
                    }
                }
            }
            if let Some(w) = &select.where_clause {
                visit_expr(w, f);
            }
            for g in &select.group_by {
                visit_expr(g, f);
            }
            if let Some(h) = &select.having {
                visit_expr(h, f);
            }
        }
        SetExpr::Compound { left, right, .. } => {
            visit_body_exprs(left, f);
            visit_body_exprs(right, f);
        }
    }
}

/// Visit every expression in the whole statement.
pub(crate) fn visit_exprs(query: &Query, f: &mut dyn FnMut(&Expr)) {
    visit_query_exprs(query, f);
}

fn visit_expr_mut(expr: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(expr);
    match expr {
        Expr::Column(_) | Expr::Literal(_) | Expr::Wildcard => {}
        Expr::Unary { operand, .. } => visit_expr_mut(operand, f),
        Expr::Binary { left, right, .. } => {
            visit_expr_mut(left, f);
            visit_expr_mut(right, f);
        }
        Expr::Function { args, .. } => {
            for arg in args {
                visit_expr_mut(arg, f);
            }
        }
        Expr::IsNull { operand, .. } => visit_expr_mut(operand, f),
        Expr::InList { operand, items, .. } => {
            visit_expr_mut(operand, f);
            for item in items {
                visit_expr_mut(item, f);
            }
        }
        Expr::InSubquery { operand, query, .. } => {
            visit_expr_mut(operand, f);
            visit_query_exprs_mut(query, f);
        }
        Expr::Between {
            operand, low, high, ..
        } => {
            visit_expr_mut(operand, f);
            visit_expr_mut(low, f);
            visit_expr_mut(high, f);
        }
        Expr::Like {
            operand, pattern, ..
        } => {
            visit_expr_mut(operand, f);
            visit_expr_mut(pattern, f);
        }
        Expr::Exists { query, .. } => visit_query_exprs_mut(query, f),
        Expr::Subquery(query) => visit_query_exprs_mut(query, f),
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            if let Some(operand) = operand {
                visit_expr_mut(operand, f);
            }
            for (c, r) in branches {
                visit_expr_mut(c, f);
                visit_expr_mut(r, f);
            }
            if let Some(e) = else_result {
                visit_expr_mut(e, f);
            }
        }
        Expr::Cast { operand, .. } => visit_expr_mut(operand, f),
    }
}

fn visit_query_exprs_mut(query: &mut Query, f: &mut dyn FnMut(&mut Expr)) {
    visit_body_exprs_mut(&mut query.body, f);
    for item in &mut query.order_by {
        visit_expr_mut(&mut item.expr, f);
    }
    if let Some(limit) = &mut query.limit {
        visit_expr_mut(&mut limit.count, f);
        if let Some(offset) = &mut limit.offset {
            visit_expr_mut(offset, f);
        }
    }
}

fn visit_body_exprs_mut(body: &mut SetExpr, f: &mut dyn FnMut(&mut Expr)) {
    match body {
        SetExpr::Select(select) => {
            for item in &mut select.items {
                if let ast::SelectItem::Expr { expr, .. } = item {
                    visit_expr_mut(expr, f);
                }
            }
            if let Some(from) = &mut select.from {
                if let TableRef::Subquery { query, .. } = &mut from.base {
                    visit_query_exprs_mut(query, f);
                }
                for join in &mut from.joins {
                    if let TableRef::Subquery { query, .. } = &mut join.table {
                        visit_query_exprs_mut(query, f);
                    }
                    if let Some(on) = &mut join.on {
                        visit_expr_mut(on, f);
                    }
                }
            }
            if let Some(w) = &mut select.where_clause {
                visit_expr_mut(w, f);
            }
            for g in &mut select.group_by {
                visit_expr_mut(g, f);
            }
            if let Some(h) = &mut select.having {
                visit_expr_mut(h, f);
            }
        }
        SetExpr::Compound { left, right, .. } => {
            visit_body_exprs_mut(left, f);
            visit_body_exprs_mut(right, f);
        }
    }
}

/// Visit every expression in the whole statement, mutably. The visit order
/// matches `visit_exprs`.
pub(crate) fn visit_exprs_mut(query: &mut Query, f: &mut dyn FnMut(&mut Expr)) {
    visit_query_exprs_mut(query, f);
}

fn visit_tables_mut(query: &mut Query, f: &mut dyn FnMut(&mut TableRef)) {
    fn body(b: &mut SetExpr, f: &mut dyn FnMut(&mut TableRef)) {
        match b {
            SetExpr::Select(select) => {
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
                // subqueries in expressions
                let mut handle = |expr: &mut Expr| {
                    if let Expr::InSubquery { query, .. }
                    | Expr::Exists { query, .. }
                    | Expr::Subquery(query) = expr
                    {
                        visit_tables_mut(query, f);
                    }
                };
                for item in &mut select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        visit_expr_mut(expr, &mut handle);
                    }
                }
                if let Some(w) = &mut select.where_clause {
                    visit_expr_mut(w, &mut handle);
                }
                if let Some(h) = &mut select.having {
                    visit_expr_mut(h, &mut handle);
                }
            }
            SetExpr::Compound { left, right, .. } => {
                body(left, f);
                body(right, f);
            }
        }
    }
    body(&mut query.body, f);
}

/// Visit every select core (compound arms and subqueries included).
fn for_each_select(query: &Query, f: &mut dyn FnMut(&Select)) {
    fn body(b: &SetExpr, f: &mut dyn FnMut(&Select)) {
        match b {
            SetExpr::Select(select) => {
                f(select);
                if let Some(from) = &select.from {
                    if let TableRef::Subquery { query, .. } = &from.base {
                        for_each_select(query, f);
                    }
                    for join in &from.joins {
                        if let TableRef::Subquery { query, .. } = &join.table {
                            for_each_select(query, f);
                        }
                    }
                }
                let mut handle = |expr: &Expr| {
                    if let Expr::InSubquery { query, .. }
                    | Expr::Exists { query, .. }
                    | Expr::Subquery(query) = expr
                    {
                        for_each_select(query, f);
                    }
                };
                for item in &select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        visit_expr_shallow(expr, &mut handle);
                    }
                }
                if let Some(w) = &select.where_clause {
                    visit_expr_shallow(w, &mut handle);
                }
                if let Some(h) = &select.having {
                    visit_expr_shallow(h, &mut handle);
                }
            }
            SetExpr::Compound { left, right, .. } => {
                body(left, f);
                body(right, f);
            }
        }
    }
    body(&query.body, f);
}

/// Mutable variant of [`for_each_select`], same visit order.
fn for_each_select_mut(query: &mut Query, f: &mut dyn FnMut(&mut Select)) {
    fn body(b: &mut SetExpr, f: &mut dyn FnMut(&mut Select)) {
        match b {
            SetExpr::Select(select) => {
                f(select);
                if let Some(from) = &mut select.from {
                    if let TableRef::Subquery { query, .. } = &mut from.base {
                        for_each_select_mut(query, f);
                    }
                    for join in &mut from.joins {
                        if let TableRef::Subquery { query, .. } = &mut join.table {
                            for_each_select_mut(query, f);
                        }
                    }
                }
                let mut handle = |expr: &mut Expr| {
                    if let Expr::InSubquery { query, .. }
                    | Expr::Exists { query, .. }
                    | Expr::Subquery(query) = expr
                    {
                        for_each_select_mut(query, f);
                    }
                };
                for item in &mut select.items {
                    if let ast::SelectItem::Expr { expr, .. } = item {
                        visit_expr_mut(expr, &mut handle);
                    }
                }
                if let Some(w) = &mut select.where_clause {
                    visit_expr_mut(w, &mut handle);
                }
                if let Some(h) = &mut select.having {
                    visit_expr_mut(h, &mut handle);
                }
            }
            SetExpr::Compound { left, right, .. } => {
                body(left, f);
                body(right, f);
            }
        }
    }
    body(&mut query.body, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_tables_json;

    const FIG5_SQL: &str = "SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid WHERE T3.pettype = 'cat'";

    fn donor_catalog() -> SchemaCatalog {
        parse_tables_json(
            r#"[
            {"db_id": "pets_1",
             "table_names_original": ["student", "has_pet", "pets"],
             "column_names_original": [[-1,"*"],[0,"stuid"],[0,"age"],[1,"stuid"],[1,"petid"],[2,"petid"],[2,"pettype"]],
             "column_types": ["text","number","number","number","number","number","text"],
             "primary_keys": [1,5], "foreign_keys": [[3,1],[4,5]]},
            {"db_id": "concert_singer",
             "table_names_original": ["singer", "singer_in_concert", "concert"],
             "column_names_original": [[-1,"*"],[0,"Singer_ID"],[0,"Name"],[0,"Age"],[1,"Singer_ID"],[1,"concert_ID"],[2,"concert_ID"],[2,"Theme"],[2,"Year"]],
             "column_types": ["text","number","text","number","number","number","number","text","number"],
             "primary_keys": [1,6], "foreign_keys": [[4,1],[5,6]]}
        ]"#,
        )
        .unwrap()
    }

    #[test]
    fn mask_rate_zero_masks_nothing() {
        let q = parse_sql(FIG5_SQL).unwrap();
        let g = build_graph(&q).unwrap();
        let inst = feature_mask(&g, FIG5_SQL, 0.0, 7);
        assert!(inst.masked_node_ids.is_empty());
        assert_eq!(inst.graph, g);
    }

    #[test]
    fn mask_never_touches_essential_keywords() {
        let q = parse_sql(FIG5_SQL).unwrap();
        let g = build_graph(&q).unwrap();
        for seed in 0..300 {
            let inst = feature_mask(&g, FIG5_SQL, 0.9, seed);
            for &id in &inst.masked_node_ids {
                assert!(!g.is_essential(id), "masked essential node {id} at seed {seed}");
            }
        }
    }

    #[test]
    fn keyword_swap_stays_in_class() {
        let q = parse_sql("SELECT count(*) FROM t WHERE a > 5 AND b = 2").unwrap();
        for seed in 0..100 {
            let (out, _) = keyword_replace(&q, seed).unwrap();
            let rendered = render_sql(&out);
            let reparsed = parse_sql(&rendered).unwrap();
            assert_ne!(reparsed, q, "seed {seed} changed nothing: {rendered}");
            // same shape: counts of each class are preserved
            let count_sites = |query: &Query| {
                let mut comparisons = 0;
                let mut logical = 0;
                let mut aggs = 0;
                visit_exprs(query, &mut |e| match e {
                    Expr::Binary { op, .. } if COMPARISONS.contains(op) => comparisons += 1,
                    Expr::Binary { op, .. } if op.is_logical() => logical += 1,
                    Expr::Function { name, .. }
                        if ast::AGGREGATE_FUNCTIONS.iter().any(|a| name.eq_ignore_ascii_case(a)) =>
                    {
                        aggs += 1
                    }
                    _ => {}
                });
                (comparisons, logical, aggs)
            };
            assert_eq!(count_sites(&q), count_sites(&reparsed), "seed {seed}");
        }
    }

    #[test]
    fn keyword_replace_needs_a_site() {
        let q = parse_sql("SELECT name FROM singer").unwrap();
        assert!(matches!(
            keyword_replace(&q, 1),
            Err(AugmentError::NoReplaceableKeyword)
        ));
    }

    #[test]
    fn value_replace_keeps_wildcards_and_types() {
        let pool = ValuePool::default();
        let q = parse_sql("SELECT name FROM t WHERE country LIKE '%USA'").unwrap();
        for seed in 0..50 {
            let (out, _) = value_replace(&q, &pool, seed).unwrap();
            let mut lits = Vec::new();
            collect_literals(&out, &mut lits);
            assert_eq!(lits.len(), 1);
            let Literal::String(s) = &lits[0] else {
                panic!("literal changed type at seed {seed}");
            };
            assert!(s.starts_with('%'), "wildcard lost at seed {seed}: {s}");
            assert!(!s.ends_with('%'));
        }
        let q = parse_sql("SELECT name FROM t WHERE age > 20").unwrap();
        for seed in 0..50 {
            let (out, _) = value_replace(&q, &pool, seed).unwrap();
            let mut lits = Vec::new();
            collect_literals(&out, &mut lits);
            assert!(matches!(&lits[0], Literal::Number(n) if !n.contains('.')));
        }
    }

    #[test]
    fn value_replace_requires_a_literal() {
        let q = parse_sql("SELECT name FROM singer").unwrap();
        assert!(matches!(
            value_replace(&q, &ValuePool::default(), 3),
            Err(AugmentError::NoValue)
        ));
    }

    #[test]
    fn database_replace_renames_consistently() {
        let catalog = donor_catalog();
        let q = parse_sql(FIG5_SQL).unwrap();
        let (out, _) = database_replace(&q, &catalog, 11).unwrap();
        let rendered = render_sql(&out);
        let reparsed = parse_sql(&rendered).unwrap();
        // every table now comes from the donor database
        let donor = catalog.get("concert_singer").unwrap();
        let graph = build_graph(&reparsed).unwrap();
        for table in graph.nodes_of_class(crate::graph::NodeClass::Table) {
            assert!(
                donor.has_table(&table.text),
                "table `{}` not in donor: {rendered}",
                table.text
            );
        }
        // same table structure: still 3 distinct tables
        assert_eq!(graph.nodes_of_class(crate::graph::NodeClass::Table).count(), 3);
    }

    #[test]
    fn database_replace_needs_a_distinct_donor() {
        let mut catalog = donor_catalog();
        catalog.databases.truncate(1); // only the source schema remains
        let q = parse_sql(FIG5_SQL).unwrap();
        assert!(matches!(
            database_replace(&q, &catalog, 5),
            Err(AugmentError::NoCompatibleDonor)
        ));
    }

    #[test]
    fn predicate_drop_on_two_join_except_query_matches_expected_sql() {
        let q = parse_sql(FIG5_SQL).unwrap();
        let (out, _) = predicate_modify(&q, 9).unwrap();
        assert_eq!(
            render_sql(&out),
            "SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid"
        );
    }

    #[test]
    fn conjunct_drop_keeps_one_condition() {
        let q = parse_sql("SELECT x FROM t WHERE a = 1 AND b = 2").unwrap();
        let mut saw_conjunct_drop = false;
        let mut saw_full_drop = false;
        for seed in 0..50 {
            let (out, _) = predicate_modify(&q, seed).unwrap();
            let rendered = render_sql(&out);
            match rendered.as_str() {
                "SELECT x FROM t WHERE a = 1" | "SELECT x FROM t WHERE b = 2" => {
                    saw_conjunct_drop = true
                }
                "SELECT x FROM t" => saw_full_drop = true,
                other => panic!("unexpected rewrite: {other}"),
            }
        }
        assert!(saw_conjunct_drop && saw_full_drop);
    }

    #[test]
    fn single_condition_where_is_dropped_whole() {
        let q = parse_sql("SELECT x FROM t WHERE a = 1").unwrap();
        for seed in 0..20 {
            let (out, _) = predicate_modify(&q, seed).unwrap();
            assert_eq!(render_sql(&out), "SELECT x FROM t");
        }
    }

    #[test]
    fn predicate_modify_requires_a_predicate() {
        let q = parse_sql("SELECT x FROM t").unwrap();
        assert!(matches!(predicate_modify(&q, 0), Err(AugmentError::NoPredicate)));
    }

    #[test]
    fn join_simplify_drops_second_join() {
        // pets/T3 is referenced in WHERE, so only has_pet's join would dangle;
        // drop the T3 reference first so both joins are candidates.
        let sql = "SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid";
        let q = parse_sql(sql).unwrap();
        let (out, _) = join_simplify(&q, 4).unwrap();
        let rendered = render_sql(&out);
        let reparsed = parse_sql(&rendered).unwrap();
        let graph = build_graph(&reparsed);
        assert!(graph.is_ok(), "dangling reference after drop: {rendered}");
        let joins = graph
            .unwrap()
            .nodes_of_class(crate::graph::NodeClass::Keyword)
            .filter(|n| n.text == "JOIN")
            .count();
        assert_eq!(joins, 1);
    }

    #[test]
    fn join_simplify_never_dangles() {
        // T2 appears in both ON conditions; dropping the has_pet join would
        // orphan `T2.petid`, so only the pets join may go.
        let sql = "SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid";
        let q = parse_sql(sql).unwrap();
        for seed in 0..30 {
            let (out, _) = join_simplify(&q, seed).unwrap();
            let rendered = render_sql(&out);
            assert!(rendered.contains("has_pet"), "seed {seed}: {rendered}");
        }
    }

    #[test]
    fn join_simplify_requires_two_joins() {
        let q = parse_sql("SELECT T1.x FROM a AS T1 JOIN b AS T2 ON T1.id = T2.id").unwrap();
        assert!(matches!(join_simplify(&q, 0), Err(AugmentError::TooFewJoins)));
    }

    #[test]
    fn sample_positive_is_seed_deterministic() {
        let catalog = donor_catalog();
        let pool = ValuePool::default();
        let a = sample_positive(FIG5_SQL, &catalog, &pool, 0.2, 42).unwrap();
        let b = sample_positive(FIG5_SQL, &catalog, &pool, 0.2, 42).unwrap();
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.source_sql, b.source_sql);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.masked_node_ids, b.masked_node_ids);
    }

    #[test]
    fn degenerate_sql_still_has_masking_or_donor_route() {
        let catalog = donor_catalog();
        let pool = ValuePool::default();
        // no keywords, values, predicates, or joins to rewrite
        let inst = sample_positive("SELECT count(*) FROM singer", &catalog, &pool, 0.3, 1).unwrap();
        assert!(matches!(
            inst.kind,
            AugmentKind::FeatureMasking | AugmentKind::DatabaseReplacement
        ));
    }

    #[test]
    fn negatives_exclude_anchor_and_are_distinct() {
        let picks = sample_negatives(10, 3, 9, 99).unwrap();
        assert_eq!(picks.len(), 9);
        assert!(!picks.contains(&3));
        let set: BTreeSet<_> = picks.iter().collect();
        assert_eq!(set.len(), 9);
        assert!(matches!(
            sample_negatives(5, 0, 5, 1),
            Err(AugmentError::CorpusTooSmall(5, 5))
        ));
    }
}
