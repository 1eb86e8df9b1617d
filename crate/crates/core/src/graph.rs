//! Directed acyclic graph encoding of one SQL statement, the input
//! representation for the contrastive graph encoder.
//!
//! Five node classes: a dummy Root, one Keyword node per keyword occurrence
//! (so a two-join query has two JOIN nodes), and Table / Column / Value
//! nodes. Identical table or column names are merged into a single node;
//! columns carry table-qualified text (`student:stuid`) with aliases resolved
//! away before construction. Edges run operator→table/column, table→column,
//! and comparator→value, all pointing away from the root, so the graph is
//! always acyclic.

use crate::ast::*;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("column `{0}` cannot be attributed to a single table")]
    AmbiguousColumn(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeClass {
    Root,
    Keyword,
    Table,
    Column,
    Value,
}

impl NodeClass {
    /// Fixed position of this class in one-hot feature encodings.
    pub fn index(self) -> usize {
        match self {
            NodeClass::Root => 0,
            NodeClass::Keyword => 1,
            NodeClass::Table => 2,
            NodeClass::Column => 3,
            NodeClass::Value => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeClass::Root => "ROOT",
            NodeClass::Keyword => "KEYWORD",
            NodeClass::Table => "TABLE",
            NodeClass::Column => "COLUMN",
            NodeClass::Value => "VALUE",
        }
    }
}

pub const NODE_CLASS_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: usize,
    pub class: NodeClass,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SqlGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize)>,
}

impl SqlGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_of_class(&self, class: NodeClass) -> impl Iterator<Item = &GraphNode> {
        self.nodes.iter().filter(move |n| n.class == class)
    }

    /// Keyword nodes whose text must never be feature-masked.
    pub fn is_essential(&self, id: usize) -> bool {
        let node = &self.nodes[id];
        match node.class {
            NodeClass::Root => true,
            NodeClass::Keyword => {
                node.text == "SELECT"
                    || node.text == "JOIN"
                    || node.text == "WHERE"
                    || node.text.starts_with("GROUP")
                    || node.text.starts_with("ORDER")
            }
            _ => false,
        }
    }

    /// Node/edge list text export: one `node` or `edge` line each, stable
    /// order, for external visualization tooling.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            out.push_str(&format!(
                "node\t{}\t{}\t{}\n",
                node.id,
                node.class.name(),
                node.text
            ));
        }
        for (src, dst) in &self.edges {
            out.push_str(&format!("edge\t{src}\t{dst}\n"));
        }
        out
    }

    /// True when every edge points from a lower topological layer to a
    /// higher one, i.e. a topological sort exists.
    pub fn is_acyclic(&self) -> bool {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(s, d) in &self.edges {
            adj[s].push(d);
            indegree[d] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &adj[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == n
    }
}

/// Stable content hash of a graph, invariant under node-id permutation:
/// Weisfeiler–Lehman style label refinement followed by a hash of the sorted
/// node and edge hash multisets.
pub fn graph_fingerprint(graph: &SqlGraph) -> String {
    use sha2::{Digest, Sha256};

    let n = graph.nodes.len();
    let mut hashes: Vec<[u8; 32]> = graph
        .nodes
        .iter()
        .map(|node| {
            let mut h = Sha256::new();
            h.update([node.class.index() as u8]);
            h.update(node.text.as_bytes());
            h.finalize().into()
        })
        .collect();
    let mut in_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut out_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(s, d) in &graph.edges {
        out_adj[s].push(d);
        in_adj[d].push(s);
    }
    let rounds = n.min(16).max(1);
    for _ in 0..rounds {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut h = sha2::Sha256::new();
            h.update(hashes[v]);
            let mut ins: Vec<[u8; 32]> = in_adj[v].iter().map(|&u| hashes[u]).collect();
            ins.sort_unstable();
            h.update([0u8]);
            for x in ins {
                h.update(x);
            }
            let mut outs: Vec<[u8; 32]> = out_adj[v].iter().map(|&u| hashes[u]).collect();
            outs.sort_unstable();
            h.update([1u8]);
            for x in outs {
                h.update(x);
            }
            next.push(h.finalize().into());
        }
        hashes = next;
    }
    let mut node_hashes = hashes.clone();
    node_hashes.sort_unstable();
    let mut edge_hashes: Vec<[u8; 64]> = graph
        .edges
        .iter()
        .map(|&(s, d)| {
            let mut buf = [0u8; 64];
            buf[..32].copy_from_slice(&hashes[s]);
            buf[32..].copy_from_slice(&hashes[d]);
            buf
        })
        .collect();
    edge_hashes.sort_unstable();
    let mut h = Sha256::new();
    for x in node_hashes {
        h.update(x);
    }
    for x in edge_hashes {
        h.update(x);
    }
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Build the DAG for a parsed statement. Node ids follow document order of
/// first occurrence; merged tables/columns keep their first-seen spelling.
pub fn build_graph(query: &Query) -> Result<SqlGraph, GraphError> {
    let mut b = Builder::default();
    let root = b.push(NodeClass::Root, "ROOT");
    let scope = Scope::default();
    b.walk_query(query, root, &scope)?;
    Ok(SqlGraph {
        nodes: b.nodes,
        edges: b.edges,
    })
}

/// Tables visible to column references, innermost select first.
#[derive(Default, Clone)]
struct Scope {
    /// (binding name, canonical table name) — binding is the alias when one
    /// was written, otherwise the table name itself.
    frames: Vec<Vec<(String, String)>>,
}

impl Scope {
    fn child(&self, frame: Vec<(String, String)>) -> Scope {
        let mut frames = self.frames.clone();
        frames.push(frame);
        Scope { frames }
    }

    fn resolve(&self, column: &ColumnRef) -> Result<String, GraphError> {
        for frame in self.frames.iter().rev() {
            match &column.table {
                Some(qualifier) => {
                    if let Some((_, table)) = frame
                        .iter()
                        .find(|(binding, _)| binding.eq_ignore_ascii_case(qualifier))
                    {
                        return Ok(table.clone());
                    }
                }
                None => {
                    if frame.len() == 1 {
                        return Ok(frame[0].1.clone());
                    }
                    if frame.len() > 1 {
                        return Err(GraphError::AmbiguousColumn(column.column.clone()));
                    }
                }
            }
        }
        match &column.table {
            Some(qualifier) => Err(GraphError::UnsupportedConstruct(format!(
                "unknown table or alias `{qualifier}`"
            ))),
            None => Err(GraphError::AmbiguousColumn(column.column.clone())),
        }
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<GraphNode>,
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
    tables: HashMap<String, usize>,
    columns: HashMap<String, usize>,
}

impl Builder {
    fn push(&mut self, class: NodeClass, text: &str) -> usize {
        let id = self.nodes.len();
        self.nodes.push(GraphNode {
            id,
            class,
            text: text.to_string(),
        });
        id
    }

    fn edge(&mut self, src: usize, dst: usize) {
        if self.edge_set.insert((src, dst)) {
            self.edges.push((src, dst));
        }
    }

    fn table_node(&mut self, name: &str) -> usize {
        let key = name.to_lowercase();
        if let Some(&id) = self.tables.get(&key) {
            return id;
        }
        let id = self.push(NodeClass::Table, name);
        self.tables.insert(key, id);
        id
    }

    fn column_node(&mut self, table: &str, column: &str) -> usize {
        let text = format!("{table}:{column}");
        let key = text.to_lowercase();
        if let Some(&id) = self.columns.get(&key) {
            return id;
        }
        let id = self.push(NodeClass::Column, &text);
        self.columns.insert(key, id);
        // the owning table may not have been seen yet (correlated refs)
        let table_id = self.table_node(table);
        self.edge(table_id, id);
        id
    }

    fn walk_query(&mut self, query: &Query, parent: usize, scope: &Scope) -> Result<usize, GraphError> {
        let body_id = self.walk_set_expr(&query.body, parent, scope)?;
        // ORDER BY / LIMIT hang off the body's top node; the scope for their
        // expressions is the first select core's.
        if !query.order_by.is_empty() {
            let ob = self.push(NodeClass::Keyword, "ORDER BY");
            self.edge(body_id, ob);
            let inner = self.scope_for_first_core(&query.body, scope)?;
            for item in &query.order_by {
                self.walk_expr(&item.expr, ob, &inner)?;
            }
        }
        if let Some(limit) = &query.limit {
            let lim = self.push(NodeClass::Keyword, "LIMIT");
            self.edge(body_id, lim);
            let inner = self.scope_for_first_core(&query.body, scope)?;
            self.walk_expr(&limit.count, lim, &inner)?;
            if let Some(offset) = &limit.offset {
                self.walk_expr(offset, lim, &inner)?;
            }
        }
        Ok(body_id)
    }

    fn scope_for_first_core(&self, body: &SetExpr, scope: &Scope) -> Result<Scope, GraphError> {
        match body {
            SetExpr::Select(select) => Ok(scope.child(frame_of(select)?)),
            SetExpr::Compound { left, .. } => self.scope_for_first_core(left, scope),
        }
    }

    fn walk_set_expr(&mut self, body: &SetExpr, parent: usize, scope: &Scope) -> Result<usize, GraphError> {
        match body {
            SetExpr::Select(select) => self.walk_select(select, parent, scope),
            SetExpr::Compound {
                op, left, right, ..
            } => {
                let text = match op {
                    SetOp::Union => "UNION",
                    SetOp::Intersect => "INTERSECT",
                    SetOp::Except => "EXCEPT",
                };
                let id = self.push(NodeClass::Keyword, text);
                self.edge(parent, id);
                self.walk_set_expr(left, id, scope)?;
                self.walk_set_expr(right, id, scope)?;
                Ok(id)
            }
        }
    }

    fn walk_select(&mut self, select: &Select, parent: usize, scope: &Scope) -> Result<usize, GraphError> {
        let select_id = self.push(NodeClass::Keyword, "SELECT");
        self.edge(parent, select_id);
        let inner = scope.child(frame_of(select)?);

        for item in &select.items {
            match item {
                SelectItem::Wildcard => {}
                SelectItem::QualifiedWildcard(_) => {}
                SelectItem::Expr { expr, .. } => {
                    self.walk_expr(expr, select_id, &inner)?;
                }
            }
        }

        if let Some(from) = &select.from {
            self.walk_table_ref(&from.base, select_id, scope)?;
            for join in &from.joins {
                match join.kind {
                    JoinKind::Comma => {
                        self.walk_table_ref(&join.table, select_id, scope)?;
                    }
                    _ => {
                        let join_id = self.push(NodeClass::Keyword, "JOIN");
                        self.edge(select_id, join_id);
                        self.walk_table_ref(&join.table, join_id, scope)?;
                        if let Some(on) = &join.on {
                            self.walk_expr(on, join_id, &inner)?;
                        }
                    }
                }
            }
        }

        if let Some(pred) = &select.where_clause {
            let where_id = self.push(NodeClass::Keyword, "WHERE");
            self.edge(select_id, where_id);
            self.walk_expr(pred, where_id, &inner)?;
        }
        if !select.group_by.is_empty() {
            let gb = self.push(NodeClass::Keyword, "GROUP BY");
            self.edge(select_id, gb);
            for expr in &select.group_by {
                self.walk_expr(expr, gb, &inner)?;
            }
        }
        if let Some(pred) = &select.having {
            let having = self.push(NodeClass::Keyword, "HAVING");
            self.edge(select_id, having);
            self.walk_expr(pred, having, &inner)?;
        }
        Ok(select_id)
    }

    fn walk_table_ref(&mut self, table: &TableRef, parent: usize, scope: &Scope) -> Result<(), GraphError> {
        match table {
            TableRef::Named { name, .. } => {
                let id = self.table_node(name);
                self.edge(parent, id);
                Ok(())
            }
            TableRef::Subquery { query, .. } => {
                self.walk_query(query, parent, scope)?;
                Ok(())
            }
        }
    }

    fn walk_expr(&mut self, expr: &Expr, parent: usize, scope: &Scope) -> Result<(), GraphError> {
        match expr {
            Expr::Column(col) => {
                let table = scope.resolve(col)?;
                let id = self.column_node(&table, &col.column);
                self.edge(parent, id);
            }
            Expr::Literal(lit) => {
                let id = self.push(NodeClass::Value, &literal_text(lit));
                self.edge(parent, id);
            }
            Expr::Wildcard => {}
            Expr::Unary { op, operand } => match (op, operand.as_ref()) {
                (UnaryOp::Neg, Expr::Literal(lit)) => {
                    let id = self.push(NodeClass::Value, &format!("-{}", literal_text(lit)));
                    self.edge(parent, id);
                }
                (UnaryOp::Not, _) => {
                    let id = self.push(NodeClass::Keyword, "NOT");
                    self.edge(parent, id);
                    self.walk_expr(operand, id, scope)?;
                }
                _ => self.walk_expr(operand, parent, scope)?,
            },
            Expr::Binary { left, op, right } => {
                let text = match op {
                    BinaryOp::Eq => "EQ",
                    BinaryOp::NotEq => "NEQ",
                    BinaryOp::Lt => "LT",
                    BinaryOp::LtEq => "LTE",
                    BinaryOp::Gt => "GT",
                    BinaryOp::GtEq => "GTE",
                    BinaryOp::And => "AND",
                    BinaryOp::Or => "OR",
                    BinaryOp::Add => "ADD",
                    BinaryOp::Sub => "SUB",
                    BinaryOp::Mul => "MUL",
                    BinaryOp::Div => "DIV",
                    BinaryOp::Mod => "MOD",
                    BinaryOp::Concat => "CONCAT",
                };
                let id = self.push(NodeClass::Keyword, text);
                self.edge(parent, id);
                self.walk_expr(left, id, scope)?;
                self.walk_expr(right, id, scope)?;
            }
            Expr::Function {
                name,
                distinct: _,
                args,
            } => {
                let id = self.push(NodeClass::Keyword, &name.to_uppercase());
                self.edge(parent, id);
                for arg in args {
                    self.walk_expr(arg, id, scope)?;
                }
            }
            Expr::IsNull { operand, negated } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "IS NULL");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
            }
            Expr::InList {
                operand,
                negated,
                items,
            } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "IN");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
                for item in items {
                    self.walk_expr(item, id, scope)?;
                }
            }
            Expr::InSubquery {
                operand,
                negated,
                query,
            } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "IN");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
                self.walk_query(query, id, scope)?;
            }
            Expr::Between {
                operand,
                negated,
                low,
                high,
            } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "BETWEEN");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
                self.walk_expr(low, id, scope)?;
                self.walk_expr(high, id, scope)?;
            }
            Expr::Like {
                operand,
                negated,
                pattern,
            } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "LIKE");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
                self.walk_expr(pattern, id, scope)?;
            }
            Expr::Exists { negated, query } => {
                let parent = self.maybe_not(parent, *negated);
                let id = self.push(NodeClass::Keyword, "EXISTS");
                self.edge(parent, id);
                self.walk_query(query, id, scope)?;
            }
            Expr::Subquery(query) => {
                self.walk_query(query, parent, scope)?;
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                let id = self.push(NodeClass::Keyword, "CASE");
                self.edge(parent, id);
                if let Some(operand) = operand {
                    self.walk_expr(operand, id, scope)?;
                }
                for (cond, result) in branches {
                    self.walk_expr(cond, id, scope)?;
                    self.walk_expr(result, id, scope)?;
                }
                if let Some(else_result) = else_result {
                    self.walk_expr(else_result, id, scope)?;
                }
            }
            Expr::Cast { operand, .. } => {
                let id = self.push(NodeClass::Keyword, "CAST");
                self.edge(parent, id);
                self.walk_expr(operand, id, scope)?;
            }
        }
        Ok(())
    }

    fn maybe_not(&mut self, parent: usize, negated: bool) -> usize {
        if negated {
            let id = self.push(NodeClass::Keyword, "NOT");
            self.edge(parent, id);
            id
        } else {
            parent
        }
    }
}

fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::Number(n) => n.clone(),
        Literal::String(s) => s.clone(),
        Literal::Boolean(true) => "true".to_string(),
        Literal::Boolean(false) => "false".to_string(),
        Literal::Null => "NULL".to_string(),
    }
}

/// Column bindings contributed by one select core's FROM clause. Columns
/// qualified by a derived-table alias are resolved through the subquery's
/// select list when that item is a plain column; anything else in a derived
/// table is out of the modeled subset.
fn frame_of(select: &Select) -> Result<Vec<(String, String)>, GraphError> {
    let mut frame = Vec::new();
    let Some(from) = &select.from else {
        return Ok(frame);
    };
    let mut add = |table: &TableRef| -> Result<(), GraphError> {
        match table {
            TableRef::Named { name, alias } => {
                frame.push((alias.clone().unwrap_or_else(|| name.clone()), name.clone()));
                Ok(())
            }
            TableRef::Subquery { query, alias } => {
                let SetExpr::Select(inner) = &query.body else {
                    return Err(GraphError::UnsupportedConstruct(
                        "compound derived table".to_string(),
                    ));
                };
                let inner_frame = frame_of(inner)?;
                if let Some(alias) = alias {
                    // bind the alias to the single underlying table when the
                    // derived table is a plain projection of one table
                    if inner_frame.len() == 1 {
                        frame.push((alias.clone(), inner_frame[0].1.clone()));
                        return Ok(());
                    }
                    return Err(GraphError::UnsupportedConstruct(format!(
                        "derived table `{alias}` over multiple tables"
                    )));
                }
                Err(GraphError::UnsupportedConstruct(
                    "derived table without alias".to_string(),
                ))
            }
        }
    };
    add(&from.base)?;
    for join in &from.joins {
        add(&join.table)?;
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_sql;

    const FIG5_SQL: &str = "SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid WHERE T3.pettype = 'cat'";

    #[test]
    fn two_join_except_query_builds_expected_node_counts() {
        let g = build_graph(&parse_sql(FIG5_SQL).unwrap()).unwrap();
        assert_eq!(g.nodes_of_class(NodeClass::Table).count(), 3);
        let joins = g
            .nodes_of_class(NodeClass::Keyword)
            .filter(|n| n.text == "JOIN")
            .count();
        assert_eq!(joins, 2);
        let values: Vec<_> = g.nodes_of_class(NodeClass::Value).collect();
        assert_eq!(values.len(), 1);
        assert_eq!(values[0].text, "cat");
        assert_eq!(g.nodes_of_class(NodeClass::Root).count(), 1);
        assert!(g.is_acyclic());
        let columns: Vec<_> = g
            .nodes_of_class(NodeClass::Column)
            .map(|n| n.text.as_str())
            .collect();
        assert_eq!(
            columns,
            vec![
                "student:stuid",
                "has_pet:stuid",
                "pets:petid",
                "has_pet:petid",
                "pets:pettype"
            ]
        );
    }

    #[test]
    fn columns_link_to_their_tables() {
        let g = build_graph(&parse_sql(FIG5_SQL).unwrap()).unwrap();
        for col in g.nodes_of_class(NodeClass::Column) {
            let table_text = col.text.split(':').next().unwrap();
            let table = g
                .nodes_of_class(NodeClass::Table)
                .find(|t| t.text == table_text)
                .expect("owning table node");
            assert!(
                g.edges.contains(&(table.id, col.id)),
                "missing table edge for {}",
                col.text
            );
        }
    }

    #[test]
    fn count_star_query_graph() {
        let g = build_graph(&parse_sql("SELECT count(*) FROM singer").unwrap()).unwrap();
        let texts: Vec<_> = g.nodes.iter().map(|n| (n.class, n.text.as_str())).collect();
        assert_eq!(
            texts,
            vec![
                (NodeClass::Root, "ROOT"),
                (NodeClass::Keyword, "SELECT"),
                (NodeClass::Keyword, "COUNT"),
                (NodeClass::Table, "singer"),
            ]
        );
        assert_eq!(g.edges, vec![(0, 1), (1, 2), (1, 3)]);
    }

    #[test]
    fn identical_sql_builds_identical_graphs() {
        let a = build_graph(&parse_sql(FIG5_SQL).unwrap()).unwrap();
        let b = build_graph(&parse_sql(FIG5_SQL).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fingerprint_is_permutation_invariant() {
        let g = build_graph(&parse_sql(FIG5_SQL).unwrap()).unwrap();
        let fp = graph_fingerprint(&g);
        // reverse the id space
        let n = g.nodes.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut nodes: Vec<GraphNode> = g
            .nodes
            .iter()
            .map(|node| GraphNode {
                id: perm[node.id],
                class: node.class,
                text: node.text.clone(),
            })
            .collect();
        nodes.sort_by_key(|n| n.id);
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|&(s, d)| (perm[s], perm[d])).collect();
        let permuted = SqlGraph { nodes, edges };
        assert_eq!(fp, graph_fingerprint(&permuted));
    }

    #[test]
    fn fingerprint_separates_value_changes() {
        let a = build_graph(&parse_sql("SELECT name FROM pets WHERE pettype = 'cat'").unwrap()).unwrap();
        let b = build_graph(&parse_sql("SELECT name FROM pets WHERE pettype = 'dog'").unwrap()).unwrap();
        assert_ne!(graph_fingerprint(&a), graph_fingerprint(&b));
    }

    #[test]
    fn ambiguous_unqualified_column_is_rejected() {
        let err = build_graph(
            &parse_sql("SELECT name FROM singer JOIN concert ON singer.id = concert.sid").unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::AmbiguousColumn(c) if c == "name"));
    }

    #[test]
    fn export_lists_every_node_and_edge() {
        let g = build_graph(&parse_sql("SELECT count(*) FROM singer").unwrap()).unwrap();
        let text = g.export_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("node")).count(), 4);
        assert_eq!(text.lines().filter(|l| l.starts_with("edge")).count(), 3);
    }
}
