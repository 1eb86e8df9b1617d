//! Reduction of a syntax tree to the label-only ordered tree used by the
//! structural similarity metrics. Table, column, and literal names are
//! erased; only the construct types survive.

use super::*;
use std::fmt;

/// Node label vocabulary. `Column` is kept in the enum for callers that
/// build their own trees, but the normalizer collapses column references
/// under their parent operator and never emits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TreeLabel {
    Root,
    Select,
    Where,
    Table,
    Column,
    Min,
    Max,
    Count,
    Sum,
    Avg,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    Intersect,
    Except,
    Union,
    Join,
    And,
    Or,
    Eq,
    Neq,
    Lt,
    Lte,
    Gt,
    Gte,
    Like,
    In,
    Between,
    Exists,
    IsNull,
}

impl fmt::Display for TreeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TreeLabel::Root => "ROOT",
            TreeLabel::Select => "SELECT",
            TreeLabel::Where => "WHERE",
            TreeLabel::Table => "TABLE",
            TreeLabel::Column => "COLUMN",
            TreeLabel::Min => "MIN",
            TreeLabel::Max => "MAX",
            TreeLabel::Count => "COUNT",
            TreeLabel::Sum => "SUM",
            TreeLabel::Avg => "AVG",
            TreeLabel::GroupBy => "GROUP BY",
            TreeLabel::Having => "HAVING",
            TreeLabel::OrderBy => "ORDER BY",
            TreeLabel::Limit => "LIMIT",
            TreeLabel::Intersect => "INTERSECT",
            TreeLabel::Except => "EXCEPT",
            TreeLabel::Union => "UNION",
            TreeLabel::Join => "JOIN",
            TreeLabel::And => "AND",
            TreeLabel::Or => "OR",
            TreeLabel::Eq => "EQ",
            TreeLabel::Neq => "NEQ",
            TreeLabel::Lt => "LT",
            TreeLabel::Lte => "LTE",
            TreeLabel::Gt => "GT",
            TreeLabel::Gte => "GTE",
            TreeLabel::Like => "LIKE",
            TreeLabel::In => "IN",
            TreeLabel::Between => "BETWEEN",
            TreeLabel::Exists => "EXISTS",
            TreeLabel::IsNull => "IS NULL",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelNode {
    pub label: TreeLabel,
    pub children: Vec<LabelNode>,
}

impl LabelNode {
    pub fn new(label: TreeLabel, children: Vec<LabelNode>) -> Self {
        LabelNode { label, children }
    }

    pub fn leaf(label: TreeLabel) -> Self {
        LabelNode {
            label,
            children: Vec::new(),
        }
    }

    fn count(&self) -> usize {
        1 + self.children.iter().map(LabelNode::count).sum::<usize>()
    }
}

/// Ordered tree of construct labels, rooted at a dummy ROOT node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    pub root: LabelNode,
}

impl LabeledTree {
    pub fn new(root: LabelNode) -> Self {
        LabeledTree { root }
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    /// Preorder traversal of all labels.
    pub fn labels(&self) -> Vec<TreeLabel> {
        let mut out = Vec::with_capacity(self.node_count());
        fn walk(node: &LabelNode, out: &mut Vec<TreeLabel>) {
            out.push(node.label);
            for child in &node.children {
                walk(child, out);
            }
        }
        walk(&self.root, &mut out);
        out
    }
}

/// Reduce a parsed query to its label tree.
///
/// Child order under a SELECT node is fixed: projection aggregates, FROM
/// tables and joins (source order), WHERE, GROUP BY, HAVING; the query-level
/// ORDER BY and LIMIT attach after those on the body's top node.
pub fn normalize_ast(query: &Query) -> LabeledTree {
    LabeledTree::new(LabelNode::new(TreeLabel::Root, vec![query_node(query)]))
}

fn query_node(query: &Query) -> LabelNode {
    let mut node = set_expr_node(&query.body);
    if !query.order_by.is_empty() {
        let mut children = Vec::new();
        for item in &query.order_by {
            collect_expr(&item.expr, &mut children);
        }
        node.children.push(LabelNode::new(TreeLabel::OrderBy, children));
    }
    if query.limit.is_some() {
        node.children.push(LabelNode::leaf(TreeLabel::Limit));
    }
    node
}

fn set_expr_node(body: &SetExpr) -> LabelNode {
    match body {
        SetExpr::Select(select) => select_node(select),
        SetExpr::Compound {
            op, left, right, ..
        } => {
            let label = match op {
                SetOp::Union => TreeLabel::Union,
                SetOp::Intersect => TreeLabel::Intersect,
                SetOp::Except => TreeLabel::Except,
            };
            LabelNode::new(label, vec![set_expr_node(left), set_expr_node(right)])
        }
    }
}

fn select_node(select: &Select) -> LabelNode {
    let mut children = Vec::new();
    for item in &select.items {
        if let SelectItem::Expr { expr, .. } = item {
            collect_expr(expr, &mut children);
        }
    }
    if let Some(from) = &select.from {
        children.push(table_node(&from.base));
        for join in &from.joins {
            match join.kind {
                JoinKind::Comma => {
                    // the comma form carries no JOIN keyword; table only
                    children.push(table_node(&join.table));
                }
                _ => {
                    let mut join_children = vec![table_node(&join.table)];
                    if let Some(on) = &join.on {
                        collect_expr(on, &mut join_children);
                    }
                    children.push(LabelNode::new(TreeLabel::Join, join_children));
                }
            }
        }
    }
    if let Some(pred) = &select.where_clause {
        let mut where_children = Vec::new();
        collect_expr(pred, &mut where_children);
        children.push(LabelNode::new(TreeLabel::Where, where_children));
    }
    if !select.group_by.is_empty() {
        children.push(LabelNode::leaf(TreeLabel::GroupBy));
    }
    if let Some(pred) = &select.having {
        let mut having_children = Vec::new();
        collect_expr(pred, &mut having_children);
        children.push(LabelNode::new(TreeLabel::Having, having_children));
    }
    LabelNode::new(TreeLabel::Select, children)
}

fn table_node(table: &TableRef) -> LabelNode {
    match table {
        TableRef::Named { .. } => LabelNode::leaf(TreeLabel::Table),
        TableRef::Subquery { query, .. } => query_node(query),
    }
}

/// Append the retained labels of an expression to `out`. Column references,
/// literals, arithmetic, casts, and scalar function calls are collapsed;
/// their retained descendants (aggregates, subqueries) float up.
fn collect_expr(expr: &Expr, out: &mut Vec<LabelNode>) {
    match expr {
        Expr::Column(_) | Expr::Literal(_) | Expr::Wildcard => {}
        Expr::Unary { operand, .. } => collect_expr(operand, out),
        Expr::Binary { left, op, right } => {
            let label = match op {
                BinaryOp::And => Some(TreeLabel::And),
                BinaryOp::Or => Some(TreeLabel::Or),
                BinaryOp::Eq => Some(TreeLabel::Eq),
                BinaryOp::NotEq => Some(TreeLabel::Neq),
                BinaryOp::Lt => Some(TreeLabel::Lt),
                BinaryOp::LtEq => Some(TreeLabel::Lte),
                BinaryOp::Gt => Some(TreeLabel::Gt),
                BinaryOp::GtEq => Some(TreeLabel::Gte),
                _ => None,
            };
            match label {
                Some(label) => {
                    let mut children = Vec::new();
                    collect_expr(left, &mut children);
                    collect_expr(right, &mut children);
                    out.push(LabelNode::new(label, children));
                }
                // arithmetic and concat collapse
                None => {
                    collect_expr(left, out);
                    collect_expr(right, out);
                }
            }
        }
        Expr::Function { name, args, .. } => {
            let label = match name.to_ascii_lowercase().as_str() {
                "min" => Some(TreeLabel::Min),
                "max" => Some(TreeLabel::Max),
                "count" => Some(TreeLabel::Count),
                "sum" => Some(TreeLabel::Sum),
                "avg" => Some(TreeLabel::Avg),
                _ => None,
            };
            let mut children = Vec::new();
            for arg in args {
                collect_expr(arg, &mut children);
            }
            match label {
                Some(label) => out.push(LabelNode::new(label, children)),
                None => out.extend(children),
            }
        }
        Expr::IsNull { operand, .. } => {
            let mut children = Vec::new();
            collect_expr(operand, &mut children);
            out.push(LabelNode::new(TreeLabel::IsNull, children));
        }
        Expr::InList { operand, items, .. } => {
            let mut children = Vec::new();
            collect_expr(operand, &mut children);
            for item in items {
                collect_expr(item, &mut children);
            }
            out.push(LabelNode::new(TreeLabel::In, children));
        }
        Expr::InSubquery { operand, query, .. } => {
            let mut children = Vec::new();
            collect_expr(operand, &mut children);
            children.push(query_node(query));
            out.push(LabelNode::new(TreeLabel::In, children));
        }
        Expr::Between {
            operand, low, high, ..
        } => {
            let mut children = Vec::new();
            collect_expr(operand, &mut children);
            collect_expr(low, &mut children);
            collect_expr(high, &mut children);
            out.push(LabelNode::new(TreeLabel::Between, children));
        }
        Expr::Like {
            operand, pattern, ..
        } => {
            let mut children = Vec::new();
            collect_expr(operand, &mut children);
            collect_expr(pattern, &mut children);
            out.push(LabelNode::new(TreeLabel::Like, children));
        }
        Expr::Exists { query, .. } => {
            out.push(LabelNode::new(TreeLabel::Exists, vec![query_node(query)]));
        }
        Expr::Subquery(query) => out.push(query_node(query)),
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            if let Some(operand) = operand {
                collect_expr(operand, out);
            }
            for (cond, result) in branches {
                collect_expr(cond, out);
                collect_expr(result, out);
            }
            if let Some(else_result) = else_result {
                collect_expr(else_result, out);
            }
        }
        Expr::Cast { operand, .. } => collect_expr(operand, out),
    }
}
