//! Exact set match: component-level equality of two statements, ignoring
//! literal values and the order of set-semantic components (select list,
//! join/table sets, WHERE conjuncts, GROUP BY).

use crate::ast::{self, Expr, Query, SelectItem, SetExpr, TableRef};
use std::collections::BTreeSet;

#[derive(Debug, PartialEq, Eq)]
enum Canon {
    Select(Box<CanonSelect>),
    Compound {
        op: &'static str,
        left: Box<Canon>,
        right: Box<Canon>,
    },
}

#[derive(Debug, PartialEq, Eq, Default)]
struct CanonSelect {
    distinct: bool,
    select: BTreeSet<String>,
    tables: BTreeSet<String>,
    join_conditions: BTreeSet<String>,
    where_conjuncts: BTreeSet<String>,
    group_by: BTreeSet<String>,
    having_conjuncts: BTreeSet<String>,
    order_by: Vec<String>,
    has_limit: bool,
}

/// Component-set equality of two parsed statements.
pub fn exact_set_match(pred: &Query, gold: &Query) -> bool {
    canon_query(pred) == canon_query(gold)
}

fn canon_query(query: &Query) -> Canon {
    let mut canon = canon_body(&query.body);
    // ORDER BY / LIMIT attach to the outermost select of the body
    let (order_by, has_limit) = (
        query
            .order_by
            .iter()
            .map(|item| {
                format!(
                    "{}{}",
                    canon_expr(&item.expr),
                    if item.desc { " desc" } else { " asc" }
                )
            })
            .collect::<Vec<_>>(),
        query.limit.is_some(),
    );
    match &mut canon {
        Canon::Select(select) => {
            select.order_by = order_by;
            select.has_limit = has_limit;
        }
        Canon::Compound { left, .. } => {
            // hang ordering off the first arm for comparison purposes
            let mut cursor: &mut Canon = left;
            loop {
                match cursor {
                    Canon::Select(select) => {
                        select.order_by = order_by;
                        select.has_limit = has_limit;
                        break;
                    }
                    Canon::Compound { left, .. } => cursor = left,
                }
            }
        }
    }
    canon
}

fn canon_body(body: &SetExpr) -> Canon {
    match body {
        SetExpr::Select(select) => Canon::Select(Box::new(canon_select(select))),
        SetExpr::Compound {
            op, left, right, ..
        } => Canon::Compound {
            op: match op {
                ast::SetOp::Union => "union",
                ast::SetOp::Intersect => "intersect",
                ast::SetOp::Except => "except",
            },
            left: Box::new(canon_body(left)),
            right: Box::new(canon_body(right)),
        },
    }
}

fn canon_select(select: &ast::Select) -> CanonSelect {
    let frame = bindings(select);
    let mut canon = CanonSelect {
        distinct: select.distinct,
        ..CanonSelect::default()
    };
    for item in &select.items {
        let text = match item {
            SelectItem::Wildcard => "*".to_string(),
            SelectItem::QualifiedWildcard(t) => format!("{}.*", resolve(&frame, t)),
            SelectItem::Expr { expr, .. } => canon_expr_in(&frame, expr),
        };
        canon.select.insert(text);
    }
    if let Some(from) = &select.from {
        let mut add_table = |t: &TableRef| match t {
            TableRef::Named { name, .. } => {
                canon.tables.insert(name.to_lowercase());
            }
            TableRef::Subquery { query, .. } => {
                canon.tables.insert(format!("({:?})", canon_query(query)));
            }
        };
        add_table(&from.base);
        for join in &from.joins {
            add_table(&join.table);
            if let Some(on) = &join.on {
                for conjunct in conjuncts(on) {
                    canon.join_conditions.insert(canon_expr_in(&frame, conjunct));
                }
            }
        }
    }
    if let Some(w) = &select.where_clause {
        for conjunct in conjuncts(w) {
            canon.where_conjuncts.insert(canon_expr_in(&frame, conjunct));
        }
    }
    for g in &select.group_by {
        canon.group_by.insert(canon_expr_in(&frame, g));
    }
    if let Some(h) = &select.having {
        for conjunct in conjuncts(h) {
            canon.having_conjuncts.insert(canon_expr_in(&frame, conjunct));
        }
    }
    canon
}

fn bindings(select: &ast::Select) -> Vec<(String, String)> {
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
    frame
}

fn resolve(frame: &[(String, String)], qualifier: &str) -> String {
    frame
        .iter()
        .find(|(binding, _)| binding.eq_ignore_ascii_case(qualifier))
        .map(|(_, table)| table.clone())
        .unwrap_or_else(|| qualifier.to_lowercase())
}

fn conjuncts(expr: &Expr) -> Vec<&Expr> {
    match expr {
        Expr::Binary {
            left,
            op: ast::BinaryOp::And,
            right,
        } => {
            let mut out = conjuncts(left);
            out.extend(conjuncts(right));
            out
        }
        other => vec![other],
    }
}

fn canon_expr(expr: &Expr) -> String {
    canon_expr_in(&[], expr)
}

/// Canonical text of an expression: identifiers resolved and lowercased,
/// every literal masked as `?`, commutative comparisons side-sorted.
fn canon_expr_in(frame: &[(String, String)], expr: &Expr) -> String {
    match expr {
        Expr::Column(col) => match &col.table {
            Some(q) => format!("{}.{}", resolve(frame, q), col.column.to_lowercase()),
            None => {
                if frame.len() == 1 {
                    format!("{}.{}", frame[0].1, col.column.to_lowercase())
                } else {
                    col.column.to_lowercase()
                }
            }
        },
        Expr::Literal(_) => "?".to_string(),
        Expr::Wildcard => "*".to_string(),
        Expr::Unary { op, operand } => {
            let symbol = match op {
                ast::UnaryOp::Not => "not ",
                ast::UnaryOp::Neg => "-",
                ast::UnaryOp::Pos => "+",
            };
            format!("{symbol}{}", canon_expr_in(frame, operand))
        }
        Expr::Binary { left, op, right } => {
            let symbol = match op {
                ast::BinaryOp::Eq => "=",
                ast::BinaryOp::NotEq => "!=",
                ast::BinaryOp::Lt => "<",
                ast::BinaryOp::LtEq => "<=",
                ast::BinaryOp::Gt => ">",
                ast::BinaryOp::GtEq => ">=",
                ast::BinaryOp::And => "and",
                ast::BinaryOp::Or => "or",
                ast::BinaryOp::Add => "+",
                ast::BinaryOp::Sub => "-",
                ast::BinaryOp::Mul => "*",
                ast::BinaryOp::Div => "/",
                ast::BinaryOp::Mod => "%",
                ast::BinaryOp::Concat => "||",
            };
            let l = canon_expr_in(frame, left);
            let r = canon_expr_in(frame, right);
            match op {
                // commutative comparisons compare as unordered pairs
                ast::BinaryOp::Eq | ast::BinaryOp::NotEq => {
                    let (a, b) = if l <= r { (l, r) } else { (r, l) };
                    format!("({a} {symbol} {b})")
                }
                _ => format!("({l} {symbol} {r})"),
            }
        }
        Expr::Function {
            name,
            distinct,
            args,
        } => {
            let args = args
                .iter()
                .map(|a| canon_expr_in(frame, a))
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "{}({}{args})",
                name.to_lowercase(),
                if *distinct { "distinct " } else { "" }
            )
        }
        Expr::IsNull { operand, negated } => format!(
            "({} is {}null)",
            canon_expr_in(frame, operand),
            if *negated { "not " } else { "" }
        ),
        Expr::InList {
            operand, negated, ..
        } => format!(
            "({} {}in (?))",
            canon_expr_in(frame, operand),
            if *negated { "not " } else { "" }
        ),
        Expr::InSubquery {
            operand,
            negated,
            query,
        } => format!(
            "({} {}in {:?})",
            canon_expr_in(frame, operand),
            if *negated { "not " } else { "" },
            canon_query(query)
        ),
        Expr::Between {
            operand, negated, ..
        } => format!(
            "({} {}between ? and ?)",
            canon_expr_in(frame, operand),
            if *negated { "not " } else { "" }
        ),
        Expr::Like {
            operand, negated, ..
        } => format!(
            "({} {}like ?)",
            canon_expr_in(frame, operand),
            if *negated { "not " } else { "" }
        ),
        Expr::Exists { negated, query } => format!(
            "({}exists {:?})",
            if *negated { "not " } else { "" },
            canon_query(query)
        ),
        Expr::Subquery(query) => format!("{:?}", canon_query(query)),
        Expr::Case { .. } => "case".to_string(),
        Expr::Cast { operand, type_name } => format!(
            "cast({} as {})",
            canon_expr_in(frame, operand),
            type_name.to_lowercase()
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_sql;

    fn em(a: &str, b: &str) -> bool {
        exact_set_match(&parse_sql(a).unwrap(), &parse_sql(b).unwrap())
    }

    #[test]
    fn identical_queries_match() {
        let sql = "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = T2.sid WHERE T2.year = 2014";
        assert!(em(sql, sql));
    }

    #[test]
    fn reordered_where_conjuncts_match() {
        assert!(em(
            "SELECT name FROM t WHERE a = 1 AND b = 2",
            "SELECT name FROM t WHERE b = 2 AND a = 1"
        ));
    }

    #[test]
    fn differing_literals_match() {
        assert!(em(
            "SELECT name FROM t WHERE a = 1",
            "SELECT name FROM t WHERE a = 99"
        ));
        assert!(em(
            "SELECT name FROM t WHERE a LIKE '%x%'",
            "SELECT name FROM t WHERE a LIKE '%y%'"
        ));
    }

    #[test]
    fn aliases_are_transparent() {
        assert!(em(
            "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = T2.sid",
            "SELECT s.name FROM singer AS s JOIN concert AS c ON s.id = c.sid"
        ));
    }

    #[test]
    fn flipped_join_condition_sides_match() {
        assert!(em(
            "SELECT T1.name FROM a AS T1 JOIN b AS T2 ON T1.id = T2.aid",
            "SELECT T1.name FROM a AS T1 JOIN b AS T2 ON T2.aid = T1.id"
        ));
    }

    #[test]
    fn structural_differences_do_not_match() {
        assert!(!em("SELECT name FROM t", "SELECT name FROM t WHERE a = 1"));
        assert!(!em("SELECT name FROM t", "SELECT count(*) FROM t"));
        assert!(!em(
            "SELECT name FROM t ORDER BY a",
            "SELECT name FROM t ORDER BY a DESC"
        ));
        assert!(!em(
            "SELECT a FROM t UNION SELECT a FROM u",
            "SELECT a FROM t INTERSECT SELECT a FROM u"
        ));
        assert!(!em("SELECT DISTINCT name FROM t", "SELECT name FROM t"));
    }
}
