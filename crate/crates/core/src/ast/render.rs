//! Canonical SQL rendering: uppercase keywords, single spaces, minimal
//! parentheses guided by operator precedence.

use super::*;

pub fn render_query(query: &Query) -> String {
    let mut out = String::new();
    write_set_expr(&mut out, &query.body);
    if !query.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, item) in query.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(&mut out, &item.expr, 0);
            if item.desc {
                out.push_str(" DESC");
            }
        }
    }
    if let Some(limit) = &query.limit {
        out.push_str(" LIMIT ");
        write_expr(&mut out, &limit.count, 0);
        if let Some(offset) = &limit.offset {
            out.push_str(" OFFSET ");
            write_expr(&mut out, offset, 0);
        }
    }
    out
}

fn write_set_expr(out: &mut String, body: &SetExpr) {
    match body {
        SetExpr::Select(select) => write_select(out, select),
        SetExpr::Compound {
            op,
            all,
            left,
            right,
        } => {
            write_set_expr(out, left);
            out.push_str(match op {
                SetOp::Union => " UNION ",
                SetOp::Intersect => " INTERSECT ",
                SetOp::Except => " EXCEPT ",
            });
            if *all {
                out.push_str("ALL ");
            }
            write_set_expr(out, right);
        }
    }
}

fn write_select(out: &mut String, select: &Select) {
    out.push_str("SELECT ");
    if select.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in select.items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Wildcard => out.push('*'),
            SelectItem::QualifiedWildcard(table) => {
                write_ident(out, table);
                out.push_str(".*");
            }
            SelectItem::Expr { expr, alias } => {
                write_expr(out, expr, 0);
                if let Some(alias) = alias {
                    out.push_str(" AS ");
                    write_ident(out, alias);
                }
            }
        }
    }
    if let Some(from) = &select.from {
        out.push_str(" FROM ");
        write_table_ref(out, &from.base);
        for join in &from.joins {
            match join.kind {
                JoinKind::Comma => out.push_str(", "),
                JoinKind::Inner => out.push_str(" JOIN "),
                JoinKind::Left => out.push_str(" LEFT JOIN "),
                JoinKind::Cross => out.push_str(" CROSS JOIN "),
            }
            write_table_ref(out, &join.table);
            if let Some(on) = &join.on {
                out.push_str(" ON ");
                write_expr(out, on, 0);
            }
        }
    }
    if let Some(pred) = &select.where_clause {
        out.push_str(" WHERE ");
        write_expr(out, pred, 0);
    }
    if !select.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        for (i, expr) in select.group_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, expr, 0);
        }
    }
    if let Some(pred) = &select.having {
        out.push_str(" HAVING ");
        write_expr(out, pred, 0);
    }
}

fn write_table_ref(out: &mut String, table: &TableRef) {
    match table {
        TableRef::Named { name, alias } => {
            write_ident(out, name);
            if let Some(alias) = alias {
                out.push_str(" AS ");
                write_ident(out, alias);
            }
        }
        TableRef::Subquery { query, alias } => {
            out.push('(');
            out.push_str(&render_query(query));
            out.push(')');
            if let Some(alias) = alias {
                out.push_str(" AS ");
                write_ident(out, alias);
            }
        }
    }
}

/// Binding power of an expression's top operator; children with strictly
/// lower power than their parent context get parenthesized.
fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary { op, .. } => match op {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::NotEq
            | BinaryOp::Lt
            | BinaryOp::LtEq
            | BinaryOp::Gt
            | BinaryOp::GtEq => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 6,
            BinaryOp::Concat => 7,
        },
        Expr::Unary { op: UnaryOp::Not, .. } => 3,
        Expr::Like { .. }
        | Expr::InList { .. }
        | Expr::InSubquery { .. }
        | Expr::Between { .. }
        | Expr::IsNull { .. } => 4,
        Expr::Unary { .. } => 8,
        _ => 10,
    }
}

fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let prec = precedence(expr);
    let needs_parens = prec < min_prec;
    if needs_parens {
        out.push('(');
    }
    match expr {
        Expr::Column(col) => {
            if let Some(table) = &col.table {
                write_ident(out, table);
                out.push('.');
            }
            write_ident(out, &col.column);
        }
        Expr::Literal(lit) => write_literal(out, lit),
        Expr::Wildcard => out.push('*'),
        Expr::Unary { op, operand } => match op {
            UnaryOp::Not => {
                out.push_str("NOT ");
                write_expr(out, operand, prec + 1);
            }
            UnaryOp::Neg => {
                out.push('-');
                write_expr(out, operand, prec);
            }
            UnaryOp::Pos => {
                out.push('+');
                write_expr(out, operand, prec);
            }
        },
        Expr::Binary { left, op, right } => {
            write_expr(out, left, prec);
            out.push_str(match op {
                BinaryOp::Eq => " = ",
                BinaryOp::NotEq => " != ",
                BinaryOp::Lt => " < ",
                BinaryOp::LtEq => " <= ",
                BinaryOp::Gt => " > ",
                BinaryOp::GtEq => " >= ",
                BinaryOp::And => " AND ",
                BinaryOp::Or => " OR ",
                BinaryOp::Add => " + ",
                BinaryOp::Sub => " - ",
                BinaryOp::Mul => " * ",
                BinaryOp::Div => " / ",
                BinaryOp::Mod => " % ",
                BinaryOp::Concat => " || ",
            });
            write_expr(out, right, prec + 1);
        }
        Expr::Function {
            name,
            distinct,
            args,
        } => {
            out.push_str(&name.to_lowercase());
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg, 0);
            }
            out.push(')');
        }
        Expr::IsNull { operand, negated } => {
            write_expr(out, operand, prec + 1);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::InList {
            operand,
            negated,
            items,
        } => {
            write_expr(out, operand, prec + 1);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, 0);
            }
            out.push(')');
        }
        Expr::InSubquery {
            operand,
            negated,
            query,
        } => {
            write_expr(out, operand, prec + 1);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            out.push_str(&render_query(query));
            out.push(')');
        }
        Expr::Between {
            operand,
            negated,
            low,
            high,
        } => {
            write_expr(out, operand, prec + 1);
            out.push_str(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
            write_expr(out, low, prec + 1);
            out.push_str(" AND ");
            write_expr(out, high, prec + 1);
        }
        Expr::Like {
            operand,
            negated,
            pattern,
        } => {
            write_expr(out, operand, prec + 1);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            write_expr(out, pattern, prec + 1);
        }
        Expr::Exists { negated, query } => {
            if *negated {
                out.push_str("NOT ");
            }
            out.push_str("EXISTS (");
            out.push_str(&render_query(query));
            out.push(')');
        }
        Expr::Subquery(query) => {
            out.push('(');
            out.push_str(&render_query(query));
            out.push(')');
        }
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            out.push_str("CASE");
            if let Some(operand) = operand {
                out.push(' ');
                write_expr(out, operand, 0);
            }
            for (cond, result) in branches {
                out.push_str(" WHEN ");
                write_expr(out, cond, 0);
                out.push_str(" THEN ");
                write_expr(out, result, 0);
            }
            if let Some(else_result) = else_result {
                out.push_str(" ELSE ");
                write_expr(out, else_result, 0);
            }
            out.push_str(" END");
        }
        Expr::Cast { operand, type_name } => {
            out.push_str("CAST(");
            write_expr(out, operand, 0);
            out.push_str(" AS ");
            out.push_str(type_name);
            out.push(')');
        }
    }
    if needs_parens {
        out.push(')');
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Number(n) => out.push_str(n),
        Literal::String(s) => {
            out.push('\'');
            out.push_str(&s.replace('\'', "''"));
            out.push('\'');
        }
        Literal::Boolean(true) => out.push_str("TRUE"),
        Literal::Boolean(false) => out.push_str("FALSE"),
        Literal::Null => out.push_str("NULL"),
    }
}

fn write_ident(out: &mut String, name: &str) {
    let bare = !name.is_empty()
        && name
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false)
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved_word(name);
    if bare {
        out.push_str(name);
    } else {
        out.push('"');
        out.push_str(&name.replace('"', "\"\""));
        out.push('"');
    }
}

fn is_reserved_word(name: &str) -> bool {
    const WORDS: [&str; 38] = [
        "select", "from", "where", "group", "by", "having", "order", "limit", "offset", "union",
        "intersect", "except", "join", "inner", "left", "right", "outer", "cross", "on", "as",
        "and", "or", "not", "in", "like", "between", "is", "null", "exists", "distinct", "case",
        "when", "then", "else", "end", "cast", "asc", "desc",
    ];
    WORDS.iter().any(|w| name.eq_ignore_ascii_case(w))
}

pub fn render_create_table(table: &CreateTable) -> String {
    let mut out = String::new();
    out.push_str("CREATE TABLE ");
    write_ident(&mut out, &table.name);
    out.push_str(" (\n");
    let single_pk = table.primary_key.len() == 1;
    let mut lines: Vec<String> = Vec::new();
    for col in &table.columns {
        let mut line = String::from("  ");
        write_ident(&mut line, &col.name);
        if !col.type_name.is_empty() {
            line.push(' ');
            line.push_str(&col.type_name);
        }
        if col.primary_key && single_pk {
            line.push_str(" PRIMARY KEY");
        }
        lines.push(line);
    }
    if table.primary_key.len() > 1 {
        let mut line = String::from("  PRIMARY KEY (");
        for (i, pk) in table.primary_key.iter().enumerate() {
            if i > 0 {
                line.push_str(", ");
            }
            write_ident(&mut line, pk);
        }
        line.push(')');
        lines.push(line);
    }
    for fk in &table.foreign_keys {
        let mut line = String::from("  FOREIGN KEY (");
        for (i, c) in fk.columns.iter().enumerate() {
            if i > 0 {
                line.push_str(", ");
            }
            write_ident(&mut line, c);
        }
        line.push_str(") REFERENCES ");
        write_ident(&mut line, &fk.ref_table);
        line.push_str(" (");
        for (i, c) in fk.ref_columns.iter().enumerate() {
            if i > 0 {
                line.push_str(", ");
            }
            write_ident(&mut line, c);
        }
        line.push(')');
        lines.push(line);
    }
    out.push_str(&lines.join(",\n"));
    out.push_str("\n)");
    out
}
