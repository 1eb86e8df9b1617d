//! SQL syntax trees for the SQLite-executable subset used by the Spider and
//! BIRD benchmarks: SELECT cores with joins, predicates, grouping, ordering,
//! limits, set operators, subqueries, plus CREATE TABLE for schema DDL.
//!
//! Parsing is case- and whitespace-insensitive; rendering is canonical
//! (uppercase keywords, single spaces), so `parse(render(parse(s)))` equals
//! `parse(s)` for every supported statement.

mod lexer;
mod normalize;
mod parser;
mod render;
#[cfg(test)]
mod tests;

pub use normalize::{normalize_ast, LabelNode, LabeledTree, TreeLabel};
pub use parser::{parse_create_table, parse_sql};

use std::fmt;

/// Error raised when the input cannot be parsed as a supported statement.
///
/// Carries the byte offset of the offending token so callers (notably the
/// error-correction scheduler, which routes unparseable SQL to the prompt
/// pass) can report where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for SyntaxError {}

/// A full query: one select core or a compound of them, with the optional
/// trailing ORDER BY / LIMIT that apply to the whole body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub body: SetExpr,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<LimitClause>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Select(Box<Select>),
    Compound {
        op: SetOp,
        all: bool,
        left: Box<SetExpr>,
        right: Box<SetExpr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersect,
    Except,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Option<FromClause>,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectItem {
    /// `*`
    Wildcard,
    /// `t.*`
    QualifiedWildcard(String),
    Expr { expr: Expr, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FromClause {
    pub base: TableRef,
    pub joins: Vec<Join>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TableRef {
    Named { name: String, alias: Option<String> },
    Subquery { query: Box<Query>, alias: Option<String> },
}

impl TableRef {
    /// The name a column qualifier resolves against: the alias when present,
    /// otherwise the table name itself.
    pub fn binding_name(&self) -> Option<&str> {
        match self {
            TableRef::Named { name, alias } => Some(alias.as_deref().unwrap_or(name)),
            TableRef::Subquery { alias, .. } => alias.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Join {
    pub kind: JoinKind,
    pub table: TableRef,
    pub on: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinKind {
    Inner,
    Left,
    Cross,
    /// `FROM a, b` — kept distinct from CROSS JOIN so rendering round-trips.
    Comma,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderItem {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LimitClause {
    pub count: Expr,
    pub offset: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub column: String,
}

/// Literals keep their original lexeme for numbers so an edited literal is
/// re-emitted verbatim on render.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Number(String),
    String(String),
    Boolean(bool),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
}

impl BinaryOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq
                | BinaryOp::NotEq
                | BinaryOp::Lt
                | BinaryOp::LtEq
                | BinaryOp::Gt
                | BinaryOp::GtEq
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Column(ColumnRef),
    Literal(Literal),
    /// `*` as an argument, e.g. `count(*)`.
    Wildcard,
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        left: Box<Expr>,
        op: BinaryOp,
        right: Box<Expr>,
    },
    Function {
        name: String,
        distinct: bool,
        args: Vec<Expr>,
    },
    IsNull {
        operand: Box<Expr>,
        negated: bool,
    },
    InList {
        operand: Box<Expr>,
        negated: bool,
        items: Vec<Expr>,
    },
    InSubquery {
        operand: Box<Expr>,
        negated: bool,
        query: Box<Query>,
    },
    Between {
        operand: Box<Expr>,
        negated: bool,
        low: Box<Expr>,
        high: Box<Expr>,
    },
    Like {
        operand: Box<Expr>,
        negated: bool,
        pattern: Box<Expr>,
    },
    Exists {
        negated: bool,
        query: Box<Query>,
    },
    Subquery(Box<Query>),
    Case {
        operand: Option<Box<Expr>>,
        branches: Vec<(Expr, Expr)>,
        else_result: Option<Box<Expr>>,
    },
    Cast {
        operand: Box<Expr>,
        type_name: String,
    },
}

impl Expr {
    /// True when the expression is one of the five aggregate calls.
    pub fn is_aggregate(&self) -> bool {
        match self {
            Expr::Function { name, .. } => AGGREGATE_FUNCTIONS
                .iter()
                .any(|agg| name.eq_ignore_ascii_case(agg)),
            _ => false,
        }
    }
}

pub const AGGREGATE_FUNCTIONS: [&str; 5] = ["count", "sum", "avg", "min", "max"];

/// `CREATE TABLE` statement, parsed only as far as the schema DDL emitted by
/// the prompt builder needs (columns, types, primary and foreign keys).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CreateTable {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKeyClause>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnDef {
    pub name: String,
    pub type_name: String,
    pub primary_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ForeignKeyClause {
    pub columns: Vec<String>,
    pub ref_table: String,
    pub ref_columns: Vec<String>,
}

/// Render a query back to canonical SQL text. The output always re-parses,
/// and re-parsing yields a tree equal to the input.
pub fn render_sql(query: &Query) -> String {
    render::render_query(query)
}

/// Render a CREATE TABLE statement as canonical DDL.
pub fn render_create_table(table: &CreateTable) -> String {
    render::render_create_table(table)
}
