//! Recursive-descent parser for the supported query and DDL grammar.

use super::lexer::{tokenize, Spanned, Symbol, Token};
use super::*;

/// Parse one SQL query (SELECT core or compound). Trailing semicolons are
/// accepted; anything else after the statement is an error.
pub fn parse_sql(text: &str) -> Result<Query, SyntaxError> {
    let mut p = Parser::new(text)?;
    let query = p.parse_query()?;
    p.eat_symbol(Symbol::Semicolon);
    p.expect_eof()?;
    Ok(query)
}

/// Parse a single CREATE TABLE statement.
pub fn parse_create_table(text: &str) -> Result<CreateTable, SyntaxError> {
    let mut p = Parser::new(text)?;
    let table = p.parse_create_table()?;
    p.eat_symbol(Symbol::Semicolon);
    p.expect_eof()?;
    Ok(table)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

/// Words that cannot start a bare table/column alias. Keeps `FROM t JOIN u`
/// from reading JOIN as an alias of `t`.
const RESERVED: [&str; 32] = [
    "select", "from", "where", "group", "having", "order", "limit", "offset", "union",
    "intersect", "except", "join", "inner", "left", "right", "outer", "cross", "on", "and", "or",
    "not", "in", "like", "between", "is", "exists", "as", "when", "then", "else", "end", "asc",
];

impl Parser {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        if text.trim().is_empty() {
            return Err(SyntaxError {
                position: 0,
                message: "empty statement".to_string(),
            });
        }
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].token
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].token.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            position: self.here(),
            message: message.into(),
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {}", kw.to_uppercase())))
        }
    }

    fn peek_symbol(&self, sym: Symbol) -> bool {
        matches!(self.peek(), Token::Symbol(s) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: Symbol) -> bool {
        if self.peek_symbol(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: Symbol, what: &str) -> Result<(), SyntaxError> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Token::Ident(_) => match self.advance() {
                Token::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            Token::Eof => Ok(()),
            _ => Err(self.error("trailing input after statement")),
        }
    }

    // ----- queries ---------------------------------------------------------

    fn parse_query(&mut self) -> Result<Query, SyntaxError> {
        let body = self.parse_set_expr()?;
        let order_by = if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            self.parse_order_list()?
        } else {
            Vec::new()
        };
        let limit = if self.eat_keyword("limit") {
            Some(self.parse_limit()?)
        } else {
            None
        };
        Ok(Query {
            body,
            order_by,
            limit,
        })
    }

    fn parse_set_expr(&mut self) -> Result<SetExpr, SyntaxError> {
        let mut left = SetExpr::Select(Box::new(self.parse_select_core()?));
        loop {
            let (op, all) = if self.eat_keyword("union") {
                (SetOp::Union, self.eat_keyword("all"))
            } else if self.eat_keyword("intersect") {
                (SetOp::Intersect, false)
            } else if self.eat_keyword("except") {
                (SetOp::Except, false)
            } else {
                break;
            };
            let right = SetExpr::Select(Box::new(self.parse_select_core()?));
            left = SetExpr::Compound {
                op,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_select_core(&mut self) -> Result<Select, SyntaxError> {
        self.expect_keyword("select")?;
        let distinct = self.eat_keyword("distinct");
        let mut items = vec![self.parse_select_item()?];
        while self.eat_symbol(Symbol::Comma) {
            items.push(self.parse_select_item()?);
        }
        let from = if self.eat_keyword("from") {
            Some(self.parse_from_clause()?)
        } else {
            None
        };
        let where_clause = if self.eat_keyword("where") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let group_by = if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            let mut exprs = vec![self.parse_expr()?];
            while self.eat_symbol(Symbol::Comma) {
                exprs.push(self.parse_expr()?);
            }
            exprs
        } else {
            Vec::new()
        };
        let having = if self.eat_keyword("having") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            items,
            from,
            where_clause,
            group_by,
            having,
        })
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SyntaxError> {
        if self.eat_symbol(Symbol::Star) {
            return Ok(SelectItem::Wildcard);
        }
        // `t.*`
        if let (Token::Ident(name), Token::Symbol(Symbol::Dot), Token::Symbol(Symbol::Star)) =
            (self.peek(), self.peek_at(1), self.peek_at(2))
        {
            let name = name.clone();
            self.advance();
            self.advance();
            self.advance();
            return Ok(SelectItem::QualifiedWildcard(name));
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_alias(&mut self) -> Result<Option<String>, SyntaxError> {
        if self.eat_keyword("as") {
            return Ok(Some(self.expect_ident("alias after AS")?));
        }
        if let Token::Ident(s) = self.peek() {
            if !RESERVED.iter().any(|kw| s.eq_ignore_ascii_case(kw)) && !s.eq_ignore_ascii_case("desc") {
                let s = s.clone();
                self.advance();
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    fn parse_from_clause(&mut self) -> Result<FromClause, SyntaxError> {
        let base = self.parse_table_ref()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_symbol(Symbol::Comma) {
                JoinKind::Comma
            } else if self.peek_keyword("join") || self.peek_keyword("inner") {
                self.eat_keyword("inner");
                self.expect_keyword("join")?;
                JoinKind::Inner
            } else if self.peek_keyword("left") {
                self.advance();
                self.eat_keyword("outer");
                self.expect_keyword("join")?;
                JoinKind::Left
            } else if self.peek_keyword("cross") {
                self.advance();
                self.expect_keyword("join")?;
                JoinKind::Cross
            } else if self.peek_keyword("right") {
                return Err(self.error("RIGHT JOIN is not supported"));
            } else {
                break;
            };
            let table = self.parse_table_ref()?;
            let on = if self.eat_keyword("on") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            joins.push(Join { kind, table, on });
        }
        Ok(FromClause { base, joins })
    }

    fn parse_table_ref(&mut self) -> Result<TableRef, SyntaxError> {
        if self.eat_symbol(Symbol::LParen) {
            let query = self.parse_query()?;
            self.expect_symbol(Symbol::RParen, "closing parenthesis after subquery")?;
            let alias = self.parse_alias()?;
            return Ok(TableRef::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.expect_ident("table name")?;
        let alias = self.parse_alias()?;
        Ok(TableRef::Named { name, alias })
    }

    fn parse_order_list(&mut self) -> Result<Vec<OrderItem>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            let expr = self.parse_expr()?;
            let desc = if self.eat_keyword("desc") {
                true
            } else {
                self.eat_keyword("asc");
                false
            };
            items.push(OrderItem { expr, desc });
            if !self.eat_symbol(Symbol::Comma) {
                break;
            }
        }
        Ok(items)
    }

    fn parse_limit(&mut self) -> Result<LimitClause, SyntaxError> {
        let first = self.parse_expr()?;
        if self.eat_keyword("offset") {
            let offset = self.parse_expr()?;
            Ok(LimitClause {
                count: first,
                offset: Some(offset),
            })
        } else if self.eat_symbol(Symbol::Comma) {
            // `LIMIT offset, count` (SQLite alternative form)
            let count = self.parse_expr()?;
            Ok(LimitClause {
                count,
                offset: Some(first),
            })
        } else {
            Ok(LimitClause {
                count: first,
                offset: None,
            })
        }
    }

    // ----- expressions ------------------------------------------------------

    fn parse_expr(&mut self) -> Result<Expr, SyntaxError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_and()?;
        while self.eat_keyword("or") {
            let right = self.parse_and()?;
            left = binary(left, BinaryOp::Or, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_not()?;
        while self.eat_keyword("and") {
            let right = self.parse_not()?;
            left = binary(left, BinaryOp::And, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek_keyword("not") && !matches!(self.peek_at(1), Token::Ident(s) if s.eq_ignore_ascii_case("exists"))
        {
            self.advance();
            let operand = self.parse_not()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_additive()?;
        loop {
            let op = if self.eat_symbol(Symbol::Eq) {
                Some(BinaryOp::Eq)
            } else if self.eat_symbol(Symbol::NotEq) {
                Some(BinaryOp::NotEq)
            } else if self.eat_symbol(Symbol::LtEq) {
                Some(BinaryOp::LtEq)
            } else if self.eat_symbol(Symbol::Lt) {
                Some(BinaryOp::Lt)
            } else if self.eat_symbol(Symbol::GtEq) {
                Some(BinaryOp::GtEq)
            } else if self.eat_symbol(Symbol::Gt) {
                Some(BinaryOp::Gt)
            } else {
                None
            };
            if let Some(op) = op {
                let right = self.parse_additive()?;
                left = binary(left, op, right);
                continue;
            }

            let negated = if self.peek_keyword("not")
                && matches!(self.peek_at(1), Token::Ident(s)
                    if s.eq_ignore_ascii_case("in") || s.eq_ignore_ascii_case("like") || s.eq_ignore_ascii_case("between"))
            {
                self.advance();
                true
            } else {
                false
            };

            if self.eat_keyword("in") {
                left = self.parse_in_tail(left, negated)?;
            } else if self.eat_keyword("like") {
                let pattern = self.parse_additive()?;
                left = Expr::Like {
                    operand: Box::new(left),
                    negated,
                    pattern: Box::new(pattern),
                };
            } else if self.eat_keyword("between") {
                let low = self.parse_additive()?;
                self.expect_keyword("and")?;
                let high = self.parse_additive()?;
                left = Expr::Between {
                    operand: Box::new(left),
                    negated,
                    low: Box::new(low),
                    high: Box::new(high),
                };
            } else if self.peek_keyword("is") {
                self.advance();
                let negated = self.eat_keyword("not");
                self.expect_keyword("null")?;
                left = Expr::IsNull {
                    operand: Box::new(left),
                    negated,
                };
            } else {
                if negated {
                    return Err(self.error("expected IN, LIKE, or BETWEEN after NOT"));
                }
                break;
            }
        }
        Ok(left)
    }

    fn parse_in_tail(&mut self, operand: Expr, negated: bool) -> Result<Expr, SyntaxError> {
        self.expect_symbol(Symbol::LParen, "opening parenthesis after IN")?;
        if self.peek_keyword("select") {
            let query = self.parse_query()?;
            self.expect_symbol(Symbol::RParen, "closing parenthesis after subquery")?;
            return Ok(Expr::InSubquery {
                operand: Box::new(operand),
                negated,
                query: Box::new(query),
            });
        }
        let mut items = vec![self.parse_expr()?];
        while self.eat_symbol(Symbol::Comma) {
            items.push(self.parse_expr()?);
        }
        self.expect_symbol(Symbol::RParen, "closing parenthesis after IN list")?;
        Ok(Expr::InList {
            operand: Box::new(operand),
            negated,
            items,
        })
    }

    fn parse_additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = if self.eat_symbol(Symbol::Plus) {
                BinaryOp::Add
            } else if self.eat_symbol(Symbol::Minus) {
                BinaryOp::Sub
            } else {
                break;
            };
            let right = self.parse_multiplicative()?;
            left = binary(left, op, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_concat()?;
        loop {
            let op = if self.eat_symbol(Symbol::Star) {
                BinaryOp::Mul
            } else if self.eat_symbol(Symbol::Slash) {
                BinaryOp::Div
            } else if self.eat_symbol(Symbol::Percent) {
                BinaryOp::Mod
            } else {
                break;
            };
            let right = self.parse_concat()?;
            left = binary(left, op, right);
        }
        Ok(left)
    }

    fn parse_concat(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.parse_unary()?;
        while self.eat_symbol(Symbol::Concat) {
            let right = self.parse_unary()?;
            left = binary(left, BinaryOp::Concat, right);
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_symbol(Symbol::Minus) {
            let operand = self.parse_unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            });
        }
        if self.eat_symbol(Symbol::Plus) {
            let operand = self.parse_unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Pos,
                operand: Box::new(operand),
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Token::Number(n) => {
                self.advance();
                Ok(Expr::Literal(Literal::Number(n)))
            }
            Token::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(s)))
            }
            Token::Symbol(Symbol::Star) => {
                self.advance();
                Ok(Expr::Wildcard)
            }
            Token::Symbol(Symbol::LParen) => {
                self.advance();
                if self.peek_keyword("select") {
                    let query = self.parse_query()?;
                    self.expect_symbol(Symbol::RParen, "closing parenthesis after subquery")?;
                    return Ok(Expr::Subquery(Box::new(query)));
                }
                let expr = self.parse_expr()?;
                self.expect_symbol(Symbol::RParen, "closing parenthesis")?;
                Ok(expr)
            }
            Token::Ident(word) => {
                if word.eq_ignore_ascii_case("null") {
                    self.advance();
                    return Ok(Expr::Literal(Literal::Null));
                }
                if word.eq_ignore_ascii_case("true") {
                    self.advance();
                    return Ok(Expr::Literal(Literal::Boolean(true)));
                }
                if word.eq_ignore_ascii_case("false") {
                    self.advance();
                    return Ok(Expr::Literal(Literal::Boolean(false)));
                }
                if word.eq_ignore_ascii_case("exists") || word.eq_ignore_ascii_case("not") {
                    let negated = self.eat_keyword("not");
                    self.expect_keyword("exists")?;
                    self.expect_symbol(Symbol::LParen, "opening parenthesis after EXISTS")?;
                    let query = self.parse_query()?;
                    self.expect_symbol(Symbol::RParen, "closing parenthesis after subquery")?;
                    return Ok(Expr::Exists {
                        negated,
                        query: Box::new(query),
                    });
                }
                if word.eq_ignore_ascii_case("case") {
                    return self.parse_case();
                }
                if word.eq_ignore_ascii_case("cast") {
                    return self.parse_cast();
                }
                if word.eq_ignore_ascii_case("select") {
                    return Err(self.error("subquery must be parenthesized"));
                }
                // function call?
                if matches!(self.peek_at(1), Token::Symbol(Symbol::LParen)) {
                    self.advance();
                    self.advance();
                    let distinct = self.eat_keyword("distinct");
                    let mut args = Vec::new();
                    if !self.peek_symbol(Symbol::RParen) {
                        if self.eat_symbol(Symbol::Star) {
                            args.push(Expr::Wildcard);
                        } else {
                            args.push(self.parse_expr()?);
                        }
                        while self.eat_symbol(Symbol::Comma) {
                            args.push(self.parse_expr()?);
                        }
                    }
                    self.expect_symbol(Symbol::RParen, "closing parenthesis after arguments")?;
                    return Ok(Expr::Function {
                        name: word,
                        distinct,
                        args,
                    });
                }
                // column reference, possibly qualified
                self.advance();
                if self.peek_symbol(Symbol::Dot) {
                    self.advance();
                    let column = self.expect_ident("column name after `.`")?;
                    return Ok(Expr::Column(ColumnRef {
                        table: Some(word),
                        column,
                    }));
                }
                Ok(Expr::Column(ColumnRef {
                    table: None,
                    column: word,
                }))
            }
            Token::Eof => Err(self.error("unexpected end of input")),
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }

    fn parse_case(&mut self) -> Result<Expr, SyntaxError> {
        self.expect_keyword("case")?;
        let operand = if !self.peek_keyword("when") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        let mut branches = Vec::new();
        while self.eat_keyword("when") {
            let cond = self.parse_expr()?;
            self.expect_keyword("then")?;
            let result = self.parse_expr()?;
            branches.push((cond, result));
        }
        if branches.is_empty() {
            return Err(self.error("CASE requires at least one WHEN branch"));
        }
        let else_result = if self.eat_keyword("else") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        self.expect_keyword("end")?;
        Ok(Expr::Case {
            operand,
            branches,
            else_result,
        })
    }

    fn parse_cast(&mut self) -> Result<Expr, SyntaxError> {
        self.expect_keyword("cast")?;
        self.expect_symbol(Symbol::LParen, "opening parenthesis after CAST")?;
        let operand = self.parse_expr()?;
        self.expect_keyword("as")?;
        let mut type_name = self.expect_ident("type name")?;
        // multi-word types like DOUBLE PRECISION
        while let Token::Ident(s) = self.peek() {
            if RESERVED.iter().any(|kw| s.eq_ignore_ascii_case(kw)) {
                break;
            }
            type_name.push(' ');
            type_name.push_str(&self.expect_ident("type name")?);
        }
        self.expect_symbol(Symbol::RParen, "closing parenthesis after CAST")?;
        Ok(Expr::Cast {
            operand: Box::new(operand),
            type_name,
        })
    }

    // ----- DDL --------------------------------------------------------------

    fn parse_create_table(&mut self) -> Result<CreateTable, SyntaxError> {
        self.expect_keyword("create")?;
        self.expect_keyword("table")?;
        if self.eat_keyword("if") {
            self.expect_keyword("not")?;
            self.expect_keyword("exists")?;
        }
        let name = self.expect_ident("table name")?;
        self.expect_symbol(Symbol::LParen, "opening parenthesis")?;
        let mut columns = Vec::new();
        let mut primary_key = Vec::new();
        let mut foreign_keys = Vec::new();
        loop {
            if self.peek_keyword("primary") {
                self.advance();
                self.expect_keyword("key")?;
                self.expect_symbol(Symbol::LParen, "opening parenthesis")?;
                primary_key = self.parse_ident_list()?;
                self.expect_symbol(Symbol::RParen, "closing parenthesis")?;
            } else if self.peek_keyword("foreign") {
                self.advance();
                self.expect_keyword("key")?;
                self.expect_symbol(Symbol::LParen, "opening parenthesis")?;
                let columns = self.parse_ident_list()?;
                self.expect_symbol(Symbol::RParen, "closing parenthesis")?;
                self.expect_keyword("references")?;
                let ref_table = self.expect_ident("referenced table")?;
                self.expect_symbol(Symbol::LParen, "opening parenthesis")?;
                let ref_columns = self.parse_ident_list()?;
                self.expect_symbol(Symbol::RParen, "closing parenthesis")?;
                foreign_keys.push(ForeignKeyClause {
                    columns,
                    ref_table,
                    ref_columns,
                });
            } else {
                let col_name = self.expect_ident("column name")?;
                let mut type_name = String::new();
                while let Token::Ident(s) = self.peek() {
                    if s.eq_ignore_ascii_case("primary")
                        || s.eq_ignore_ascii_case("not")
                        || s.eq_ignore_ascii_case("references")
                        || s.eq_ignore_ascii_case("default")
                        || s.eq_ignore_ascii_case("unique")
                    {
                        break;
                    }
                    if !type_name.is_empty() {
                        type_name.push(' ');
                    }
                    type_name.push_str(&self.expect_ident("type")?);
                }
                // optional (n) or (n, m) size suffix
                if self.eat_symbol(Symbol::LParen) {
                    while !self.eat_symbol(Symbol::RParen) {
                        self.advance();
                    }
                }
                let mut pk = false;
                loop {
                    if self.eat_keyword("primary") {
                        self.expect_keyword("key")?;
                        pk = true;
                    } else if self.eat_keyword("not") {
                        self.expect_keyword("null")?;
                    } else if self.eat_keyword("unique") {
                        // accepted, not tracked
                    } else if self.eat_keyword("default") {
                        self.advance();
                    } else {
                        break;
                    }
                }
                columns.push(ColumnDef {
                    name: col_name,
                    type_name,
                    primary_key: pk,
                });
            }
            if !self.eat_symbol(Symbol::Comma) {
                break;
            }
        }
        self.expect_symbol(Symbol::RParen, "closing parenthesis")?;
        for col in &mut columns {
            if primary_key.iter().any(|pk| pk.eq_ignore_ascii_case(&col.name)) {
                col.primary_key = true;
            }
        }
        let primary_key = columns
            .iter()
            .filter(|c| c.primary_key)
            .map(|c| c.name.clone())
            .collect();
        Ok(CreateTable {
            name,
            columns,
            primary_key,
            foreign_keys,
        })
    }

    fn parse_ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        let mut out = vec![self.expect_ident("identifier")?];
        while self.eat_symbol(Symbol::Comma) {
            out.push(self.expect_ident("identifier")?);
        }
        Ok(out)
    }
}

fn binary(left: Expr, op: BinaryOp, right: Expr) -> Expr {
    Expr::Binary {
        left: Box::new(left),
        op,
        right: Box::new(right),
    }
}
