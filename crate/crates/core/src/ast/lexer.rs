//! Tokenizer shared by the query and DDL parsers.

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    /// Bare or quoted identifier; quoting style is erased.
    Ident(String),
    Number(String),
    Str(String),
    Symbol(Symbol),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Concat,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    pub pos: usize,
}

pub fn tokenize(input: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '\'' => {
                // Single-quoted string, '' escapes a quote.
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(err(start, "unterminated string literal"));
                    }
                    if bytes[i] == b'\'' {
                        if i + 1 < bytes.len() && bytes[i + 1] == b'\'' {
                            s.push('\'');
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    } else {
                        let ch = next_char(input, i);
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
                out.push(spanned(Token::Str(s), start));
            }
            '"' | '`' => {
                let close = c;
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(err(start, "unterminated quoted identifier"));
                    }
                    let ch = next_char(input, i);
                    if ch == close {
                        i += 1;
                        break;
                    }
                    s.push(ch);
                    i += ch.len_utf8();
                }
                out.push(spanned(Token::Ident(s), start));
            }
            '[' => {
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(err(start, "unterminated bracketed identifier"));
                    }
                    let ch = next_char(input, i);
                    if ch == ']' {
                        i += 1;
                        break;
                    }
                    s.push(ch);
                    i += ch.len_utf8();
                }
                out.push(spanned(Token::Ident(s), start));
            }
            '(' => push_sym(&mut out, Symbol::LParen, &mut i, start),
            ')' => push_sym(&mut out, Symbol::RParen, &mut i, start),
            ',' => push_sym(&mut out, Symbol::Comma, &mut i, start),
            ';' => push_sym(&mut out, Symbol::Semicolon, &mut i, start),
            '*' => push_sym(&mut out, Symbol::Star, &mut i, start),
            '+' => push_sym(&mut out, Symbol::Plus, &mut i, start),
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'-' {
                    // line comment
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                } else {
                    push_sym(&mut out, Symbol::Minus, &mut i, start);
                }
            }
            '/' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'*' {
                    let end = input[i + 2..]
                        .find("*/")
                        .ok_or_else(|| err(start, "unterminated block comment"))?;
                    i += 2 + end + 2;
                } else {
                    push_sym(&mut out, Symbol::Slash, &mut i, start);
                }
            }
            '%' => push_sym(&mut out, Symbol::Percent, &mut i, start),
            '=' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                }
                out.push(spanned(Token::Symbol(Symbol::Eq), start));
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    i += 2;
                    out.push(spanned(Token::Symbol(Symbol::NotEq), start));
                } else {
                    return Err(err(start, "unexpected character `!`"));
                }
            }
            '<' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    out.push(spanned(Token::Symbol(Symbol::LtEq), start));
                } else if i < bytes.len() && bytes[i] == b'>' {
                    i += 1;
                    out.push(spanned(Token::Symbol(Symbol::NotEq), start));
                } else {
                    out.push(spanned(Token::Symbol(Symbol::Lt), start));
                }
            }
            '>' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    out.push(spanned(Token::Symbol(Symbol::GtEq), start));
                } else {
                    out.push(spanned(Token::Symbol(Symbol::Gt), start));
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    i += 2;
                    out.push(spanned(Token::Symbol(Symbol::Concat), start));
                } else {
                    return Err(err(start, "unexpected character `|`"));
                }
            }
            '.' => {
                if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    let (num, next) = lex_number(input, i);
                    out.push(spanned(Token::Number(num), start));
                    i = next;
                } else {
                    push_sym(&mut out, Symbol::Dot, &mut i, start);
                }
            }
            _ if c.is_ascii_digit() => {
                let (num, next) = lex_number(input, i);
                out.push(spanned(Token::Number(num), start));
                i = next;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() {
                    let ch = bytes[j] as char;
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                out.push(spanned(Token::Ident(input[i..j].to_string()), start));
                i = j;
            }
            _ => return Err(err(start, &format!("unexpected character `{c}`"))),
        }
    }
    out.push(spanned(Token::Eof, input.len()));
    Ok(out)
}

fn lex_number(input: &str, start: usize) -> (String, usize) {
    let bytes = input.as_bytes();
    let mut i = start;
    let mut seen_dot = false;
    let mut seen_exp = false;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_digit() {
            i += 1;
        } else if c == '.' && !seen_dot && !seen_exp {
            seen_dot = true;
            i += 1;
        } else if (c == 'e' || c == 'E') && !seen_exp && i + 1 < bytes.len() {
            let next = bytes[i + 1] as char;
            if next.is_ascii_digit() || next == '+' || next == '-' {
                seen_exp = true;
                i += if next.is_ascii_digit() { 1 } else { 2 };
            } else {
                break;
            }
        } else {
            break;
        }
    }
    (input[start..i].to_string(), i)
}

fn next_char(input: &str, i: usize) -> char {
    input[i..].chars().next().expect("in-bounds index")
}

fn push_sym(out: &mut Vec<Spanned>, sym: Symbol, i: &mut usize, start: usize) {
    out.push(spanned(Token::Symbol(sym), start));
    *i += 1;
}

fn spanned(token: Token, pos: usize) -> Spanned {
    Spanned { token, pos }
}

fn err(position: usize, message: &str) -> SyntaxError {
    SyntaxError {
        position,
        message: message.to_string(),
    }
}
