//! Recursive-descent parser.
//!
//! ```text
//! expr   = term {("+"|"-") term} ;
//! term   = factor {("*"|"/") factor} ;
//! factor = ["-"] power ;
//! power  = atom ["^" ["-"] integer] ;
//! atom   = number | ident | ident "(" expr ")" | "(" expr ")" ;
//! ```

use super::ast::{Expr, Func};
use super::lexer::{Position, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at {pos}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub pos: Position,
    pub expected: Vec<String>,
    pub found: String,
}

/// Token cursor shared with the scenario-file parser.
pub struct TokenStream<'a> {
    tokens: &'a [Token],
    idx: usize,
    end: Position,
}

impl<'a> TokenStream<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        let end = tokens
            .last()
            .map(|t| Position {
                line: t.pos.line,
                column: t.pos.column + 1,
                offset: t.pos.offset + 1,
            })
            .unwrap_or(Position {
                line: 1,
                column: 1,
                offset: 0,
            });
        Self { tokens, idx: 0, end }
    }

    pub fn peek(&self) -> Option<&'a TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    pub fn peek_at(&self, ahead: usize) -> Option<&'a TokenKind> {
        self.tokens.get(self.idx + ahead).map(|t| &t.kind)
    }

    pub fn position(&self) -> Position {
        self.tokens.get(self.idx).map(|t| t.pos).unwrap_or(self.end)
    }

    pub fn advance(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            pos: self.position(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|k| k.describe())
                .unwrap_or_else(|| "end of input".to_string()),
        }
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<(), ParseError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    pub fn ident(&mut self) -> Option<&'a str> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                self.idx += 1;
                Some(s.as_str())
            }
            _ => None,
        }
    }

    pub fn peek_ident(&self) -> Option<&'a str> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => Some(s.as_str()),
            _ => None,
        }
    }
}

/// Parses a complete token sequence as one expression.
pub fn parse(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut ts = TokenStream::new(tokens);
    let e = parse_expr(&mut ts)?;
    if !ts.at_end() {
        return Err(ts.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Parses the longest expression starting at the cursor.
pub fn parse_expr(ts: &mut TokenStream<'_>) -> Result<Expr, ParseError> {
    let mut lhs = parse_term(ts)?;
    loop {
        if ts.eat(&TokenKind::Plus) {
            lhs = Expr::Add(Box::new(lhs), Box::new(parse_term(ts)?));
        } else if ts.eat(&TokenKind::Minus) {
            lhs = Expr::Sub(Box::new(lhs), Box::new(parse_term(ts)?));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_term(ts: &mut TokenStream<'_>) -> Result<Expr, ParseError> {
    let mut lhs = parse_factor(ts)?;
    loop {
        if ts.eat(&TokenKind::Star) {
            lhs = Expr::Mul(Box::new(lhs), Box::new(parse_factor(ts)?));
        } else if ts.eat(&TokenKind::Slash) {
            lhs = Expr::Div(Box::new(lhs), Box::new(parse_factor(ts)?));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_factor(ts: &mut TokenStream<'_>) -> Result<Expr, ParseError> {
    if ts.eat(&TokenKind::Minus) {
        Ok(Expr::Neg(Box::new(parse_power(ts)?)))
    } else {
        parse_power(ts)
    }
}

fn parse_power(ts: &mut TokenStream<'_>) -> Result<Expr, ParseError> {
    let base = parse_atom(ts)?;
    if !ts.eat(&TokenKind::Caret) {
        return Ok(base);
    }
    let negative = ts.eat(&TokenKind::Minus);
    match ts.peek() {
        Some(TokenKind::Integer(n)) if *n <= i32::MAX as i64 => {
            let n = *n as i32;
            ts.advance();
            Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
        }
        _ => Err(ts.error(&["integer exponent"])),
    }
}

fn parse_atom(ts: &mut TokenStream<'_>) -> Result<Expr, ParseError> {
    match ts.peek() {
        Some(TokenKind::Number(v)) => {
            let v = *v;
            ts.advance();
            Ok(Expr::Const(v))
        }
        Some(TokenKind::Integer(v)) => {
            let v = *v as f64;
            ts.advance();
            Ok(Expr::Const(v))
        }
        Some(TokenKind::Ident(name)) => {
            if ts.peek_at(1) == Some(&TokenKind::LParen) {
                let fpos = ts.position();
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError {
                        pos: fpos,
                        expected: vec!["one of sin, cos, exp, log, sqrt".into()],
                        found: format!("function '{name}'"),
                    });
                };
                ts.advance();
                ts.advance();
                let arg = parse_expr(ts)?;
                ts.expect(&TokenKind::RParen, "')'")?;
                Ok(Expr::Call(func, Box::new(arg)))
            } else {
                ts.advance();
                Ok(Expr::Var(name.clone()))
            }
        }
        Some(TokenKind::LParen) => {
            ts.advance();
            let e = parse_expr(ts)?;
            ts.expect(&TokenKind::RParen, "')'")?;
            Ok(e)
        }
        _ => Err(ts.error(&["expression"])),
    }
}
