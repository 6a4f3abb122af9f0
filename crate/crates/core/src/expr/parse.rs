//! Recursive-descent parser.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          exponent must fold to an integer
//! atom    := integer | ident | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `1/2` is an ordinary quotient of integer literals; constant folding
//! turns it into an exact rational.

use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Int(v) => format!("integer {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { offset, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value = src[start..i]
                    .parse::<i64>()
                    .map_err(|_| syntax(start, "integer literal out of range"))?;
                out.push((Tok::Int(value), start));
                continue;
            }
            b'a'..=b'z' => {
                while i < bytes.len() && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit())
                {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => syntax(self.offset(), format!("unexpected {}", describe(t))),
            None => syntax(self.end, "unexpected end of input"),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = lhs.add(&self.product()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = lhs.sub(&self.product()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = lhs.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = lhs.div(&self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        let exponent = self.unary()?;
        let n = exponent
            .as_const()
            .filter(|c| c.is_integer())
            .and_then(|c| i32::try_from(*c.numer()).ok())
            .ok_or_else(|| syntax(at, "exponent must be an integer constant"))?;
        Ok(base.powi(n))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Int(v)) => Ok(Expr::int(v)),
            Some(Tok::LParen) => {
                let inner = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.sum()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::apply(func, &arg));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Expr::var(i)),
                    None => Err(ParseError::UnknownIdentifier { offset: at, name }),
                }
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected())
            }
            None => Err(self.unexpected()),
        }
    }
}

/// Parses `source` over the declared variable names; variable `i` of the
/// result refers to `variables[i]`.
pub fn parse_expression(source: &str, variables: &[&str]) -> Result<Expr, ParseError> {
    let toks = tokenize(source)?;
    let mut parser = Parser { toks, pos: 0, end: source.len(), vars: variables };
    let e = parser.sum()?;
    if parser.pos < parser.toks.len() {
        return Err(parser.unexpected());
    }
    Ok(e)
}
