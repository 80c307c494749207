//! Recursive-descent parser for the infix expression language.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('**' unary)?          (right-associative)
//! atom   := number | 'pi' | name | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `**` binds tighter than unary minus (`-x**2` is `-(x**2)`), and a unary
//! minus applied directly to a numeric literal folds into a negative
//! constant. `^` is accepted as an alias for `**`. Numeric literals may use
//! scientific notation.

use super::{BinaryOp, Expr, UnaryOp};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Parse failure, with a byte offset into the input text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("expression uses {used} variables but {declared} were declared")]
    ArityMismatch { used: usize, declared: usize },
    #[error("invalid variable declaration: {0}")]
    BadDeclaration(String),
}

impl ParseError {
    fn syntax(position: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    DoubleStar,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Number(v) => write!(f, "number `{v}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::DoubleStar => write!(f, "`**`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
        }
    }
}

fn function_op(name: &str) -> Option<UnaryOp> {
    Some(match name {
        "neg" => UnaryOp::Neg,
        "exp" => UnaryOp::Exp,
        "log" | "ln" => UnaryOp::Log,
        "sqrt" => UnaryOp::Sqrt,
        "sin" => UnaryOp::Sin,
        "cos" => UnaryOp::Cos,
        "tan" => UnaryOp::Tan,
        "asin" | "arcsin" => UnaryOp::Asin,
        "acos" | "arccos" => UnaryOp::Acos,
        "atan" | "arctan" => UnaryOp::Atan,
        "tanh" => UnaryOp::Tanh,
        "abs" => UnaryOp::Abs,
        "square" => UnaryOp::Square,
        _ => return None,
    })
}

fn is_reserved(name: &str) -> bool {
    name == "pi" || function_op(name).is_some()
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                if bytes.get(i + 1) == Some(&b'*') {
                    toks.push((Tok::DoubleStar, i));
                    i += 2;
                } else {
                    toks.push((Tok::Star, i));
                    i += 1;
                }
            }
            b'^' => {
                toks.push((Tok::DoubleStar, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| ParseError::syntax(start, format!("invalid number `{lit}`")))?;
                toks.push((Tok::Number(v), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(ParseError::syntax(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    names: &'a [(String, usize)],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            Some((t, p)) => Err(ParseError::syntax(p, format!("expected {want}, found {t}"))),
            None => Err(ParseError::syntax(self.end, format!("expected {want}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            // A minus directly on a numeric literal is a negative constant,
            // unless `**` follows (`-2**2` is `-(2**2)`).
            if let Some(Tok::Number(v)) = self.peek2() {
                let v = *v;
                if self.toks.get(self.pos + 2).map(|(t, _)| t) != Some(&Tok::DoubleStar) {
                    self.bump();
                    self.bump();
                    return Ok(Expr::Constant(-v));
                }
            }
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::DoubleStar) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some((Tok::Number(v), _)) => Ok(Expr::Constant(v)),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some((Tok::Ident(name), p)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let op = function_op(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        position: p,
                        name: name.clone(),
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::unary(op, arg));
                }
                if name == "pi" {
                    return Ok(Expr::Constant(std::f64::consts::PI));
                }
                match self.names.iter().find(|(n, _)| *n == name) {
                    Some((n, idx)) => Ok(Expr::Variable {
                        index: *idx,
                        name: Arc::from(n.as_str()),
                    }),
                    None => Err(ParseError::UnknownIdentifier { position: p, name }),
                }
            }
            Some((t, p)) => Err(ParseError::syntax(p, format!("expected an operand, found {t}"))),
            None => Err(ParseError::syntax(self.end, "expected an operand, found end of input")),
        }
    }
}

/// Parses `text` over the declared variable names; `variable_names[i]` maps
/// to variable index `i`. Unknown identifiers are rejected.
pub fn parse_expression<S: AsRef<str>>(text: &str, variable_names: &[S]) -> Result<Expr, ParseError> {
    let mut names: Vec<(String, usize)> = Vec::with_capacity(variable_names.len());
    for (i, n) in variable_names.iter().enumerate() {
        let n = n.as_ref();
        if is_reserved(n) {
            return Err(ParseError::BadDeclaration(format!(
                "`{n}` is a reserved name"
            )));
        }
        if names.iter().any(|(m, _)| m == n) {
            return Err(ParseError::BadDeclaration(format!(
                "duplicate variable name `{n}`"
            )));
        }
        names.push((n.to_string(), i));
    }
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
        names: &names,
    };
    let e = parser.expr()?;
    if let Some((t, p)) = parser.bump() {
        return Err(ParseError::syntax(p, format!("unexpected trailing {t}")));
    }
    Ok(e)
}

/// Lists the variable names appearing in `text` in order of first
/// appearance, skipping `pi` and function names. Used to ingest equation
/// files that declare bounds positionally rather than by name.
pub fn discover_variables(text: &str) -> Result<Vec<String>, ParseError> {
    let toks = tokenize(text)?;
    let mut out: Vec<String> = Vec::new();
    for (i, (tok, _)) in toks.iter().enumerate() {
        if let Tok::Ident(name) = tok {
            let is_call = matches!(toks.get(i + 1), Some((Tok::LParen, _)));
            if name == "pi" || (is_call && function_op(name).is_some()) {
                continue;
            }
            if !out.iter().any(|n| n == name) {
                out.push(name.clone());
            }
        }
    }
    Ok(out)
}
