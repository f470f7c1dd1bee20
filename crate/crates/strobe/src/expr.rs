//! Tiny expression grammar for user-defined potentials and field
//! intensities: +, -, *, /, ^, sin, cos, exp, numeric constants, pi, and
//! coordinates x1, x2, x3.
//!
//! Parsed trees evaluate against the spatial coordinates only; gradients
//! of expression-defined quantities fall back to finite differences.

use std::fmt;

use crate::error::{Error, Result};
use crate::fields::ScalarField;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => {
                if *i >= x.len() {
                    return Err(Error::usage(format!(
                        "expression references x{} but the point has {} coordinates",
                        i + 1,
                        x.len()
                    )));
                }
                x[*i]
            }
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => a.eval(x)? / b.eval(x)?,
            Expr::Pow(a, b) => a.eval(x)?.powf(b.eval(x)?),
            Expr::Sin(a) => a.eval(x)?.sin(),
            Expr::Cos(a) => a.eval(x)?.cos(),
            Expr::Exp(a) => a.eval(x)?.exp(),
        })
    }

    /// Largest coordinate index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Coord(i) => i + 1,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    /// Wrap as a scalar field on `dim` spatial coordinates.
    pub fn into_scalar_field(self, label: &str, dim: usize) -> Result<ScalarField> {
        if self.arity() > dim {
            return Err(Error::usage(format!(
                "expression '{label}' needs {} coordinates, problem has {dim}",
                self.arity()
            )));
        }
        Ok(ScalarField::new(label, dim, move |x| self.eval(x)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::usage(format!("bad number '{text}' in expression")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::usage(format!("unexpected character '{other}' in expression")))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.bump() {
            Some(found) if found == t => Ok(()),
            other => Err(Error::usage(format!("expected {t:?}, found {other:?}"))),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    // factor := '-' factor | atom ('^' factor)?   (right associative,
    // unary minus binds looser than '^')
    fn factor(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(Box::new(arg)),
                        "cos" => Expr::Cos(Box::new(arg)),
                        _ => Expr::Exp(Box::new(arg)),
                    })
                }
                "x1" => Ok(Expr::Coord(0)),
                "x2" => Ok(Expr::Coord(1)),
                "x3" => Ok(Expr::Coord(2)),
                other => Err(Error::usage(format!(
                    "unknown identifier '{other}' (allowed: x1, x2, x3, pi, sin, cos, exp)"
                ))),
            },
            other => Err(Error::usage(format!("unexpected token {other:?} in expression"))),
        }
    }
}

/// Parse an expression over the spatial coordinates.
pub fn parse(src: &str) -> Result<Expr> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(Error::usage("empty expression"));
    }
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::usage(format!(
            "trailing tokens in expression after position {}",
            p.pos
        )));
    }
    Ok(e)
}
