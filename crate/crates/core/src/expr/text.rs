//! S-expression text form of [`Expr`].
//!
//! ```text
//! expr   := "z" | real | "pi" | "i" | "(" form ")"
//! form   := "c" real real              constant re + i·im
//!         | "+" expr expr+             sum (left fold)
//!         | "*" expr expr+             product (left fold)
//!         | "-" expr [expr]            negation / difference
//!         | "/" expr expr              quotient, a·b⁻¹
//!         | "^" expr int               nonzero integer power
//!         | "exp" expr | "sin" expr | "cos" expr
//!         | "wp" expr | "wpd" expr     ℘ and ℘′
//!         | "poly" const*              coefficients, lowest degree first
//!         | "shift" expr const         expr evaluated at z + const
//! const  := any expr without z
//! ```
//!
//! Printing emits only the canonical forms (`c + * ^ exp sin cos wp wpd poly
//! shift`) with shortest round-trip float literals, so
//! `parse(print(e)) == e` for every tree with finite constants.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("unknown form `{0}`")]
    UnknownForm(String),
    #[error("bad number `{0}`")]
    BadNumber(String),
    #[error("`{0}` expects {1}")]
    Arity(String, &'static str),
    #[error("expected a constant expression, found one depending on z")]
    NotConstant,
    #[error("trailing input after expression")]
    Trailing,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(s: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut atom = String::new();
    let flush = |atom: &mut String, tokens: &mut Vec<Token>| {
        if !atom.is_empty() {
            tokens.push(Token::Atom(std::mem::take(atom)));
        }
    };
    for ch in s.chars() {
        match ch {
            '(' => {
                flush(&mut atom, &mut tokens);
                tokens.push(Token::Open);
            }
            ')' => {
                flush(&mut atom, &mut tokens);
                tokens.push(Token::Close);
            }
            c if c.is_whitespace() => flush(&mut atom, &mut tokens),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut tokens);
    tokens
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn peek_close(&self) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token::Close))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.next()? {
            Token::Atom(a) => atom(&a),
            Token::Close => Err(ParseError::Unexpected(")".into())),
            Token::Open => {
                let head = match self.next()? {
                    Token::Atom(a) => a,
                    Token::Open => return Err(ParseError::Unexpected("(".into())),
                    Token::Close => return Err(ParseError::Unexpected(")".into())),
                };
                let e = self.form(&head)?;
                match self.next()? {
                    Token::Close => Ok(e),
                    t => Err(ParseError::Unexpected(describe(&t))),
                }
            }
        }
    }

    fn rest(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        while !self.peek_close() {
            if self.pos >= self.tokens.len() {
                return Err(ParseError::UnexpectedEnd);
            }
            args.push(self.expr()?);
        }
        Ok(args)
    }

    fn real_atom(&mut self) -> Result<f64, ParseError> {
        match self.next()? {
            Token::Atom(a) => number(&a),
            t => Err(ParseError::Unexpected(describe(&t))),
        }
    }

    fn form(&mut self, head: &str) -> Result<Expr, ParseError> {
        let arity = |n: &'static str| ParseError::Arity(head.to_string(), n);
        match head {
            "c" => {
                let re = self.real_atom()?;
                let im = self.real_atom()?;
                Ok(Expr::Constant(Complex64::new(re, im)))
            }
            "^" => {
                let base = self.expr()?;
                let k = match self.next()? {
                    Token::Atom(a) => a.parse::<i32>().map_err(|_| ParseError::BadNumber(a))?,
                    t => return Err(ParseError::Unexpected(describe(&t))),
                };
                if k == 0 {
                    return Err(arity("a nonzero integer exponent"));
                }
                Ok(base.pow(k))
            }
            "poly" => {
                let coeffs = self
                    .rest()?
                    .iter()
                    .map(constant_value)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Expr::Polynomial(coeffs))
            }
            "shift" => {
                let e = self.expr()?;
                let c = constant_value(&self.expr()?)?;
                Ok(e.shift(c))
            }
            "+" | "*" => {
                let args = self.rest()?;
                if args.len() < 2 {
                    return Err(arity("at least two arguments"));
                }
                let mut it = args.into_iter();
                let first = it.next().unwrap();
                Ok(it.fold(first, |acc, e| if head == "+" { acc + e } else { acc * e }))
            }
            "-" => {
                let mut args = self.rest()?;
                match args.len() {
                    1 => Ok(-args.pop().unwrap()),
                    2 => {
                        let b = args.pop().unwrap();
                        Ok(args.pop().unwrap() - b)
                    }
                    _ => Err(arity("one or two arguments")),
                }
            }
            "/" => {
                let mut args = self.rest()?;
                if args.len() != 2 {
                    return Err(arity("two arguments"));
                }
                let b = args.pop().unwrap();
                Ok(args.pop().unwrap() / b)
            }
            "exp" | "sin" | "cos" | "wp" | "wpd" => {
                let a = self.expr()?;
                Ok(match head {
                    "exp" => a.exp(),
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "wp" => a.wp(),
                    _ => a.wp_prime(),
                })
            }
            other => Err(ParseError::UnknownForm(other.to_string())),
        }
    }
}

fn describe(t: &Token) -> String {
    match t {
        Token::Open => "(".into(),
        Token::Close => ")".into(),
        Token::Atom(a) => a.clone(),
    }
}

fn number(a: &str) -> Result<f64, ParseError> {
    let x: f64 = a.parse().map_err(|_| ParseError::BadNumber(a.to_string()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ParseError::BadNumber(a.to_string()))
    }
}

fn atom(a: &str) -> Result<Expr, ParseError> {
    match a {
        "z" => Ok(Expr::Variable),
        "pi" => Ok(Expr::real(std::f64::consts::PI)),
        "i" => Ok(Expr::Constant(Complex64::new(0.0, 1.0))),
        _ => number(a).map(Expr::real),
    }
}

fn constant_value(e: &Expr) -> Result<Complex64, ParseError> {
    if !e.is_constant() {
        return Err(ParseError::NotConstant);
    }
    match e {
        Expr::Constant(c) => Ok(*c),
        _ => e
            .eval(Complex64::new(0.0, 0.0))
            .map_err(|_| ParseError::NotConstant),
    }
}

pub(super) fn parse(s: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        tokens: tokenize(s),
        pos: 0,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ParseError::Trailing);
    }
    Ok(e)
}

/// Parses a constant expression (no `z`) and returns its value.
pub fn parse_constant(s: &str) -> Result<Complex64, ParseError> {
    constant_value(&parse(s)?)
}

fn write_complex(c: &Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 && c.im.is_sign_positive() {
        write!(f, "{:?}", c.re)
    } else {
        write!(f, "(c {:?} {:?})", c.re, c.im)
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Constant(c) => write_complex(c, f),
        Expr::Variable => write!(f, "z"),
        Expr::Add(a, b) => write!(f, "(+ {a} {b})"),
        Expr::Mul(a, b) => write!(f, "(* {a} {b})"),
        Expr::Pow(a, k) => write!(f, "(^ {a} {k})"),
        Expr::Exp(a) => write!(f, "(exp {a})"),
        Expr::Sin(a) => write!(f, "(sin {a})"),
        Expr::Cos(a) => write!(f, "(cos {a})"),
        Expr::Wp(a) => write!(f, "(wp {a})"),
        Expr::WpPrime(a) => write!(f, "(wpd {a})"),
        Expr::Polynomial(coeffs) => {
            write!(f, "(poly")?;
            for c in coeffs {
                write!(f, " ")?;
                write_complex(c, f)?;
            }
            write!(f, ")")
        }
        Expr::Shift(a, c) => {
            write!(f, "(shift {a} ")?;
            write_complex(c, f)?;
            write!(f, ")")
        }
    }
}
