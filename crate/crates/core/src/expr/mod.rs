//! Closed-form expressions in a single complex variable `z`.
//!
//! An [`Expr`] is an immutable tree. [`Expr::eval`] evaluates it in double
//! precision and reports [`EvalError::PoleOverflow`] instead of returning huge
//! values when a `℘`, `℘′` or negative-power subterm sits too close to a pole.
//! [`Expr::differentiate`] applies the usual rules plus
//! `d℘(u) = ℘′(u)·u′` and `d℘′(u) = 6℘(u)²·u′`; it never simplifies.
//!
//! The text form is an s-expression; see [`text`] for the grammar.

mod text;

pub use text::{parse_constant, ParseError};

use std::fmt;
use std::ops;

use num_complex::Complex64;
use thiserror::Error;

use crate::elliptic;

/// Default pole guard: distance below which a pole is considered hit.
pub const DEFAULT_POLE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// For `℘`/`℘′` nodes: minimum distance of the reduced argument from the
    /// nearest lattice point. For negative powers: minimum modulus of the base.
    pub pole_guard: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            pole_guard: DEFAULT_POLE_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("pole overflow near z = {at}")]
    PoleOverflow { at: Complex64 },
    #[error("non-finite value near z = {at}")]
    NonFinite { at: Complex64 },
    #[error("malformed expression: {0}")]
    Malformed(&'static str),
}

impl EvalError {
    /// True for the errors a sampler should answer by drawing a new point.
    pub fn is_resample(&self) -> bool {
        !matches!(self, EvalError::Malformed(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(Complex64),
    Variable,
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Integer power; the exponent must be nonzero.
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// Coefficients, lowest degree first.
    Polynomial(Vec<Complex64>),
    Wp(Box<Expr>),
    WpPrime(Box<Expr>),
    /// `Shift(e, c)` is `e` evaluated at `z + c`.
    Shift(Box<Expr>, Complex64),
}

impl Expr {
    pub fn z() -> Self {
        Expr::Variable
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Expr::Constant(c.into())
    }

    pub fn real(x: f64) -> Self {
        Expr::Constant(Complex64::new(x, 0.0))
    }

    /// `self^k`. Panics if `k == 0`, which the tree does not represent.
    pub fn pow(self, k: i32) -> Self {
        assert!(k != 0, "Pow exponent must be nonzero");
        Expr::Pow(Box::new(self), k)
    }

    pub fn recip(self) -> Self {
        self.pow(-1)
    }

    pub fn exp(self) -> Self {
        Expr::Exp(Box::new(self))
    }

    pub fn sin(self) -> Self {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        Expr::Cos(Box::new(self))
    }

    pub fn wp(self) -> Self {
        Expr::Wp(Box::new(self))
    }

    pub fn wp_prime(self) -> Self {
        Expr::WpPrime(Box::new(self))
    }

    pub fn shift(self, c: impl Into<Complex64>) -> Self {
        Expr::Shift(Box::new(self), c.into())
    }

    pub fn polynomial(coefficients: Vec<Complex64>) -> Self {
        Expr::Polynomial(coefficients)
    }

    /// Affine map `a·z + b` as a degree-one polynomial.
    pub fn affine(a: impl Into<Complex64>, b: impl Into<Complex64>) -> Self {
        Expr::Polynomial(vec![b.into(), a.into()])
    }

    /// Substitutes `inner` for the variable: the composition `self ∘ inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        match self {
            Expr::Variable => inner.clone(),
            Expr::Constant(c) => Expr::Constant(*c),
            Expr::Add(a, b) => Expr::Add(Box::new(a.compose(inner)), Box::new(b.compose(inner))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.compose(inner)), Box::new(b.compose(inner))),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.compose(inner)), *k),
            Expr::Exp(a) => a.compose(inner).exp(),
            Expr::Sin(a) => a.compose(inner).sin(),
            Expr::Cos(a) => a.compose(inner).cos(),
            Expr::Wp(a) => a.compose(inner).wp(),
            Expr::WpPrime(a) => a.compose(inner).wp_prime(),
            Expr::Polynomial(coeffs) => {
                // Horner form in the substituted argument.
                let mut acc: Option<Expr> = None;
                for c in coeffs.iter().rev() {
                    acc = Some(match acc {
                        None => Expr::Constant(*c),
                        Some(acc) => acc * inner.clone() + Expr::Constant(*c),
                    });
                }
                acc.unwrap_or(Expr::Constant(Complex64::new(0.0, 0.0)))
            }
            Expr::Shift(a, c) => a.compose(&(inner.clone() + Expr::Constant(*c))),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, EvalError> {
        self.eval_with(z, &EvalOptions::default())
    }

    pub fn eval_with(&self, z: Complex64, opts: &EvalOptions) -> Result<Complex64, EvalError> {
        let value = match self {
            Expr::Constant(c) => *c,
            Expr::Variable => z,
            Expr::Add(a, b) => a.eval_with(z, opts)? + b.eval_with(z, opts)?,
            Expr::Mul(a, b) => a.eval_with(z, opts)? * b.eval_with(z, opts)?,
            Expr::Pow(a, k) => {
                if *k == 0 {
                    return Err(EvalError::Malformed("Pow exponent 0"));
                }
                let base = a.eval_with(z, opts)?;
                if *k < 0 && base.norm() < opts.pole_guard {
                    return Err(EvalError::PoleOverflow { at: z });
                }
                base.powi(*k)
            }
            Expr::Exp(a) => a.eval_with(z, opts)?.exp(),
            Expr::Sin(a) => a.eval_with(z, opts)?.sin(),
            Expr::Cos(a) => a.eval_with(z, opts)?.cos(),
            Expr::Polynomial(coeffs) => coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c),
            Expr::Wp(a) => elliptic::wp_guarded(a.eval_with(z, opts)?, opts.pole_guard)
                .map_err(|_| EvalError::PoleOverflow { at: z })?,
            Expr::WpPrime(a) => {
                elliptic::wp_prime_guarded(a.eval_with(z, opts)?, opts.pole_guard)
                    .map_err(|_| EvalError::PoleOverflow { at: z })?
            }
            Expr::Shift(a, c) => a.eval_with(z + c, opts)?,
        };
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite { at: z })
        }
    }

    /// Exact derivative tree with respect to `z`.
    pub fn differentiate(&self) -> Expr {
        let zero = || Expr::real(0.0);
        match self {
            Expr::Constant(_) => zero(),
            Expr::Variable => Expr::real(1.0),
            Expr::Add(a, b) => a.differentiate() + b.differentiate(),
            Expr::Mul(a, b) => {
                a.differentiate() * (**b).clone() + (**a).clone() * b.differentiate()
            }
            Expr::Pow(a, k) => {
                let outer = if *k == 1 {
                    Expr::real(1.0)
                } else {
                    Expr::real(*k as f64) * (**a).clone().pow(k - 1)
                };
                outer * a.differentiate()
            }
            Expr::Exp(a) => self.clone() * a.differentiate(),
            Expr::Sin(a) => (**a).clone().cos() * a.differentiate(),
            Expr::Cos(a) => Expr::real(-1.0) * (**a).clone().sin() * a.differentiate(),
            Expr::Polynomial(coeffs) => {
                if coeffs.len() <= 1 {
                    zero()
                } else {
                    Expr::Polynomial(
                        coeffs
                            .iter()
                            .enumerate()
                            .skip(1)
                            .map(|(k, c)| c * k as f64)
                            .collect(),
                    )
                }
            }
            Expr::Wp(a) => (**a).clone().wp_prime() * a.differentiate(),
            // From (℘′)² = 4℘³ − 1: 2℘′℘″ = 12℘²℘′.
            Expr::WpPrime(a) => Expr::real(6.0) * (**a).clone().wp().pow(2) * a.differentiate(),
            Expr::Shift(a, c) => Expr::Shift(Box::new(a.differentiate()), *c),
        }
    }

    /// True when the tree contains no `Variable`, i.e. denotes a constant.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Constant(_) => true,
            Expr::Variable => false,
            Expr::Polynomial(c) => c.len() <= 1,
            Expr::Add(a, b) | Expr::Mul(a, b) => a.is_constant() && b.is_constant(),
            Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Wp(a)
            | Expr::WpPrime(a)
            | Expr::Shift(a, _) => a.is_constant(),
        }
    }

    /// Structurally entire: no `℘`, `℘′` or negative powers anywhere.
    pub fn is_entire(&self) -> bool {
        match self {
            Expr::Constant(_) | Expr::Variable | Expr::Polynomial(_) => true,
            Expr::Wp(a) | Expr::WpPrime(a) => a.is_constant() && self.eval(Complex64::new(0.0, 0.0)).is_ok(),
            Expr::Pow(a, k) => (*k > 0 || a.is_constant()) && a.is_entire(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.is_entire() && b.is_entire(),
            Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Shift(a, _) => a.is_entire(),
        }
    }

    /// `(a, b)` when the tree is structurally an affine map `a·z + b`.
    pub fn affine_coefficients(&self) -> Option<(Complex64, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Expr::Constant(c) => Some((zero, *c)),
            Expr::Variable => Some((Complex64::new(1.0, 0.0), zero)),
            Expr::Polynomial(c) => match c.len() {
                0 => Some((zero, zero)),
                1 => Some((zero, c[0])),
                2 => Some((c[1], c[0])),
                _ => {
                    if c[2..].iter().all(|x| *x == zero) {
                        Some((c[1], c[0]))
                    } else {
                        None
                    }
                }
            },
            Expr::Add(x, y) => {
                let (a1, b1) = x.affine_coefficients()?;
                let (a2, b2) = y.affine_coefficients()?;
                Some((a1 + a2, b1 + b2))
            }
            Expr::Mul(x, y) => {
                let (a1, b1) = x.affine_coefficients()?;
                let (a2, b2) = y.affine_coefficients()?;
                if a1 == zero {
                    Some((b1 * a2, b1 * b2))
                } else if a2 == zero {
                    Some((a1 * b2, b1 * b2))
                } else {
                    None
                }
            }
            Expr::Shift(x, c) => {
                let (a, b) = x.affine_coefficients()?;
                Some((a, a * c + b))
            }
            Expr::Pow(x, 1) => x.affine_coefficients(),
            _ if self.is_constant() => self.eval(zero).ok().map(|v| (zero, v)),
            _ => None,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Variable | Expr::Polynomial(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) => 1 + a.size() + b.size(),
            Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Wp(a)
            | Expr::WpPrime(a)
            | Expr::Shift(a, _) => 1 + a.size(),
        }
    }
}

impl From<Complex64> for Expr {
    fn from(c: Complex64) -> Self {
        Expr::Constant(c)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Self {
        Expr::real(x)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + Expr::real(-1.0) * rhs
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Expr) -> Expr {
        self * rhs.recip()
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::real(-1.0) * self
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_expr(self, f)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        text::parse(s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_at_origin() {
        assert_eq!(Expr::z().exp().eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn sin_at_half_pi() {
        let v = Expr::z().sin().eval(c(PI / 2.0, 0.0)).unwrap();
        assert!((v - 1.0).norm() < 1e-15);
    }

    #[test]
    fn pythagorean_identity() {
        let e = Expr::z().sin().pow(2) + Expr::z().cos().pow(2);
        for z in [c(0.3, -1.2), c(-2.0, 0.7), c(1.1, 1.9)] {
            let direct = z.sin() * z.sin() + z.cos() * z.cos();
            let v = e.eval(z).unwrap();
            assert!((v - direct).norm() < 1e-13);
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn chain_rule_exponential() {
        let alpha = c(0.5, -1.5);
        let d = (Expr::constant(alpha) * Expr::z()).exp().differentiate();
        let z = c(0.4, 0.9);
        let expected = alpha * (alpha * z).exp();
        assert!((d.eval(z).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn wp_derivative_is_wp_prime() {
        let z = c(0.7, 0.4);
        let d = Expr::z().wp().differentiate().eval(z).unwrap();
        let direct = Expr::z().wp_prime().eval(z).unwrap();
        assert!((d - direct).norm() <= 1e-15 * direct.norm());
    }

    #[test]
    fn polynomial_is_lowest_degree_first() {
        let p = Expr::polynomial(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(p.eval(c(2.0, 0.0)).unwrap(), c(17.0, 0.0));
        assert_eq!(p.differentiate().eval(c(2.0, 0.0)).unwrap(), c(14.0, 0.0));
    }

    #[test]
    fn negative_power_near_zero_is_pole_overflow() {
        let e = Expr::z().recip();
        assert!(matches!(
            e.eval(c(1e-9, 0.0)),
            Err(EvalError::PoleOverflow { .. })
        ));
        assert!(e.eval(c(1e-3, 0.0)).is_ok());
    }

    #[test]
    fn wp_at_lattice_point_is_pole_overflow() {
        let l = elliptic::equianharmonic_lattice();
        let e = Expr::z().wp();
        assert!(matches!(e.eval(l.omega1), Err(EvalError::PoleOverflow { .. })));
        assert!(matches!(
            Expr::z().wp_prime().eval(l.omega2),
            Err(EvalError::PoleOverflow { .. })
        ));
    }

    #[test]
    fn zero_exponent_is_malformed() {
        let e = Expr::Pow(Box::new(Expr::z()), 0);
        assert_eq!(e.eval(c(1.0, 0.0)), Err(EvalError::Malformed("Pow exponent 0")));
    }

    #[test]
    fn overflow_is_reported_not_returned() {
        let e = Expr::z().exp();
        assert!(matches!(e.eval(c(1000.0, 0.0)), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn shift_evaluates_at_offset() {
        let e = Expr::z().sin().shift(c(1.0, 0.5));
        let z = c(0.2, 0.1);
        assert_eq!(e.eval(z).unwrap(), (z + c(1.0, 0.5)).sin());
    }

    #[test]
    fn compose_matches_nested_evaluation() {
        let outer = Expr::z().sin() * Expr::z().shift(c(0.5, 0.0)).exp()
            + Expr::polynomial(vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)]);
        let inner = Expr::z().exp() + Expr::z();
        let composed = outer.compose(&inner);
        for z in [c(0.3, 0.2), c(-1.0, 0.5)] {
            let w = inner.eval(z).unwrap();
            let a = composed.eval(z).unwrap();
            let b = outer.eval(w).unwrap();
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn affine_recognition() {
        let e = Expr::real(2.0) * Expr::z() + Expr::constant(c(0.0, 1.0));
        assert_eq!(e.affine_coefficients(), Some((c(2.0, 0.0), c(0.0, 1.0))));
        assert_eq!(Expr::z().shift(c(3.0, 0.0)).affine_coefficients(), Some((c(1.0, 0.0), c(3.0, 0.0))));
        assert_eq!(Expr::z().exp().affine_coefficients(), None);
        assert_eq!((Expr::z() * Expr::z()).affine_coefficients(), None);
    }

    #[test]
    fn entire_detection() {
        assert!(Expr::z().sin().exp().is_entire());
        assert!(!Expr::z().wp().is_entire());
        assert!(!Expr::z().recip().is_entire());
        assert!(Expr::real(2.0).recip().is_entire());
    }
}
