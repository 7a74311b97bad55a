//! Constructors for the explicit solution families.
//!
//! Each [`FamilyKind`] maps to a closed-form [`Expr`] for `f` and the equation
//! it solves ([`Mode`]). Scalar parameters are validated at construction:
//! cube roots of unity, admissible scale factors `d`, and the period
//! conditions `e^{αc} = 1` the examples rely on.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalOptions, Expr};

/// `√3/3`, the coefficient of `℘′` in the cubic parametrization.
pub const S: f64 = 0.577_350_269_189_625_8;

const SCALAR_TOL: f64 = 1e-12;
const ANTI_PERIODIC_SAMPLES: usize = 200;
const ANTI_PERIODIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `f = 2ω/(1+ω²)`, `g = (1−ω²)/(1+ω²)`, `f² + g² = 1`; `h` holds `ω`.
    Prop1A,
    /// `f = (1 + s℘′(h))/(2℘(h))`, `g = η(1 − s℘′(h))/(2℘(h))`, `f³ + g³ = 1`.
    Prop1B,
    /// `f = e^{αz+β}/(α+1) + a·e^{−z}`, `f + f′ = e^{αz+β}`, `α ≠ −1`.
    Thm2A,
    /// `f = z·e^{−z+β} + a·e^{−z}`, the `α = −1` branch.
    #[serde(rename = "Thm2A_degenerate")]
    Thm2ADegenerate,
    /// `f = e^{β/2}·sin(z + b)`, `f² + (f′)² = e^β`.
    #[serde(rename = "Thm2B_trig")]
    Thm2BTrig,
    /// `f = d·e^{(αz+β)/n}` with `dⁿ(1 + (α/n)ⁿ) = 1`.
    #[serde(rename = "Thm2_scaledExp")]
    Thm2ScaledExp,
    /// `f = d·e^{(αz+β)/n}` with `dⁿ(1 + e^{αc}) = 1`, solving the difference equation.
    DiffTrivial,
    /// Both forms of the cubic parametrization times `e^{(αz+β)/3}`.
    Eq5Pair,
    /// `Eq5Pair`'s first form with `h = e^z`, `c = πi`.
    Example4,
    /// `e^{(αz+β)/2}·sin(z)`, `c = π/2`.
    Example5a,
    /// `e^{(αz+β)/2}·sin(e^{4iz} + z)`, `c = π/2`.
    Example5b,
    /// `e^z + e^{αz+β}/2`, `c = iπ`.
    Example6a,
    /// `e^{e^{2z}+z} + e^{αz+β}/2`, `c = iπ`.
    Example6b,
    /// `δ + d·e^{αz+β}` (or `δ − (z/c)·e^{αz+β}` when `e^{αc} = −1`)
    /// with `δ(z+c) = −δ(z)`.
    AntiPeriodicN1,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 14] = [
        FamilyKind::Prop1A,
        FamilyKind::Prop1B,
        FamilyKind::Thm2A,
        FamilyKind::Thm2ADegenerate,
        FamilyKind::Thm2BTrig,
        FamilyKind::Thm2ScaledExp,
        FamilyKind::DiffTrivial,
        FamilyKind::Eq5Pair,
        FamilyKind::Example4,
        FamilyKind::Example5a,
        FamilyKind::Example5b,
        FamilyKind::Example6a,
        FamilyKind::Example6b,
        FamilyKind::AntiPeriodicN1,
    ];

    /// Name used in JSON documents.
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Prop1A => "Prop1A",
            FamilyKind::Prop1B => "Prop1B",
            FamilyKind::Thm2A => "Thm2A",
            FamilyKind::Thm2ADegenerate => "Thm2A_degenerate",
            FamilyKind::Thm2BTrig => "Thm2B_trig",
            FamilyKind::Thm2ScaledExp => "Thm2_scaledExp",
            FamilyKind::DiffTrivial => "DiffTrivial",
            FamilyKind::Eq5Pair => "Eq5Pair",
            FamilyKind::Example4 => "Example4",
            FamilyKind::Example5a => "Example5a",
            FamilyKind::Example5b => "Example5b",
            FamilyKind::Example6a => "Example6a",
            FamilyKind::Example6b => "Example6b",
            FamilyKind::AntiPeriodicN1 => "AntiPeriodicN1",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            FamilyKind::Prop1A => "n=2 unit pair 2w/(1+w^2), (1-w^2)/(1+w^2); h holds w",
            FamilyKind::Prop1B => "n=3 unit pair (1 +- s wp'(h))/(2 wp(h)), eta^3 = 1",
            FamilyKind::Thm2A => "n=1 ode: e^(az+b)/(a+1) + A e^-z, alpha != -1",
            FamilyKind::Thm2ADegenerate => "n=1 ode, alpha = -1: z e^(-z+b) + A e^-z",
            FamilyKind::Thm2BTrig => "n=2 ode, alpha = 0: e^(b/2) sin(z + b)",
            FamilyKind::Thm2ScaledExp => "n>=1 ode: d e^((az+b)/n), d^n (1 + (a/n)^n) = 1",
            FamilyKind::DiffTrivial => "difference: d e^((az+b)/n), d^n (1 + e^(ac)) = 1",
            FamilyKind::Eq5Pair => "n=3 pair f, f(z+c) forms times e^((az+b)/3)",
            FamilyKind::Example4 => "n=3 difference, h = e^z, c = pi i, e^(ac) = 1",
            FamilyKind::Example5a => "n=2 difference, e^((az+b)/2) sin z, c = pi/2",
            FamilyKind::Example5b => "n=2 difference, e^((az+b)/2) sin(e^(4iz) + z), c = pi/2",
            FamilyKind::Example6a => "n=1 difference, e^z + e^(az+b)/2, c = i pi",
            FamilyKind::Example6b => "n=1 difference, e^(e^(2z)+z) + e^(az+b)/2, c = i pi",
            FamilyKind::AntiPeriodicN1 => "n=1 difference, delta + d e^(az+b), delta(z+c) = -delta(z)",
        }
    }
}

/// Parameters of one family. Fields not used by a kind are ignored; missing
/// optional scalars default as documented on [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Expr>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            n: None,
            alpha: None,
            beta: None,
            c: None,
            a: None,
            b: None,
            d: None,
            eta: None,
            h: None,
            delta: None,
        }
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_alpha(mut self, alpha: impl Into<Complex64>) -> Self {
        self.alpha = Some(alpha.into());
        self
    }

    pub fn with_beta(mut self, beta: impl Into<Complex64>) -> Self {
        self.beta = Some(beta.into());
        self
    }

    pub fn with_c(mut self, c: impl Into<Complex64>) -> Self {
        self.c = Some(c.into());
        self
    }

    pub fn with_a(mut self, a: impl Into<Complex64>) -> Self {
        self.a = Some(a.into());
        self
    }

    pub fn with_b(mut self, b: impl Into<Complex64>) -> Self {
        self.b = Some(b.into());
        self
    }

    pub fn with_d(mut self, d: impl Into<Complex64>) -> Self {
        self.d = Some(d.into());
        self
    }

    pub fn with_eta(mut self, eta: impl Into<Complex64>) -> Self {
        self.eta = Some(eta.into());
        self
    }

    pub fn with_h(mut self, h: Expr) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_delta(mut self, delta: Expr) -> Self {
        self.delta = Some(delta);
        self
    }
}

/// The equation a generated `f` is claimed to solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mode {
    /// `fⁿ + (f′)ⁿ = e^{αz+β}`.
    Ode { n: u32 },
    /// `fⁿ(z) + fⁿ(z+c) = e^{αz+β}`.
    Difference { n: u32, c: Complex64 },
    /// `fⁿ + gⁿ = 1`.
    Unit { n: u32 },
    /// `fⁿ + gⁿ = e^{αz+β}` for an explicit second function `g`.
    Pair { n: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub kind: FamilyKind,
    pub f: Expr,
    /// Second function for [`Mode::Unit`] and [`Mode::Pair`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Expr>,
    pub mode: Mode,
    pub alpha: Complex64,
    pub beta: Complex64,
}

/// Witness that a scale constraint has no solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Degeneracy {
    /// `α = n·e^{(2k+1)πi/n}`, so `1 + (α/n)ⁿ = 0`.
    OdeAlpha { n: u32, k: u32, alpha: Complex64 },
    /// `αc = (2k+1)πi`, so `e^{αc} = −1`.
    DifferenceShift { k: i64, alpha_c: Complex64 },
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Degeneracy::OdeAlpha { n, k, alpha } => write!(
                f,
                "alpha = {alpha} equals n*exp((2k+1)*pi*i/n) with n = {n}, k = {k}; 1 + (alpha/n)^n = 0"
            ),
            Degeneracy::DifferenceShift { k, alpha_c } => write!(
                f,
                "alpha*c = {alpha_c} equals (2k+1)*pi*i with k = {k}; exp(alpha*c) = -1"
            ),
        }
    }
}

/// Solutions `d` of a scale constraint `dⁿ·K = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleSet {
    /// Ordered by argument in `(−π, π]`.
    pub roots: Vec<Complex64>,
    /// Present exactly when `roots` is empty.
    pub degeneracy: Option<Degeneracy>,
}

impl AdmissibleSet {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("degenerate parameters, no solution: {0}")]
    Degenerate(Degeneracy),
    #[error("eta = {0} is not a cube root of unity")]
    NotCubeRootOfUnity(Complex64),
    #[error("{kind} requires parameter `{param}`")]
    Missing { kind: &'static str, param: &'static str },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("delta is not anti-periodic with respect to c: |delta(z+c) + delta(z)| = {residual:e} at z = {at}")]
    NotAntiPeriodic { residual: f64, at: Complex64 },
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// All `n` roots of `wⁿ = value`: principal root times the `n`-th roots of unity,
/// ordered by argument.
pub fn nth_roots(value: Complex64, n: u32) -> Vec<Complex64> {
    assert!(n >= 1);
    let principal = value.powc(c64(1.0 / n as f64, 0.0));
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| principal * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .collect();
    roots.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    roots
}

pub fn cube_roots_of_unity() -> [Complex64; 3] {
    [
        c64(1.0, 0.0),
        Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        Complex64::from_polar(1.0, -2.0 * PI / 3.0),
    ]
}

pub fn is_cube_root_of_unity(eta: Complex64) -> bool {
    (eta * eta * eta - 1.0).norm() < SCALAR_TOL
}

/// Roots `d` of `dⁿ(1 + (α/n)ⁿ) = 1`.
pub fn admissible_scale_ode(n: u32, alpha: Complex64) -> AdmissibleSet {
    assert!(n >= 1, "n must be positive");
    let k = 1.0 + (alpha / n as f64).powi(n as i32);
    if k.norm() < SCALAR_TOL {
        // α/n is an n-th root of −1: α = n·e^{(2k+1)πi/n}.
        let t = (alpha.arg() * n as f64 / PI - 1.0) / 2.0;
        let kk = t.round().rem_euclid(n as f64) as u32;
        return AdmissibleSet {
            roots: Vec::new(),
            degeneracy: Some(Degeneracy::OdeAlpha { n, k: kk, alpha }),
        };
    }
    AdmissibleSet {
        roots: nth_roots(1.0 / k, n),
        degeneracy: None,
    }
}

/// Roots `d` of `dⁿ(1 + e^{αc}) = 1`.
pub fn admissible_scale_diff(
    n: u32,
    alpha: Complex64,
    c: Complex64,
) -> Result<AdmissibleSet, FamilyError> {
    assert!(n >= 1, "n must be positive");
    if c == c64(0.0, 0.0) {
        return Err(FamilyError::Constraint("shift c must be nonzero".into()));
    }
    let ac = alpha * c;
    let k = 1.0 + ac.exp();
    if k.norm() < SCALAR_TOL {
        let kk = ((ac.im / PI - 1.0) / 2.0).round() as i64;
        return Ok(AdmissibleSet {
            roots: Vec::new(),
            degeneracy: Some(Degeneracy::DifferenceShift { k: kk, alpha_c: ac }),
        });
    }
    Ok(AdmissibleSet {
        roots: nth_roots(1.0 / k, n),
        degeneracy: None,
    })
}

/// Nonconstant unit pairs solving `fⁿ + gⁿ = 1`.
///
/// `n = 2`: `hOrOmega` is `ω` and the pair is `(2ω/(1+ω²), (1−ω²)/(1+ω²))`.
/// `n = 3`: `hOrOmega` is `h` and the pair is
/// `((1 + s℘′(h))/(2℘(h)), η(1 − s℘′(h))/(2℘(h)))` with `s = √3/3`.
pub fn prop1_unit_pair(
    n: u32,
    h_or_omega: &Expr,
    eta: Complex64,
) -> Result<(Expr, Expr), FamilyError> {
    match n {
        2 => {
            let w = h_or_omega.clone();
            let denom = (Expr::real(1.0) + w.clone().pow(2)).recip();
            let f = Expr::real(2.0) * w.clone() * denom.clone();
            let g = (Expr::real(1.0) - w.pow(2)) * denom;
            Ok((f, g))
        }
        3 => {
            if !is_cube_root_of_unity(eta) {
                return Err(FamilyError::NotCubeRootOfUnity(eta));
            }
            let (plus, minus) = cubic_parts(h_or_omega);
            Ok((plus, Expr::constant(eta) * minus))
        }
        _ => Err(FamilyError::Constraint(format!(
            "unit pairs exist only for n = 2 or 3, got n = {n}"
        ))),
    }
}

/// `((1 + s℘′(h))/(2℘(h)), (1 − s℘′(h))/(2℘(h)))`.
fn cubic_parts(h: &Expr) -> (Expr, Expr) {
    let half_inv_wp = Expr::real(0.5) * h.clone().wp().recip();
    let sq = Expr::real(S) * h.clone().wp_prime();
    (
        (Expr::real(1.0) + sq.clone()) * half_inv_wp.clone(),
        (Expr::real(1.0) - sq) * half_inv_wp,
    )
}

/// `e^{(αz+β)/n}` as an expression.
fn exp_affine_over(alpha: Complex64, beta: Complex64, n: u32) -> Expr {
    Expr::affine(alpha / n as f64, beta / n as f64).exp()
}

fn ensure_period_one(kind: FamilyKind, alpha: Complex64, c: Complex64) -> Result<(), FamilyError> {
    let e = (alpha * c).exp();
    if (e - 1.0).norm() > SCALAR_TOL {
        return Err(FamilyError::Constraint(format!(
            "{} needs exp(alpha*c) = 1 with c = {c}; got exp(alpha*c) = {e}",
            kind.name()
        )));
    }
    Ok(())
}

fn check_scale(
    d: Complex64,
    n: u32,
    k: Complex64,
    what: &str,
) -> Result<(), FamilyError> {
    let r = (d.powi(n as i32) * k - 1.0).norm();
    if r > SCALAR_TOL {
        return Err(FamilyError::Constraint(format!(
            "d = {d} does not satisfy {what}: residual {r:e}"
        )));
    }
    Ok(())
}

/// Samples `|δ(z+c) + δ(z)|` at deterministic points in `|z| ≤ 2`.
fn check_anti_periodic(delta: &Expr, c: Complex64) -> Result<(), FamilyError> {
    let opts = EvalOptions::default();
    let mut checked = 0;
    let mut i = 0u64;
    while checked < ANTI_PERIODIC_SAMPLES && i < 100 * ANTI_PERIODIC_SAMPLES as u64 {
        i += 1;
        // Golden-angle spiral: deterministic and area-uniform on the disc.
        let radius = 2.0 * (i as f64 * 0.618_033_988_749_895).fract().sqrt();
        let z = Complex64::from_polar(radius, i as f64 * 2.399_963_229_728_653);
        let (Ok(a), Ok(b)) = (delta.eval_with(z, &opts), delta.eval_with(z + c, &opts)) else {
            continue;
        };
        checked += 1;
        let residual = (a + b).norm() / a.norm().max(b.norm()).max(1.0);
        if residual > ANTI_PERIODIC_TOL {
            return Err(FamilyError::NotAntiPeriodic { residual, at: z });
        }
    }
    if checked < ANTI_PERIODIC_SAMPLES {
        return Err(FamilyError::Constraint(
            "delta could not be evaluated at enough points".into(),
        ));
    }
    Ok(())
}

/// Builds the family described by `spec`.
///
/// Defaults: `β = 0`, `a = 0`, `b = 0`, `η = 1`; `h = z` for `Prop1A`/`Prop1B`/`Eq5Pair`;
/// `d` is the first admissible root (by argument) when omitted. `Example4..6`
/// fix `c` and default `α` to the smallest nonzero value making `e^{αc} = 1`.
pub fn generate(spec: &FamilySpec) -> Result<Generated, FamilyError> {
    let kind = spec.kind;
    let zero = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let missing = |param: &'static str| FamilyError::Missing { kind: kind.name(), param };
    let beta = spec.beta.unwrap_or(zero);
    let eta = spec.eta.unwrap_or(one);
    let z = Expr::z();

    let need_n = |expected: u32| -> Result<(), FamilyError> {
        match spec.n {
            Some(n) if n != expected => Err(FamilyError::Constraint(format!(
                "{} has n = {expected}, got n = {n}",
                kind.name()
            ))),
            _ => Ok(()),
        }
    };

    let generated = match kind {
        FamilyKind::Prop1A | FamilyKind::Prop1B => {
            let n = if kind == FamilyKind::Prop1A { 2 } else { 3 };
            need_n(n)?;
            let h = spec.h.clone().unwrap_or(Expr::Variable);
            let (f, g) = prop1_unit_pair(n, &h, eta)?;
            Generated { kind, f, g: Some(g), mode: Mode::Unit { n }, alpha: zero, beta: zero }
        }
        FamilyKind::Thm2A => {
            need_n(1)?;
            let alpha = spec.alpha.ok_or(missing("alpha"))?;
            if (alpha + 1.0).norm() < SCALAR_TOL {
                return Err(FamilyError::Constraint(
                    "alpha = -1 belongs to Thm2A_degenerate".into(),
                ));
            }
            let a = spec.a.unwrap_or(zero);
            let f = Expr::constant(1.0 / (alpha + 1.0)) * Expr::affine(alpha, beta).exp()
                + Expr::constant(a) * (-z).exp();
            Generated { kind, f, g: None, mode: Mode::Ode { n: 1 }, alpha, beta }
        }
        FamilyKind::Thm2ADegenerate => {
            need_n(1)?;
            let alpha = c64(-1.0, 0.0);
            if let Some(given) = spec.alpha {
                if (given - alpha).norm() > SCALAR_TOL {
                    return Err(FamilyError::Constraint(format!(
                        "Thm2A_degenerate requires alpha = -1, got {given}"
                    )));
                }
            }
            let a = spec.a.unwrap_or(zero);
            let f = Expr::z() * Expr::affine(-1.0, beta).exp()
                + Expr::constant(a) * (-Expr::z()).exp();
            Generated { kind, f, g: None, mode: Mode::Ode { n: 1 }, alpha, beta }
        }
        FamilyKind::Thm2BTrig => {
            need_n(2)?;
            if let Some(alpha) = spec.alpha {
                if alpha.norm() > SCALAR_TOL {
                    return Err(FamilyError::Constraint(format!(
                        "the trigonometric branch requires alpha = 0, got {alpha}"
                    )));
                }
            }
            let b = spec.b.unwrap_or(zero);
            let f = Expr::constant((beta / 2.0).exp()) * Expr::affine(1.0, b).sin();
            Generated { kind, f, g: None, mode: Mode::Ode { n: 2 }, alpha: zero, beta }
        }
        FamilyKind::Thm2ScaledExp => {
            let n = spec.n.ok_or(missing("n"))?;
            if n == 0 {
                return Err(FamilyError::Constraint("n must be positive".into()));
            }
            let alpha = spec.alpha.ok_or(missing("alpha"))?;
            let set = admissible_scale_ode(n, alpha);
            if let Some(deg) = set.degeneracy {
                return Err(FamilyError::Degenerate(deg));
            }
            let d = match spec.d {
                Some(d) => {
                    check_scale(d, n, 1.0 + (alpha / n as f64).powi(n as i32), "d^n (1 + (alpha/n)^n) = 1")?;
                    d
                }
                None => set.roots[0],
            };
            let f = Expr::constant(d) * exp_affine_over(alpha, beta, n);
            Generated { kind, f, g: None, mode: Mode::Ode { n }, alpha, beta }
        }
        FamilyKind::DiffTrivial => {
            let n = spec.n.ok_or(missing("n"))?;
            if n == 0 {
                return Err(FamilyError::Constraint("n must be positive".into()));
            }
            let alpha = spec.alpha.ok_or(missing("alpha"))?;
            let c = spec.c.ok_or(missing("c"))?;
            let set = admissible_scale_diff(n, alpha, c)?;
            if let Some(deg) = set.degeneracy {
                return Err(FamilyError::Degenerate(deg));
            }
            let d = match spec.d {
                Some(d) => {
                    check_scale(d, n, 1.0 + (alpha * c).exp(), "d^n (1 + e^(alpha c)) = 1")?;
                    d
                }
                None => set.roots[0],
            };
            let f = Expr::constant(d) * exp_affine_over(alpha, beta, n);
            Generated { kind, f, g: None, mode: Mode::Difference { n, c }, alpha, beta }
        }
        FamilyKind::Eq5Pair => {
            need_n(3)?;
            if !is_cube_root_of_unity(eta) {
                return Err(FamilyError::NotCubeRootOfUnity(eta));
            }
            let alpha = spec.alpha.unwrap_or(zero);
            let h = spec.h.clone().unwrap_or(Expr::Variable);
            let (f, g) = eq5_pair(&h, alpha, beta, eta);
            Generated { kind, f, g: Some(g), mode: Mode::Pair { n: 3 }, alpha, beta }
        }
        FamilyKind::Example4 => {
            need_n(3)?;
            let c = c64(0.0, PI);
            let alpha = spec.alpha.unwrap_or(c64(2.0, 0.0));
            ensure_fixed_shift(spec, c)?;
            ensure_period_one(kind, alpha, c)?;
            let (f, _) = eq5_pair(&Expr::z().exp(), alpha, beta, one);
            Generated { kind, f, g: None, mode: Mode::Difference { n: 3, c }, alpha, beta }
        }
        FamilyKind::Example5a | FamilyKind::Example5b => {
            need_n(2)?;
            let c = c64(PI / 2.0, 0.0);
            let alpha = spec.alpha.unwrap_or(c64(0.0, 4.0));
            ensure_fixed_shift(spec, c)?;
            ensure_period_one(kind, alpha, c)?;
            let arg = if kind == FamilyKind::Example5a {
                Expr::z()
            } else {
                Expr::affine(c64(0.0, 4.0), zero).exp() + Expr::z()
            };
            let f = exp_affine_over(alpha, beta, 2) * arg.sin();
            Generated { kind, f, g: None, mode: Mode::Difference { n: 2, c }, alpha, beta }
        }
        FamilyKind::Example6a | FamilyKind::Example6b => {
            need_n(1)?;
            let c = c64(0.0, PI);
            let alpha = spec.alpha.unwrap_or(c64(2.0, 0.0));
            ensure_fixed_shift(spec, c)?;
            ensure_period_one(kind, alpha, c)?;
            let head = if kind == FamilyKind::Example6a {
                Expr::z().exp()
            } else {
                (Expr::affine(2.0, 0.0).exp() + Expr::z()).exp()
            };
            let f = head + Expr::real(0.5) * Expr::affine(alpha, beta).exp();
            Generated { kind, f, g: None, mode: Mode::Difference { n: 1, c }, alpha, beta }
        }
        FamilyKind::AntiPeriodicN1 => {
            need_n(1)?;
            let alpha = spec.alpha.ok_or(missing("alpha"))?;
            let c = spec.c.ok_or(missing("c"))?;
            if c == zero {
                return Err(FamilyError::Constraint("shift c must be nonzero".into()));
            }
            let delta = spec.delta.clone().ok_or(missing("delta"))?;
            check_anti_periodic(&delta, c)?;
            let e = Expr::affine(alpha, beta).exp();
            let k = 1.0 + (alpha * c).exp();
            let f = if k.norm() < SCALAR_TOL {
                delta - Expr::affine(1.0 / c, zero) * e
            } else {
                let d = match spec.d {
                    Some(d) => {
                        check_scale(d, 1, k, "d (1 + e^(alpha c)) = 1")?;
                        d
                    }
                    None => 1.0 / k,
                };
                delta + Expr::constant(d) * e
            };
            Generated { kind, f, g: None, mode: Mode::Difference { n: 1, c }, alpha, beta }
        }
    };
    Ok(generated)
}

fn ensure_fixed_shift(spec: &FamilySpec, c: Complex64) -> Result<(), FamilyError> {
    match spec.c {
        Some(given) if (given - c).norm() > SCALAR_TOL => Err(FamilyError::Constraint(format!(
            "{} fixes c = {c}, got {given}",
            spec.kind.name()
        ))),
        _ => Ok(()),
    }
}

/// The two forms of the cubic parametrization of `f(z)` and `f(z+c)`:
/// `((1 + s℘′(h))/(2℘(h))·E, η(1 − s℘′(h))/(2℘(h))·E)` with `E = e^{(αz+β)/3}`.
pub fn eq5_pair(h: &Expr, alpha: Complex64, beta: Complex64, eta: Complex64) -> (Expr, Expr) {
    let (plus, minus) = cubic_parts(h);
    let e = exp_affine_over(alpha, beta, 3);
    (plus * e.clone(), Expr::constant(eta) * minus * e)
}
