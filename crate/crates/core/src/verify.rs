//! Sampled residual certificates for the functional equations.
//!
//! Points are drawn uniformly by area from an annulus `r_min ≤ |z| ≤ r_max`
//! using a ChaCha stream keyed by the plan's seed. A point where any subterm
//! hits a pole guard or overflows is rejected and replaced by the next
//! candidate; at most `100·count` candidates are drawn. Statistics are combined
//! in candidate order, so reports do not depend on evaluation order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, EvalOptions, Expr};
use crate::families::{Generated, Mode, S};
use crate::format::{complex_json, real_json};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub seed: u64,
    pub pole_guard: f64,
    /// `pass` iff `max_rel ≤ tolerance`.
    pub tolerance: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            r_min: 0.5,
            r_max: 3.0,
            count: 500,
            seed: 1,
            pole_guard: crate::expr::DEFAULT_POLE_GUARD,
            tolerance: 1e-10,
        }
    }
}

impl SamplePlan {
    pub fn annulus(r_min: f64, r_max: f64) -> Self {
        Self {
            r_min,
            r_max,
            ..Self::default()
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_pole_guard(mut self, pole_guard: f64) -> Self {
        self.pole_guard = pole_guard;
        self
    }

    pub fn max_attempts(&self) -> usize {
        self.count.saturating_mul(100)
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let ok = self.r_min > 0.0
            && self.r_min < self.r_max
            && self.r_max.is_finite()
            && self.count >= 1
            && self.pole_guard > 0.0
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(VerifyError::Precondition(format!("invalid sample plan {self:?}")))
        }
    }

    /// The first `len` candidate points of this plan's stream.
    pub fn candidates(&self, len: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (a, b) = (self.r_min * self.r_min, self.r_max * self.r_max);
        (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                Complex64::from_polar((a + u * (b - a)).sqrt(), 2.0 * PI * v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("too many pole rejections: {accepted} of {wanted} samples after {attempts} attempts")]
    TooManyRejections {
        accepted: usize,
        wanted: usize,
        attempts: usize,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: String,
    pub samples: usize,
    pub rejected: usize,
    pub max_rel: f64,
    pub mean_rel: f64,
    pub worst_point: Complex64,
    pub tolerance: f64,
    pub pass: bool,
    /// Branch of `e^{αc/3}` used by the shift identity: principal value times
    /// `e^{2πik/3}` for the selector `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cube_root_selector: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cube_root_factor: Option<Complex64>,
}

impl ResidualReport {
    /// JSON with schema version and numbers at 15 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "schema": crate::SCHEMA_VERSION,
            "equation": self.equation,
            "samples": self.samples,
            "rejected": self.rejected,
            "max_rel": real_json(self.max_rel),
            "mean_rel": real_json(self.mean_rel),
            "worst_point": complex_json(self.worst_point),
            "tolerance": real_json(self.tolerance),
            "pass": self.pass,
        });
        if let Some(k) = self.cube_root_selector {
            v["cube_root_selector"] = serde_json::json!(k);
        }
        if let Some(f) = self.cube_root_factor {
            v["cube_root_factor"] = complex_json(f);
        }
        v
    }
}

/// A residual to sample: each variant knows how to compute
/// `|lhs − rhs| / max(|terms|…, 1)` at a point.
#[derive(Debug, Clone)]
pub enum Equation {
    /// `fⁿ + (f′)ⁿ = e^{αz+β}`; `fp` is the derivative tree of `f`.
    Ode {
        f: Expr,
        fp: Expr,
        n: u32,
        alpha: Complex64,
        beta: Complex64,
    },
    /// `fⁿ(z) + gⁿ(z) = e^{αz+β}`. The difference equation uses `g = Shift(f, c)`.
    Pair {
        f: Expr,
        g: Expr,
        n: u32,
        alpha: Complex64,
        beta: Complex64,
    },
    /// `η(1 − s℘′(h(z)))/℘(h(z)) = κ(1 + s℘′(h(z+c)))/℘(h(z+c))`, `κ` a cube root of `e^{αc}`.
    ShiftIdentity {
        h: Expr,
        c: Complex64,
        eta: Complex64,
        kappa: Complex64,
    },
    /// `3f²℘²(h)/E² − 3f℘(h)/E + 1 = ℘³(h)`, `E = e^{(αz+β)/3}`.
    CubicRearrangement {
        f: Expr,
        h: Expr,
        alpha: Complex64,
        beta: Complex64,
    },
}

impl Equation {
    pub fn tag(&self) -> String {
        match self {
            Equation::Ode { n, .. } => format!("ode n={n}: f^n + (f')^n = exp(alpha z + beta)"),
            Equation::Pair { n, alpha, beta, .. } => {
                if alpha.norm() == 0.0 && beta.norm() == 0.0 {
                    format!("unit n={n}: f^n + g^n = 1")
                } else {
                    format!("pair n={n}: f^n + g^n = exp(alpha z + beta)")
                }
            }
            Equation::ShiftIdentity { .. } => {
                "shift identity: eta (1 - s wp'(h))/wp(h) = kappa (1 + s wp'(h(z+c)))/wp(h(z+c))".into()
            }
            Equation::CubicRearrangement { .. } => {
                "cubic rearrangement: 3 f^2 wp^2(h)/E^2 - 3 f wp(h)/E + 1 = wp^3(h)".into()
            }
        }
    }

    pub fn relative_residual(&self, z: Complex64, opts: &EvalOptions) -> Result<f64, EvalError> {
        let rel = match self {
            Equation::Ode { f, fp, n, alpha, beta } => {
                let k = *n as i32;
                let a = f.eval_with(z, opts)?.powi(k);
                let b = fp.eval_with(z, opts)?.powi(k);
                let rhs = (alpha * z + beta).exp();
                (a + b - rhs).norm() / a.norm().max(b.norm()).max(rhs.norm()).max(1.0)
            }
            Equation::Pair { f, g, n, alpha, beta } => {
                let k = *n as i32;
                let a = f.eval_with(z, opts)?.powi(k);
                let b = g.eval_with(z, opts)?.powi(k);
                let rhs = (alpha * z + beta).exp();
                (a + b - rhs).norm() / a.norm().max(b.norm()).max(rhs.norm()).max(1.0)
            }
            Equation::ShiftIdentity { h, c, eta, kappa } => {
                let side = |w: Complex64, sign: f64| -> Result<Complex64, EvalError> {
                    let hw = h.eval_with(w, opts)?;
                    let (p, q) = crate::elliptic::wp_pair_guarded(hw, opts.pole_guard)
                        .map_err(|_| EvalError::PoleOverflow { at: w })?;
                    if p.norm() < opts.pole_guard {
                        return Err(EvalError::PoleOverflow { at: w });
                    }
                    Ok((1.0 + sign * S * q) / p)
                };
                let lhs = eta * side(z, -1.0)?;
                let rhs = kappa * side(z + c, 1.0)?;
                (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0)
            }
            Equation::CubicRearrangement { f, h, alpha, beta } => {
                let fz = f.eval_with(z, opts)?;
                let hw = h.eval_with(z, opts)?;
                let p = crate::elliptic::wp_guarded(hw, opts.pole_guard)
                    .map_err(|_| EvalError::PoleOverflow { at: z })?;
                let e = ((alpha * z + beta) / 3.0).exp();
                let t1 = 3.0 * fz * fz * p * p / (e * e);
                let t2 = 3.0 * fz * p / e;
                let p3 = p * p * p;
                (t1 - t2 + 1.0 - p3).norm() / t1.norm().max(t2.norm()).max(p3.norm()).max(1.0)
            }
        };
        if rel.is_finite() {
            Ok(rel)
        } else {
            Err(EvalError::NonFinite { at: z })
        }
    }

    /// Residuals at fixed points; `None` where the point is rejected.
    pub fn residuals_at(&self, points: &[Complex64], pole_guard: f64) -> Result<Vec<Option<f64>>, EvalError> {
        let opts = EvalOptions { pole_guard };
        points
            .par_iter()
            .map(|&z| match self.relative_residual(z, &opts) {
                Ok(r) => Ok(Some(r)),
                Err(e) if e.is_resample() => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }
}

/// Pairwise summation; fixed association for a given length.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Samples `equation` according to `plan`.
pub fn run(equation: &Equation, plan: &SamplePlan) -> Result<ResidualReport, VerifyError> {
    plan.validate()?;
    let max_attempts = plan.max_attempts();
    let mut accepted: Vec<(Complex64, f64)> = Vec::with_capacity(plan.count);
    let mut attempts = 0;
    let mut batch = plan.count;
    let mut stream = plan.candidates(0);
    while accepted.len() < plan.count && attempts < max_attempts {
        let want = (attempts + batch).min(max_attempts);
        if stream.len() < want {
            stream = plan.candidates(want);
        }
        let chunk = &stream[attempts..want];
        let residuals = equation.residuals_at(chunk, plan.pole_guard)?;
        for (z, r) in chunk.iter().zip(residuals) {
            attempts += 1;
            if let Some(r) = r {
                accepted.push((*z, r));
                if accepted.len() == plan.count {
                    break;
                }
            }
        }
        batch = (batch * 2).min(max_attempts);
    }
    if accepted.len() < plan.count {
        return Err(VerifyError::TooManyRejections {
            accepted: accepted.len(),
            wanted: plan.count,
            attempts,
        });
    }
    let rels: Vec<f64> = accepted.iter().map(|(_, r)| *r).collect();
    let (worst_point, max_rel) = accepted
        .iter()
        .fold((accepted[0].0, f64::NEG_INFINITY), |best, &(z, r)| {
            if r > best.1 {
                (z, r)
            } else {
                best
            }
        });
    let mean_rel = (pairwise_sum(&rels) / rels.len() as f64).min(max_rel);
    Ok(ResidualReport {
        equation: equation.tag(),
        samples: accepted.len(),
        rejected: attempts - accepted.len(),
        max_rel,
        mean_rel,
        worst_point,
        tolerance: plan.tolerance,
        pass: max_rel <= plan.tolerance,
        cube_root_selector: None,
        cube_root_factor: None,
    })
}

pub fn residual_ode(
    f: &Expr,
    n: u32,
    alpha: Complex64,
    beta: Complex64,
    plan: &SamplePlan,
) -> Result<ResidualReport, VerifyError> {
    if n == 0 {
        return Err(VerifyError::Precondition("n must be positive".into()));
    }
    let eq = Equation::Ode {
        f: f.clone(),
        fp: f.differentiate(),
        n,
        alpha,
        beta,
    };
    run(&eq, plan)
}

pub fn residual_difference(
    f: &Expr,
    n: u32,
    alpha: Complex64,
    beta: Complex64,
    c: Complex64,
    plan: &SamplePlan,
) -> Result<ResidualReport, VerifyError> {
    if c == Complex64::new(0.0, 0.0) {
        return Err(VerifyError::Precondition("shift c must be nonzero".into()));
    }
    if n == 0 {
        return Err(VerifyError::Precondition("n must be positive".into()));
    }
    let eq = Equation::Pair {
        f: f.clone(),
        g: f.clone().shift(c),
        n,
        alpha,
        beta,
    };
    let mut report = run(&eq, plan)?;
    report.equation = format!("difference n={n}: f^n(z) + f^n(z+c) = exp(alpha z + beta)");
    Ok(report)
}

pub fn residual_pair(
    f: &Expr,
    g: &Expr,
    n: u32,
    alpha: Complex64,
    beta: Complex64,
    plan: &SamplePlan,
) -> Result<ResidualReport, VerifyError> {
    if n == 0 {
        return Err(VerifyError::Precondition("n must be positive".into()));
    }
    let eq = Equation::Pair {
        f: f.clone(),
        g: g.clone(),
        n,
        alpha,
        beta,
    };
    run(&eq, plan)
}

pub fn residual_unit(f: &Expr, g: &Expr, n: u32, plan: &SamplePlan) -> Result<ResidualReport, VerifyError> {
    let zero = Complex64::new(0.0, 0.0);
    residual_pair(f, g, n, zero, zero, plan)
}

/// Checks the shift identity derived from the cubic parametrization.
/// `cube_root_selector ∈ {0, 1, 2}` picks `κ = e^{αc/3}·e^{2πik/3}`.
pub fn check_eq6(
    h: &Expr,
    c: Complex64,
    eta: Complex64,
    alpha: Complex64,
    cube_root_selector: u8,
    plan: &SamplePlan,
) -> Result<ResidualReport, VerifyError> {
    if c == Complex64::new(0.0, 0.0) {
        return Err(VerifyError::Precondition("shift c must be nonzero".into()));
    }
    if !crate::families::is_cube_root_of_unity(eta) {
        return Err(VerifyError::Precondition(format!("eta = {eta} is not a cube root of unity")));
    }
    if cube_root_selector > 2 {
        return Err(VerifyError::Precondition("cube root selector must be 0, 1 or 2".into()));
    }
    let kappa = (alpha * c / 3.0).exp()
        * Complex64::from_polar(1.0, 2.0 * PI * cube_root_selector as f64 / 3.0);
    let eq = Equation::ShiftIdentity {
        h: h.clone(),
        c,
        eta,
        kappa,
    };
    let mut report = run(&eq, plan)?;
    report.cube_root_selector = Some(cube_root_selector);
    report.cube_root_factor = Some(kappa);
    Ok(report)
}

pub fn check_eq7(
    f: &Expr,
    h: &Expr,
    alpha: Complex64,
    beta: Complex64,
    plan: &SamplePlan,
) -> Result<ResidualReport, VerifyError> {
    let eq = Equation::CubicRearrangement {
        f: f.clone(),
        h: h.clone(),
        alpha,
        beta,
    };
    run(&eq, plan)
}

/// Dispatches on the generated family's mode.
pub fn verify_generated(g: &Generated, plan: &SamplePlan) -> Result<ResidualReport, VerifyError> {
    let second = || {
        g.g.clone()
            .ok_or_else(|| VerifyError::Precondition("family has no second function".into()))
    };
    match g.mode {
        Mode::Ode { n } => residual_ode(&g.f, n, g.alpha, g.beta, plan),
        Mode::Difference { n, c } => residual_difference(&g.f, n, g.alpha, g.beta, c, plan),
        Mode::Unit { n } => residual_unit(&g.f, &second()?, n, plan),
        Mode::Pair { n } => residual_pair(&g.f, &second()?, n, g.alpha, g.beta, plan),
    }
}
