//! Numerical Nevanlinna theory on circles `|z| = r`.
//!
//! - proximity `m(r,f) = (1/2π)∫ log⁺|f(re^{iθ})| dθ` by the periodic trapezoid
//!   rule with nested doubling;
//! - counting `N(r,f) = Σ_{0<|p|≤r} mult(p)·log(r/|p|) + n(0,f)·log r` over an
//!   analytic enumeration of the poles;
//! - characteristic `T = m + N` and a log–log order fit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::elliptic::{self, equianharmonic_lattice, Lattice};
use crate::expr::{EvalOptions, Expr};
use crate::families::{self, FamilyKind, FamilySpec};
use crate::format::{fmt_sig, real_json};
use crate::verify::pairwise_sum;

pub const DEFAULT_QUAD_ORDER: usize = 256;
const MAX_DOUBLINGS: usize = 20;
const MIN_DOUBLINGS: usize = 2;
const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_ABS_FLOOR: f64 = 1e-12;
/// Radius nudges: `r·(1 + k·NUDGE_STEP)` for `k = 0..=NUDGE_STEPS`, at most 0.1%.
const NUDGE_STEP: f64 = 1e-4;
const NUDGE_STEPS: usize = 10;
/// Poles closer than this to the origin are counted by the `n(0)·log r` term.
const ORIGIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NevanlinnaError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("quadrature order must be at least 4, got {0}")]
    BadOrder(usize),
    #[error("pole on or near the circle |z| = {r} at {at}")]
    PoleOnCircle { r: f64, at: Complex64 },
    #[error("proximity on |z| = {r} did not converge after {doublings} doublings (last change {last_change:e})")]
    NonConvergence { r: f64, doublings: usize, last_change: f64 },
    #[error("radii must be strictly increasing")]
    RadiiNotIncreasing,
    #[error("order fit needs at least 8 records with T > 0, got {0}")]
    InsufficientData(usize),
    #[error("degenerate growth curve: all T equal")]
    DegenerateCurve,
    #[error("no pole enumerator for {0}")]
    Unsupported(String),
    #[error(transparent)]
    Family(#[from] families::FamilyError),
}

/// Inner function `h` whose lattice preimages carry the poles of `℘(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InnerMap {
    /// `h(z) = a·z + b`, `a ≠ 0`.
    Affine { a: Complex64, b: Complex64 },
    /// `h(z) = e^{a·z + b}`, `a ≠ 0`.
    ExpAffine { a: Complex64, b: Complex64 },
}

impl InnerMap {
    /// Recognizes `a·z + b` and `e^{a·z + b}` trees.
    pub fn from_expr(h: &Expr) -> Option<InnerMap> {
        if let Some((a, b)) = h.affine_coefficients() {
            return (a.norm() > 0.0).then_some(InnerMap::Affine { a, b });
        }
        if let Expr::Exp(inner) = h {
            let (a, b) = inner.affine_coefficients()?;
            return (a.norm() > 0.0).then_some(InnerMap::ExpAffine { a, b });
        }
        None
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            InnerMap::Affine { a, b } => a * z + b,
            InnerMap::ExpAffine { a, b } => (a * z + b).exp(),
        }
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            InnerMap::Affine { a, .. } => a,
            InnerMap::ExpAffine { a, b } => a * (a * z + b).exp(),
        }
    }

    /// Visits every `z` with `|z| ≤ r` and `h(z) ∈ offset + L`.
    pub fn for_each_preimage(
        &self,
        lattice: &Lattice,
        offset: Complex64,
        r: f64,
        mut visit: impl FnMut(Complex64),
    ) {
        match *self {
            InnerMap::Affine { a, b } => {
                lattice.for_each_point_in_disc(b - offset, a.norm() * r, |_, _, p| {
                    let z = (offset + p - b) / a;
                    if z.norm() <= r {
                        visit(z);
                    }
                });
            }
            InnerMap::ExpAffine { a, b } => {
                let big_r = a.norm() * r;
                let lo = (b.re - big_r).exp();
                let hi = (b.re + big_r).exp();
                lattice.for_each_point_in_disc(-offset, hi, |_, _, p| {
                    let w = offset + p;
                    let modulus = w.norm();
                    if modulus == 0.0 || modulus < lo {
                        return;
                    }
                    let x = modulus.ln() - b.re;
                    let span = big_r * big_r - x * x;
                    if span < 0.0 {
                        return;
                    }
                    let s = span.sqrt();
                    let y0 = w.arg() - b.im;
                    let k_lo = ((-s - y0) / (2.0 * PI)).ceil() as i64;
                    let k_hi = ((s - y0) / (2.0 * PI)).floor() as i64;
                    for k in k_lo..=k_hi {
                        let z = Complex64::new(x, y0 + 2.0 * PI * k as f64) / a;
                        if z.norm() <= r {
                            visit(z);
                        }
                    }
                });
            }
        }
    }
}

/// Closed-form description of a pole set with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PoleEnumerator {
    NoPoles,
    /// Double poles of `℘` at every lattice point.
    LatticeDoublePoles { lattice: Lattice },
    /// Double poles of `℘(h)` at `h⁻¹(L)`.
    PreimageOfLattice { map: InnerMap, lattice: Lattice },
    ExplicitList { poles: Vec<(Complex64, u32)> },
}

impl PoleEnumerator {
    pub fn lattice_double_poles() -> Self {
        PoleEnumerator::LatticeDoublePoles {
            lattice: equianharmonic_lattice(),
        }
    }

    pub fn preimage_of_lattice(map: InnerMap) -> Self {
        PoleEnumerator::PreimageOfLattice {
            map,
            lattice: equianharmonic_lattice(),
        }
    }

    /// Visits each pole with `|p| ≤ r` once, with its multiplicity.
    pub fn for_each(&self, r: f64, mut visit: impl FnMut(Complex64, u32)) {
        match self {
            PoleEnumerator::NoPoles => {}
            PoleEnumerator::LatticeDoublePoles { lattice } => {
                lattice.for_each_point_in_disc(Complex64::new(0.0, 0.0), r, |_, _, p| visit(p, 2));
            }
            PoleEnumerator::PreimageOfLattice { map, lattice } => {
                map.for_each_preimage(lattice, Complex64::new(0.0, 0.0), r, |z| visit(z, 2));
            }
            PoleEnumerator::ExplicitList { poles } => {
                for &(p, m) in poles {
                    if p.norm() <= r {
                        visit(p, m);
                    }
                }
            }
        }
    }

    pub fn enumerate(&self, r: f64) -> Vec<(Complex64, u32)> {
        let mut out = Vec::new();
        self.for_each(r, |p, m| out.push((p, m)));
        out
    }

    /// `n(r, f)`: number of poles in `|z| ≤ r` counted with multiplicity.
    pub fn count(&self, r: f64) -> u64 {
        let mut n = 0u64;
        self.for_each(r, |_, m| n += m as u64);
        n
    }

    /// Simple zeros of `℘(h)` within `|z| ≤ r_max`, i.e. the poles of `1/℘(h)`.
    pub fn zeros_of_wp(map: InnerMap, r_max: f64) -> Self {
        let lattice = equianharmonic_lattice();
        let mut poles = Vec::new();
        for q in elliptic::wp_zeros_in_cell() {
            map.for_each_preimage(&lattice, q, r_max, |z| poles.push((z, 1)));
        }
        PoleEnumerator::ExplicitList { poles }
    }
}

/// Winding number of `f` around the circle `|z − center| = radius`.
pub fn winding_number(f: &Expr, center: Complex64, radius: f64) -> Option<i64> {
    let opts = EvalOptions { pole_guard: 1e-12 };
    let mut m = 64usize;
    while m <= 8192 {
        let values: Option<Vec<Complex64>> = (0..m)
            .map(|j| {
                let z = center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / m as f64);
                f.eval_with(z, &opts).ok().filter(|v| v.norm() > 0.0)
            })
            .collect();
        let values = values?;
        let mut total = 0.0;
        let mut smooth = true;
        for j in 0..m {
            let step = (values[(j + 1) % m] / values[j]).arg();
            if step.abs() > PI / 3.0 {
                smooth = false;
                break;
            }
            total += step;
        }
        if smooth {
            return Some((total / (2.0 * PI)).round() as i64);
        }
        m *= 2;
    }
    None
}

/// `m(r, f)` by trapezoid quadrature starting from `quad_order` nodes and
/// doubling until successive estimates differ by less than `1e−6` relative.
pub fn proximity(f: &Expr, r: f64, quad_order: usize) -> Result<f64, NevanlinnaError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(NevanlinnaError::BadRadius(r));
    }
    if quad_order < 4 {
        return Err(NevanlinnaError::BadOrder(quad_order));
    }
    let opts = EvalOptions::default();
    let log_plus = |theta: f64| -> Result<f64, NevanlinnaError> {
        let z = Complex64::from_polar(r, theta);
        let v = f
            .eval_with(z, &opts)
            .map_err(|_| NevanlinnaError::PoleOnCircle { r, at: z })?;
        Ok(v.norm().ln().max(0.0))
    };
    let sample = |n: usize, phase: f64| -> Result<f64, NevanlinnaError> {
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|j| log_plus(2.0 * PI * (j as f64 + phase) / n as f64))
            .collect::<Result<_, _>>()?;
        Ok(pairwise_sum(&values))
    };
    let mut n = quad_order;
    let mut sum = sample(n, 0.0)?;
    let mut estimate = sum / n as f64;
    let mut last_change = f64::INFINITY;
    for doubling in 1..=MAX_DOUBLINGS {
        sum += sample(n, 0.5)?;
        n *= 2;
        let next = sum / n as f64;
        last_change = (next - estimate).abs();
        estimate = next;
        if doubling >= MIN_DOUBLINGS && last_change <= QUAD_REL_TOL * next.abs() + QUAD_ABS_FLOOR {
            return Ok(next);
        }
    }
    Err(NevanlinnaError::NonConvergence {
        r,
        doublings: MAX_DOUBLINGS,
        last_change,
    })
}

/// `N(r, f)` summed exactly over the enumerated poles.
pub fn counting(pe: &PoleEnumerator, r: f64) -> Result<f64, NevanlinnaError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(NevanlinnaError::BadRadius(r));
    }
    let ln_r = r.ln();
    let mut terms = Vec::new();
    pe.for_each(r, |p, m| {
        let modulus = p.norm();
        let weight = if modulus < ORIGIN_EPS { ln_r } else { ln_r - modulus.ln() };
        terms.push(m as f64 * weight);
    });
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub r: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCurve {
    pub records: Vec<GrowthRecord>,
}

impl GrowthCurve {
    /// CSV with header `r,m,N,T`, 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,m,N,T\n");
        for rec in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig(rec.r),
                fmt_sig(rec.m),
                fmt_sig(rec.n),
                fmt_sig(rec.t)
            ));
        }
        out
    }
}

/// One record at `r`, nudging the radius outward by up to 0.1% if the circle
/// runs through a pole or the quadrature stalls near one.
fn record_at(f: &Expr, pe: &PoleEnumerator, r: f64, quad_order: usize) -> Result<GrowthRecord, NevanlinnaError> {
    let mut last_err = None;
    for k in 0..=NUDGE_STEPS {
        let rr = r * (1.0 + k as f64 * NUDGE_STEP);
        match proximity(f, rr, quad_order) {
            Ok(m) => {
                let n = counting(pe, rr)?;
                return Ok(GrowthRecord { r: rr, m, n, t: m + n });
            }
            Err(e @ (NevanlinnaError::PoleOnCircle { .. } | NevanlinnaError::NonConvergence { .. })) => {
                last_err = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// `T(r, f) = m(r, f) + N(r, f)` at each radius; radii are processed in
/// parallel and returned in input order.
pub fn characteristic(
    f: &Expr,
    pe: &PoleEnumerator,
    radii: &[f64],
    quad_order: usize,
) -> Result<GrowthCurve, NevanlinnaError> {
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NevanlinnaError::RadiiNotIncreasing);
    }
    let records: Vec<GrowthRecord> = radii
        .par_iter()
        .map(|&r| record_at(f, pe, r, quad_order))
        .collect::<Result<_, _>>()?;
    if records.windows(2).any(|w| w[0].r >= w[1].r) {
        return Err(NevanlinnaError::RadiiNotIncreasing);
    }
    Ok(GrowthCurve { records })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    /// Least-squares slope of `log T` against `log r` over the top half of the radii.
    pub rho: f64,
    pub intercept: f64,
    /// Residual sum of squares of the fit.
    pub sse: f64,
    pub fit_points: usize,
    /// Slopes between consecutive records.
    pub local_slopes: Vec<f64>,
    /// Local slopes strictly increasing: evidence of super-polynomial growth.
    pub super_polynomial: bool,
}

impl OrderEstimate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::SCHEMA_VERSION,
            "rho": real_json(self.rho),
            "intercept": real_json(self.intercept),
            "sse": real_json(self.sse),
            "fit_points": self.fit_points,
            "local_slopes": self.local_slopes.iter().map(|s| real_json(*s)).collect::<Vec<_>>(),
            "super_polynomial_growth_evidence": self.super_polynomial,
        })
    }
}

pub fn order_estimate(curve: &GrowthCurve) -> Result<OrderEstimate, NevanlinnaError> {
    let recs = &curve.records;
    let positive = recs.iter().filter(|r| r.t > 0.0).count();
    if recs.len() < 8 || positive < recs.len() {
        return Err(NevanlinnaError::InsufficientData(positive.min(recs.len())));
    }
    let t_max = recs.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    let t_min = recs.iter().map(|r| r.t).fold(f64::INFINITY, f64::min);
    if t_max - t_min <= 1e-15 * t_max {
        return Err(NevanlinnaError::DegenerateCurve);
    }
    let pts: Vec<(f64, f64)> = recs.iter().map(|r| (r.r.ln(), r.t.ln())).collect();
    let top = &pts[pts.len() / 2..];
    let k = top.len() as f64;
    let mx = top.iter().map(|p| p.0).sum::<f64>() / k;
    let my = top.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = top.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = top.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rho = sxy / sxx;
    let intercept = my - rho * mx;
    let sse = top.iter().map(|p| (p.1 - intercept - rho * p.0).powi(2)).sum();
    let local_slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let super_polynomial = local_slopes.windows(2).all(|w| w[1] > w[0]);
    Ok(OrderEstimate {
        rho,
        intercept,
        sse,
        fit_points: top.len(),
        local_slopes,
        super_polynomial,
    })
}

/// Poles of `f` where `f` is built from `℘(h)` and `℘′(h)` through
/// `(1 ± s℘′(h))/(2℘(h))`: candidates are `h⁻¹` of the lattice and of the zeros
/// of `℘`; multiplicities come from the argument principle.
fn cubic_family_poles(f: &Expr, map: InnerMap, r_max: f64) -> PoleEnumerator {
    let lattice = equianharmonic_lattice();
    // Minimum distance between lattice points and zeros of ℘ in the h-plane.
    let spacing = lattice.circumradius();
    let mut offsets = vec![Complex64::new(0.0, 0.0)];
    offsets.extend(elliptic::wp_zeros_in_cell());
    let mut candidates = Vec::new();
    for off in offsets {
        map.for_each_preimage(&lattice, off, r_max, |z| candidates.push(z));
    }
    let branch_gap = match map {
        InnerMap::Affine { .. } => f64::INFINITY,
        InnerMap::ExpAffine { a, .. } => 2.0 * PI / a.norm(),
    };
    let poles: Vec<(Complex64, u32)> = candidates
        .par_iter()
        .filter_map(|&z| {
            let rho = (0.2 * (spacing / map.derivative(z).norm()).min(branch_gap)).min(0.1);
            let w = winding_number(f, z, rho)?;
            (w < 0).then_some((z, (-w) as u32))
        })
        .collect();
    PoleEnumerator::ExplicitList { poles }
}

/// Pole enumerator for a family, valid for `|z| ≤ r_max`.
pub fn pole_enumerator_for(spec: &FamilySpec, r_max: f64) -> Result<PoleEnumerator, NevanlinnaError> {
    let generated = families::generate(spec)?;
    match spec.kind {
        FamilyKind::Thm2A
        | FamilyKind::Thm2ADegenerate
        | FamilyKind::Thm2BTrig
        | FamilyKind::Thm2ScaledExp
        | FamilyKind::DiffTrivial
        | FamilyKind::Example5a
        | FamilyKind::Example5b
        | FamilyKind::Example6a
        | FamilyKind::Example6b => Ok(PoleEnumerator::NoPoles),
        FamilyKind::AntiPeriodicN1 => {
            if generated.f.is_entire() {
                Ok(PoleEnumerator::NoPoles)
            } else {
                Err(NevanlinnaError::Unsupported(
                    "AntiPeriodicN1 with a non-entire delta".into(),
                ))
            }
        }
        FamilyKind::Prop1A => {
            let omega = spec.h.clone().unwrap_or(Expr::Variable);
            let Some((a, b)) = omega.affine_coefficients().filter(|(a, _)| a.norm() > 0.0) else {
                return Err(NevanlinnaError::Unsupported("Prop1A with non-affine omega".into()));
            };
            let i = Complex64::new(0.0, 1.0);
            let poles = [i, -i]
                .into_iter()
                .map(|w| ((w - b) / a, 1))
                .filter(|(z, _)| z.norm() <= r_max)
                .collect();
            Ok(PoleEnumerator::ExplicitList { poles })
        }
        FamilyKind::Prop1B | FamilyKind::Eq5Pair | FamilyKind::Example4 => {
            let h = match spec.kind {
                FamilyKind::Example4 => Expr::z().exp(),
                _ => spec.h.clone().unwrap_or(Expr::Variable),
            };
            let map = InnerMap::from_expr(&h).ok_or_else(|| {
                NevanlinnaError::Unsupported(format!("inner function {h} is neither affine nor exp-affine"))
            })?;
            Ok(cubic_family_poles(&generated.f, map, r_max))
        }
    }
}

/// Pole enumerator for a bare expression: entire trees, and `℘(h)` with `h`
/// affine or exp-affine.
pub fn pole_enumerator_for_expr(e: &Expr) -> Result<PoleEnumerator, NevanlinnaError> {
    if e.is_entire() {
        return Ok(PoleEnumerator::NoPoles);
    }
    if let Expr::Wp(h) = e {
        match InnerMap::from_expr(h) {
            Some(InnerMap::Affine { a, b }) if a == Complex64::new(1.0, 0.0) && b == Complex64::new(0.0, 0.0) => {
                return Ok(PoleEnumerator::lattice_double_poles())
            }
            Some(map) => return Ok(PoleEnumerator::preimage_of_lattice(map)),
            None => {}
        }
    }
    Err(NevanlinnaError::Unsupported(format!("poles of {e}")))
}
