//! Weierstrass `℘` for the equianharmonic lattice, normalized so that
//! `(℘′)² = 4℘³ − 1` (invariants `g₂ = 0`, `g₃ = 1`).
//!
//! Evaluation reduces the argument to the Voronoi cell of the origin, halves it
//! until `|z| < 0.35·|ω₁|`, sums the Laurent series and doubles back with the
//! duplication formulas. `℘′` is carried through the doublings alongside `℘`,
//! never recovered from a square root.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expr::DEFAULT_POLE_GUARD;

/// Reduced arguments are halved until their modulus drops below this fraction of `|ω₁|`.
pub const HALVING_THRESHOLD: f64 = 0.35;

const COEFFICIENT_TABLE_LEN: usize = 40;
const SERIES_EPS: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("argument {at} lies within the pole guard of a lattice point")]
pub struct PoleHit {
    pub at: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    /// Real, positive fundamental period.
    pub omega1: Complex64,
    /// `ω₁·e^{iπ/3}`.
    pub omega2: Complex64,
    /// Area of the period parallelogram spanned by `ω₁`, `ω₂`.
    pub area: f64,
    /// Real root of `4t³ − 1`, equal to `℘(ω₁/2)`.
    pub e1: f64,
    /// Real half-period `ω₁/2 = ∫_{e1}^{∞} dt/√(4t³ − 1)`.
    pub half_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellReduction {
    /// Representative of the input nearest the origin.
    pub reduced: Complex64,
    /// The subtracted lattice point `m·ω₁ + n·ω₂`.
    pub lattice_point: Complex64,
    pub m: i64,
    pub n: i64,
}

struct Engine {
    lattice: Lattice,
    /// `a[j-1]` multiplies `z^{6j-2}` in `℘(z) − z⁻²`, `j ≥ 1`.
    coefficients: Vec<f64>,
}

fn engine() -> &'static Engine {
    static ENGINE: OnceLock<Engine> = OnceLock::new();
    ENGINE.get_or_init(|| {
        let e1 = 0.25f64.cbrt();
        let half_period = real_half_period(e1);
        let omega1 = Complex64::new(2.0 * half_period, 0.0);
        let omega2 = omega1 * Complex64::from_polar(1.0, PI / 3.0);
        let area = (omega1.conj() * omega2).im.abs();
        Engine {
            lattice: Lattice {
                omega1,
                omega2,
                area,
                e1,
                half_period,
            },
            coefficients: laurent_coefficients(COEFFICIENT_TABLE_LEN),
        }
    })
}

/// `∫_{e1}^{∞} dt/√(4t³−1)`.
///
/// With `t = e1 + tan²φ` the integrand becomes
/// `(sin⁴φ + 3e1 sin²φ cos²φ + 3e1² cos⁴φ)^{-1/2}`, which is analytic, even and
/// π-periodic, so the trapezoid rule over a full period converges geometrically.
fn real_half_period(e1: f64) -> f64 {
    let g = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let (s2, c2) = (s * s, c * c);
        1.0 / (s2 * s2 + 3.0 * e1 * s2 * c2 + 3.0 * e1 * e1 * c2 * c2).sqrt()
    };
    let mut n = 8usize;
    let mut sum: f64 = (0..n).map(|j| g(j as f64 * PI / n as f64)).sum();
    let mut estimate = 0.5 * PI * sum / n as f64;
    loop {
        // Nested refinement reuses the previous nodes.
        let mid: f64 = (0..n).map(|j| g((j as f64 + 0.5) * PI / n as f64)).sum();
        sum += mid;
        n *= 2;
        let next = 0.5 * PI * sum / n as f64;
        if (next - estimate).abs() <= 1e-16 * next || n >= 1 << 16 {
            return next;
        }
        estimate = next;
    }
}

/// Laurent coefficients `c_k` of `℘(z) = z⁻² + Σ_{k≥2} c_k z^{2k−2}` for
/// `g₂ = 0`, `g₃ = 1`: `c₂ = 0`, `c₃ = 1/28`, and for `k ≥ 4`
/// `c_k = 3/((2k+1)(k−3)) Σ_{m=2}^{k−2} c_m c_{k−m}`.
/// Only `c_{3j}` are nonzero; they are returned as `a_j = c_{3j}`, `j = 1..=len`.
fn laurent_coefficients(len: usize) -> Vec<f64> {
    let kmax = 3 * len;
    let mut c = vec![0.0f64; kmax + 1];
    c[3] = 1.0 / 28.0;
    for k in 4..=kmax {
        let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
        c[k] = 3.0 * s / (((2 * k + 1) * (k - 3)) as f64);
    }
    (1..=len).map(|j| c[3 * j]).collect()
}

/// The cached equianharmonic lattice with `ω₁` real and positive.
pub fn equianharmonic_lattice() -> Lattice {
    engine().lattice
}

impl Lattice {
    pub fn point(&self, m: i64, n: i64) -> Complex64 {
        self.omega1 * m as f64 + self.omega2 * n as f64
    }

    /// Real coordinates `(x, y)` with `z = x·ω₁ + y·ω₂`.
    pub fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.omega2.im;
        let x = (z.re - y * self.omega2.re) / self.omega1.re;
        (x, y)
    }

    /// Radius of the circle circumscribing the Voronoi cell, `|ω₁|/√3`.
    pub fn circumradius(&self) -> f64 {
        self.omega1.norm() / 3f64.sqrt()
    }

    /// Nearest lattice point to `z`; ties go to the lexicographically smallest `(m, n)`.
    pub fn reduce(&self, z: Complex64) -> CellReduction {
        let (x, y) = self.coordinates(z);
        let (m0, n0) = (x.floor() as i64, y.floor() as i64);
        let mut best = (i64::MAX, i64::MAX, f64::INFINITY);
        for m in m0 - 1..=m0 + 2 {
            for n in n0 - 1..=n0 + 2 {
                let d = (z - self.point(m, n)).norm_sqr();
                if d < best.2 {
                    best = (m, n, d);
                }
            }
        }
        let (m, n, _) = best;
        let lattice_point = self.point(m, n);
        CellReduction {
            reduced: z - lattice_point,
            lattice_point,
            m,
            n,
        }
    }

    /// Calls `visit(m, n, point)` for every lattice point `p` with
    /// `|p − center| ≤ radius`, in increasing `(m, n)` order.
    pub fn for_each_point_in_disc(
        &self,
        center: Complex64,
        radius: f64,
        mut visit: impl FnMut(i64, i64, Complex64),
    ) {
        if radius < 0.0 {
            return;
        }
        let (cx, cy) = self.coordinates(center);
        // |x ω₁ + y ω₂| ≥ max(|x|,|y|)·|ω₁|·sin(π/3)
        let reach = radius / (self.omega1.norm() * (PI / 3.0).sin()) + 1.0;
        let r2 = radius * radius;
        let n_lo = (cy - reach).floor() as i64;
        let n_hi = (cy + reach).ceil() as i64;
        let m_lo = (cx - reach).floor() as i64;
        let m_hi = (cx + reach).ceil() as i64;
        for m in m_lo..=m_hi {
            for n in n_lo..=n_hi {
                let p = self.point(m, n);
                if (p - center).norm_sqr() <= r2 {
                    visit(m, n, p);
                }
            }
        }
    }
}

/// `(℘, ℘′)` by direct Laurent summation; accurate for `|z|` well inside `|ω₁|`.
pub fn laurent_pair(z: Complex64) -> (Complex64, Complex64) {
    let eng = engine();
    let z2 = z * z;
    let u = z2 * z2 * z2;
    let un = u.norm();
    // Number of terms: stop once the next term is below SERIES_EPS relative.
    let mut terms = 0;
    let mut mag = 1.0;
    for a in &eng.coefficients {
        mag *= un;
        if a.abs() * mag < SERIES_EPS {
            break;
        }
        terms += 1;
    }
    let mut s = Complex64::new(0.0, 0.0);
    let mut sd = Complex64::new(0.0, 0.0);
    for j in (1..=terms).rev() {
        let a = eng.coefficients[j - 1];
        s = (s + a) * u;
        sd = (sd + a * (6 * j - 2) as f64) * u;
    }
    let inv_z2 = 1.0 / z2;
    let wp = inv_z2 * (1.0 + s);
    let wpd = inv_z2 / z * (sd - 2.0);
    (wp, wpd)
}

/// Number of Laurent terms used at modulus `r`.
pub fn series_terms_at(r: f64) -> usize {
    let eng = engine();
    let un = r.powi(6);
    let mut mag = 1.0;
    let mut terms = 0;
    for a in &eng.coefficients {
        mag *= un;
        if a.abs() * mag < SERIES_EPS {
            break;
        }
        terms += 1;
    }
    terms
}

/// `(℘(z), ℘′(z))`, or [`PoleHit`] when the reduced argument is within `guard` of 0.
pub fn wp_pair_guarded(z: Complex64, guard: f64) -> Result<(Complex64, Complex64), PoleHit> {
    let eng = engine();
    let red = eng.lattice.reduce(z).reduced;
    if red.norm() < guard {
        return Err(PoleHit { at: z });
    }
    let limit = HALVING_THRESHOLD * eng.lattice.omega1.norm();
    let mut w = red;
    let mut halvings = 0;
    while w.norm() >= limit {
        w *= 0.5;
        halvings += 1;
    }
    let (mut p, mut q) = laurent_pair(w);
    for _ in 0..halvings {
        // ℘(2w) = 9℘⁴/℘′² − 2℘,  ℘′(2w) = 18℘³/℘′ − 54℘⁶/℘′³ − ℘′
        let p3 = p * p * p;
        let q2 = q * q;
        let p2 = 9.0 * p3 * p / q2 - 2.0 * p;
        let q2w = 18.0 * p3 / q - 54.0 * p3 * p3 / (q2 * q) - q;
        p = p2;
        q = q2w;
    }
    Ok((p, q))
}

pub fn wp_guarded(z: Complex64, guard: f64) -> Result<Complex64, PoleHit> {
    wp_pair_guarded(z, guard).map(|(p, _)| p)
}

pub fn wp_prime_guarded(z: Complex64, guard: f64) -> Result<Complex64, PoleHit> {
    wp_pair_guarded(z, guard).map(|(_, q)| q)
}

/// `℘(z)` with the default pole guard.
pub fn wp(z: Complex64) -> Result<Complex64, PoleHit> {
    wp_guarded(z, DEFAULT_POLE_GUARD)
}

/// `℘′(z)` with the default pole guard.
pub fn wp_prime(z: Complex64) -> Result<Complex64, PoleHit> {
    wp_prime_guarded(z, DEFAULT_POLE_GUARD)
}

/// Zeros of `℘` in the half-open period parallelogram `{xω₁ + yω₂ : 0 ≤ x, y < 1}`,
/// found by Newton iteration from a grid of seeds and deduplicated modulo the lattice.
pub fn wp_zeros_in_cell() -> Vec<Complex64> {
    let l = equianharmonic_lattice();
    let mut found: Vec<Complex64> = Vec::new();
    let grid = 8;
    for i in 0..grid {
        for j in 0..grid {
            let mut z = l.omega1 * ((i as f64 + 0.5) / grid as f64)
                + l.omega2 * ((j as f64 + 0.5) / grid as f64);
            let mut converged = false;
            for _ in 0..60 {
                let Ok((p, q)) = wp_pair_guarded(z, 1e-3) else { break };
                if q.norm() < 1e-12 {
                    break;
                }
                let step = p / q;
                // Damped to keep seeds in their basin.
                let step = if step.norm() > 0.5 { step * (0.5 / step.norm()) } else { step };
                z -= step;
                if step.norm() < 1e-15 * z.norm().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged || wp(z).map(|p| p.norm() > 1e-12).unwrap_or(true) {
                continue;
            }
            let (x, y) = l.coordinates(z);
            let (mut x, mut y) = (x - x.floor(), y - y.floor());
            if x > 1.0 - 1e-12 {
                x = 0.0;
            }
            if y > 1.0 - 1e-12 {
                y = 0.0;
            }
            let z = l.omega1 * x + l.omega2 * y;
            if !found.iter().any(|f| (f - z).norm() < 1e-8) {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    found
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeDiagnostics {
    pub lattice: Lattice,
    pub coefficient_table_len: usize,
    pub halving_threshold: f64,
    /// Laurent terms used at the halving threshold radius.
    pub series_terms_at_threshold: usize,
}

pub fn diagnostics() -> LatticeDiagnostics {
    let l = equianharmonic_lattice();
    LatticeDiagnostics {
        lattice: l,
        coefficient_table_len: engine().coefficients.len(),
        halving_threshold: HALVING_THRESHOLD,
        series_terms_at_threshold: series_terms_at(HALVING_THRESHOLD * l.omega1.norm()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Γ(1/3)³/(4π), from a 30-digit evaluation.
    #[allow(clippy::excessive_precision)]
    const HALF_PERIOD: f64 = 1.529_954_037_057_192_875;

    #[test]
    fn lattice_fields_are_consistent() {
        let l = equianharmonic_lattice();
        assert!((l.e1 - 0.629_960_524_947_436_6).abs() < 1e-14);
        assert!((4.0 * l.e1.powi(3) - 1.0).abs() < 1e-15);
        assert!((l.half_period - HALF_PERIOD).abs() < 1e-14);
        assert!((l.omega2 / l.omega1 - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-12);
        assert!((l.area - (l.omega1.conj() * l.omega2).im.abs()).abs() < 1e-15);
        assert!(l.area > 0.0);
        assert_eq!(l.omega1.im, 0.0);
    }

    #[test]
    fn coefficient_recursion_start() {
        let a = laurent_coefficients(3);
        assert_eq!(a[0], 1.0 / 28.0);
        assert!((a[1] * 10192.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_examples() {
        let l = equianharmonic_lattice();
        let r = l.reduce(c(0.0, 0.0));
        assert_eq!((r.m, r.n), (0, 0));
        assert_eq!(r.reduced, c(0.0, 0.0));
        let r = l.reduce(l.omega1);
        assert_eq!((r.m, r.n), (1, 0));
        assert!(r.reduced.norm() < 1e-15);
        let z = l.omega1 * 0.49;
        let r = l.reduce(z);
        assert_eq!((r.m, r.n), (0, 0));
        assert_eq!(r.reduced, z);
    }

    #[test]
    fn reduce_matches_brute_force() {
        let l = equianharmonic_lattice();
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut uniform = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let z = c(uniform() * 16.0 - 8.0, uniform() * 16.0 - 8.0);
            let r = l.reduce(z);
            let mut best = f64::INFINITY;
            for m in -6..=6 {
                for n in -6..=6 {
                    best = best.min((z - l.point(m, n)).norm());
                }
            }
            assert!((r.reduced.norm() - best).abs() < 1e-12);
            assert!((r.reduced + r.lattice_point - z).norm() < 1e-12);
            assert!(r.reduced.norm() <= l.circumradius() + 1e-12);
        }
    }

    #[test]
    fn principal_part_near_origin() {
        let v = wp(c(1e-3, 0.0)).unwrap();
        assert!((v - 1e6).norm() < 1e-2);
        let d = wp_prime(c(1e-3, 0.0)).unwrap();
        assert!((d + 2e9).norm() < 1.0);
    }

    #[test]
    fn half_period_values() {
        let l = equianharmonic_lattice();
        let h = c(l.half_period, 0.0);
        assert!((wp(h).unwrap() - l.e1).norm() < 1e-12);
        assert!(wp_prime(h).unwrap().norm() < 1e-8);
    }

    #[test]
    fn pole_guard_triggers_only_near_lattice() {
        let l = equianharmonic_lattice();
        assert!(wp(l.omega1 + l.omega2).is_err());
        assert!(wp(l.omega1 + c(1e-7, 0.0)).is_err());
        assert!(wp(l.omega1 + c(1e-4, 0.0)).is_ok());
    }

    #[test]
    fn halving_path_agrees_with_direct_series() {
        // Inside the Voronoi cell the series alone converges; the two routes must agree.
        let l = equianharmonic_lattice();
        for k in 0..24 {
            let theta = k as f64 * PI / 12.0 + 0.1;
            let z = Complex64::from_polar(0.95 * l.circumradius(), theta);
            let (p1, q1) = wp_pair_guarded(z, 1e-9).unwrap();
            let (p2, q2) = laurent_pair(z);
            assert!((p1 - p2).norm() <= 1e-12 * p2.norm().max(1.0), "{z}");
            assert!((q1 - q2).norm() <= 1e-12 * q2.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn two_zeros_per_cell() {
        let l = equianharmonic_lattice();
        let zeros = wp_zeros_in_cell();
        assert_eq!(zeros.len(), 2);
        let expected = [(l.omega1 + l.omega2) / 3.0, (l.omega1 + l.omega2) * (2.0 / 3.0)];
        for (z, e) in zeros.iter().zip(expected) {
            assert!((z - e).norm() < 1e-10);
            let q = wp_prime(*z).unwrap();
            assert!((q * q + 1.0).norm() < 1e-8);
        }
    }
}
