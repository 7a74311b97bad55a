use std::f64::consts::PI;
use std::time::Instant;

use fermat_core::elliptic::{wp_pair_guarded, wp_zeros_in_cell};
use fermat_core::{equianharmonic_lattice, wp, wp_prime, Complex64, SamplePlan};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// Lattice sum `z⁻² + Σ' ((z−p)⁻² − p⁻²)` truncated to the hexagon
/// `max(|m|, |n|, |m+n|) ≤ M`, which keeps the rotational symmetry.
fn wp_lattice_sum(z: Complex64, shells: i64) -> Complex64 {
    let l = equianharmonic_lattice();
    let mut s = z.powi(-2);
    for m in -shells..=shells {
        for n in -shells..=shells {
            if (m, n) == (0, 0) || m.abs().max(n.abs()).max((m + n).abs()) > shells {
                continue;
            }
            let p = l.point(m, n);
            s += (z - p).powi(-2) - p.powi(-2);
        }
    }
    s
}

/// Adaptive Simpson on `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[test]
fn half_period_matches_gamma_closed_form() {
    let l = equianharmonic_lattice();
    let closed = gamma(1.0 / 3.0).powi(3) / (4.0 * PI);
    assert!((l.half_period - closed).abs() < 1e-14, "{} vs {closed}", l.half_period);
}

#[test]
fn half_period_matches_independent_quadrature() {
    // t = e1/s², s = 1 − v²: ∫ 4 e1 v / √(1 − (1−v²)⁶) dv over [0, 1], smooth at v = 0.
    let l = equianharmonic_lattice();
    let e1 = l.e1;
    let g = |v: f64| {
        if v == 0.0 {
            return 4.0 * e1 / 6f64.sqrt();
        }
        let s = 1.0 - v * v;
        4.0 * e1 * v / (1.0 - s.powi(6)).sqrt()
    };
    let q = simpson(&g, 0.0, 1.0, 1e-14);
    assert!((l.half_period - q).abs() < 1e-11, "{} vs {q}", l.half_period);
}

#[test]
fn lattice_geometry() {
    let l = equianharmonic_lattice();
    assert!((l.e1 - 0.25f64.cbrt()).abs() < 1e-16);
    assert!((l.omega1.re - 2.0 * l.half_period).abs() < 1e-15);
    assert!((l.area - l.omega1.norm_sqr() * 3f64.sqrt() / 2.0).abs() < 1e-12);
    // ℘(ω₁/2) = e1 and ℘′ vanishes there.
    let (p, dp) = wp_pair_guarded(l.omega1 / 2.0, 1e-12).unwrap();
    assert!((p - l.e1).norm() < 1e-13, "{p}");
    assert!(dp.norm() < 1e-12, "{dp}");
}

#[test]
fn agrees_with_lattice_sum() {
    let plan = SamplePlan::annulus(0.2, 4.0).with_count(20).with_seed(9);
    for z in plan.candidates(20) {
        let l = equianharmonic_lattice();
        if l.reduce(z).reduced.norm() < 0.2 {
            continue;
        }
        let direct = wp(z).unwrap();
        // Truncation error decays like M⁻⁴; one Richardson step on the cell representative.
        let w = l.reduce(z).reduced;
        let (coarse, fine) = (wp_lattice_sum(w, 60), wp_lattice_sum(w, 120));
        let oracle = fine + (fine - coarse) / 15.0;
        assert!((direct - oracle).norm() < 1e-9 * direct.norm().max(1.0), "z = {z}: {direct} vs {oracle}");
    }
}

#[test]
fn differential_identity_at_thousand_points() {
    let start = Instant::now();
    let plan = SamplePlan::annulus(0.5, 10.0).with_count(1000).with_seed(3);
    let mut worst = 0.0f64;
    let mut used = 0;
    for z in plan.candidates(1000) {
        let Ok((p, dp)) = wp_pair_guarded(z, 1e-6) else { continue };
        used += 1;
        let r = (dp * dp - 4.0 * p * p * p + 1.0).norm() / (1.0 + p.norm().powi(3));
        worst = worst.max(r);
    }
    assert!(used > 990);
    assert!(worst < 1e-9, "{worst}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn zeros_in_cell() {
    let l = equianharmonic_lattice();
    let zeros = wp_zeros_in_cell();
    assert_eq!(zeros.len(), 2);
    let third = (l.omega1 + l.omega2) / 3.0;
    for q in zeros {
        assert!(wp(q).unwrap().norm() < 1e-12);
        let d1 = l.reduce(q - third).reduced.norm();
        let d2 = l.reduce(q + third).reduced.norm();
        assert!(d1.min(d2) < 1e-10, "{q}");
    }
}

fn away_from_lattice(z: Complex64) -> bool {
    equianharmonic_lattice().reduce(z).reduced.norm() > 0.05
}

proptest! {
    #[test]
    fn periodic_in_both_periods(re in -8.0..8.0f64, im in -8.0..8.0f64, m in -3i64..=3, n in -3i64..=3) {
        let z = Complex64::new(re, im);
        prop_assume!(away_from_lattice(z));
        let l = equianharmonic_lattice();
        let p = l.point(m, n);
        let a = wp(z).unwrap();
        let b = wp(z + p).unwrap();
        prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        let da = wp_prime(z).unwrap();
        let db = wp_prime(z + p).unwrap();
        prop_assert!((da - db).norm() < 1e-9 * da.norm().max(1.0));
    }

    #[test]
    fn parity_and_rotation(re in -4.0..4.0f64, im in -4.0..4.0f64) {
        let z = Complex64::new(re, im);
        prop_assume!(away_from_lattice(z));
        let a = wp(z).unwrap();
        let da = wp_prime(z).unwrap();
        prop_assert!((wp(-z).unwrap() - a).norm() < 1e-10 * a.norm().max(1.0));
        prop_assert!((wp_prime(-z).unwrap() + da).norm() < 1e-10 * da.norm().max(1.0));
        // Hexagonal symmetry: ℘(ρz) = ρ℘(z) with ρ = e^{2πi/3}.
        let rho = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        prop_assert!((wp(rho * z).unwrap() - rho * a).norm() < 1e-10 * a.norm().max(1.0));
        // Real lattice: ℘(z̄) = conj ℘(z).
        prop_assert!((wp(z.conj()).unwrap() - a.conj()).norm() < 1e-10 * a.norm().max(1.0));
    }
}
