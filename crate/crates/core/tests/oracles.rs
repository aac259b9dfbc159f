//! Library values against independent computations: dense scans, bisection
//! on optimality conditions, and hand-derived closed forms.

use approx::assert_abs_diff_eq;
use wcprox::{
    function, rho_conjugate, Exactness, solve_eps_prox, standard_catalog, FunctionSpec, GridDomain, ProxQuery, Tolerance, Vector,
};

/// Minimum of `g` over a uniform scan of `[lo, hi]` with `n` intervals, then
/// golden refinement around the best sample.
fn scan_min(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let (mut bx, mut bv) = (lo, g(lo));
    for k in 1..=n {
        let x = lo + k as f64 * h;
        let v = g(x);
        if v < bv {
            bx = x;
            bv = v;
        }
    }
    let (mut a, mut b) = ((bx - h).max(lo), (bx + h).min(hi));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) <= g(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let x = 0.5 * (a + b);
    if g(x) < bv {
        (x, g(x))
    } else {
        (bx, bv)
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    assert!(g(a) * g(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) * g(a) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Scalar penalties written out independently of the catalog.
fn reference_value(name: &str, t: f64) -> f64 {
    let s = t.abs();
    match name {
        "mcp" => {
            let (l, g) = (1.0, 2.0);
            if s <= g * l {
                l * s - s * s / (2.0 * g)
            } else {
                g * l * l / 2.0
            }
        }
        "scad" => {
            let (l, a) = (1.0, 3.7);
            if s <= l {
                l * s
            } else if s <= a * l {
                -(s * s - 2.0 * a * l * s + l * l) / (2.0 * (a - 1.0))
            } else {
                (a + 1.0) * l * l / 2.0
            }
        }
        "huber" => {
            if s <= 1.0 {
                s * s / 2.0
            } else {
                s - 0.5
            }
        }
        _ => unreachable!(),
    }
}

#[test]
fn penalty_values_match_textbook_forms() {
    let cases = [
        ("mcp", function("mcp", &[("lambda", 1.0), ("gamma", 2.0)]).unwrap()),
        ("scad", function("scad", &[("lambda", 1.0), ("gamma", 3.7)]).unwrap()),
        ("huber", function("huber", &[("delta", 1.0)]).unwrap()),
    ];
    for (name, f) in &cases {
        for k in -80..=80 {
            let t = k as f64 * 0.05;
            assert_abs_diff_eq!(f.eval(&[t]), reference_value(name, t), epsilon = 1e-12);
        }
    }
}

#[test]
fn exact_prox_minimizes_the_prox_objective() {
    let ys = [-3.1, -1.7, -0.4, 0.0, 0.3, 0.95, 1.6, 2.2, 3.7];
    for desc in standard_catalog() {
        let f = desc.build().unwrap();
        if !f.has_exact_prox {
            continue;
        }
        let alpha = if f.rho > 0.0 { 0.5 / f.rho } else { 0.7 };
        for &y in &ys {
            let x = f.exact_prox(alpha, &Vector::scalar(y)).unwrap()[0];
            let obj = |t: f64| f.eval(&[t]) + (t - y) * (t - y) / (2.0 * alpha);
            let (bx, bv) = scan_min(obj, -8.0, 8.0, 16_000);
            assert!(obj(x) <= bv + 1e-10, "{desc} y={y}: prox {x} value {} vs scan {bx} value {bv}", obj(x));
            // 1/α > ρ makes the objective strongly convex, so the minimizer is unique.
            assert_abs_diff_eq!(x, bx, epsilon = 1e-5);
        }
    }
}

#[test]
fn cosquad_prox_solves_the_optimality_condition() {
    let f = function("cosquad", &[]).unwrap();
    // 0 = x/2 − sin x + (x − 2), the derivative of the prox objective at y = 2, α = 1.
    let root = bisect(|x| 1.5 * x - x.sin() - 2.0, 0.0, 4.0);
    assert_abs_diff_eq!(root, 1.9521161780106642, epsilon = 1e-12);
    let sol = solve_eps_prox(&f, f.rho, &ProxQuery::new(Vector::scalar(2.0), 1.0, 1e-10)).unwrap();
    assert_abs_diff_eq!(sol.x[0], root, epsilon = 1e-5);
    assert!(sol.gap_bound <= 1e-10);
}

#[test]
fn cosquad_minimum() {
    let f = function("cosquad", &[]).unwrap();
    let root = bisect(|x| 0.5 * x - x.sin(), 1.5, 2.5);
    let (_, v) = scan_min(|t| f.eval(&[t]), 0.0, 4.0, 40_000);
    assert_abs_diff_eq!(v, 0.5792021049470533, epsilon = 1e-12);
    assert_abs_diff_eq!(f.eval(&[root]), v, epsilon = 1e-12);
}

#[test]
fn conjugates_match_dense_scans() {
    let d = GridDomain::standard(1);
    let tol = Tolerance::default();
    let us = [-2.5, -1.2, -0.3, 0.0, 0.4, 1.1, 2.7];
    for desc in standard_catalog() {
        let f = desc.build().unwrap();
        for extra in [0.0, 0.5] {
            let rho = f.rho + extra;
            for &u in &us {
                let c = rho_conjugate(&f, rho, &Vector::scalar(u), &d, &tol).unwrap();
                let (_, neg) = scan_min(|t| -(u * t - 0.5 * rho * t * t - f.eval(&[t])), -4.0, 4.0, 8_000);
                let scan = -neg;
                // The scan sees only [-4, 4], so it is a lower bound of the true sup.
                assert!(c.upper >= scan - 1e-9, "{desc} ρ={rho} u={u}: upper {} < scan {scan}", c.upper);
                let inside = c.argsup.as_ref().is_some_and(|a| a[0].abs() < 3.9);
                if inside && c.value.is_finite() {
                    match c.exactness {
                        Exactness::Analytic => assert_abs_diff_eq!(c.value, scan, epsilon = 1e-7),
                        // A lattice maximum undershoots by at most the enclosure width.
                        Exactness::Grid => assert!(c.value <= scan + 1e-9 && scan <= c.upper + 1e-9, "{desc} ρ={rho} u={u}: {c:?} vs {scan}"),
                    }
                }
            }
        }
    }
}

#[test]
fn hand_derived_conjugates() {
    let d = GridDomain::standard(1);
    let tol = Tolerance::default();
    let value = |f: &FunctionSpec, rho: f64, u: f64| rho_conjugate(f, rho, &Vector::scalar(u), &d, &tol).unwrap().value;
    let abs = function("abs", &[]).unwrap();
    // sup −t²/2 + ut − |t| = (|u| − 1)₊²/2.
    for u in [-3.0, -0.5, 0.0, 1.5, 3.0] {
        let k = (f64::abs(u) - 1.0).max(0.0);
        assert_abs_diff_eq!(value(&abs, 1.0, u), 0.5 * k * k, epsilon = 1e-12);
    }
    // Convex conjugate of |·| is the indicator of [-1, 1].
    assert_eq!(value(&abs, 0.0, 0.7), 0.0);
    assert_eq!(value(&abs, 0.0, 1.3), f64::INFINITY);
    // (x²/2)*_ρ(u) = u²/(2(1 + ρ)).
    let q = function("quadratic", &[("a", 1.0)]).unwrap();
    for (rho, u) in [(0.0, 2.0), (1.0, 2.0), (0.5, -1.5)] {
        assert_abs_diff_eq!(value(&q, rho, u), u * u / (2.0 * (1.0 + rho)), epsilon = 1e-12);
    }
    // negquad(1) at ρ = 1 convexifies to 0, whose conjugate is the indicator of {0}.
    let nq = function("negquad", &[("a", 1.0)]).unwrap();
    assert_eq!(value(&nq, 1.0, 0.0), 0.0);
    assert_eq!(value(&nq, 1.0, 0.2), f64::INFINITY);
}
