//! One-dimensional minimization helpers.

/// Golden-section search for a unimodal `f` on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if b - a <= f64::EPSILON * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let fa = f(a);
    let fb = f(b);
    [(a, fa), (c, fc), (d, fd), (b, fb)]
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Exact minimization of a convex function of one variable on `[lo, hi]`
/// (either end may be infinite) by bisection on its one-sided derivatives.
///
/// `deriv(t)` returns `(f'₋(t), f'₊(t))`. Returns `None` when no minimizer is
/// found within `|t| ≤ 1e6`, which callers treat as unbounded below. Farther
/// out, cancellation between quadratic terms swamps shallow slopes.
pub(crate) fn minimize_convex<V, D>(
    value: V,
    deriv: D,
    lo: f64,
    hi: f64,
    kinks: &[f64],
    hint: f64,
) -> Option<(f64, f64)>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> (f64, f64),
{
    const REACH: f64 = 1e6;
    if lo.is_finite() && deriv(lo).1 >= 0.0 {
        return Some((lo, value(lo)));
    }
    if hi.is_finite() && deriv(hi).0 <= 0.0 {
        return Some((hi, value(hi)));
    }
    let t0 = hint.clamp(lo, hi);
    let (dm, dp) = deriv(t0);
    let (mut a, mut b);
    if dm <= 0.0 && dp >= 0.0 {
        return Some((t0, value(t0)));
    } else if dm > 0.0 {
        b = t0;
        let mut step = 1.0;
        loop {
            let t = t0 - step;
            if lo.is_finite() && t <= lo {
                a = lo;
                break;
            }
            if t < -REACH {
                return None;
            }
            let (em, ep) = deriv(t);
            if ep < 0.0 {
                a = t;
                break;
            }
            if em <= 0.0 {
                return Some((t, value(t)));
            }
            b = t;
            step *= 2.0;
        }
    } else {
        a = t0;
        let mut step = 1.0;
        loop {
            let t = t0 + step;
            if hi.is_finite() && t >= hi {
                b = hi;
                break;
            }
            if t > REACH {
                return None;
            }
            let (em, ep) = deriv(t);
            if em > 0.0 {
                b = t;
                break;
            }
            if ep >= 0.0 {
                return Some((t, value(t)));
            }
            a = t;
            step *= 2.0;
        }
    }
    for _ in 0..256 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (em, ep) = deriv(m);
        if em > 0.0 {
            b = m;
        } else if ep < 0.0 {
            a = m;
        } else {
            return Some((m, value(m)));
        }
    }
    let span = (b - a).abs() + 1e-12 * (1.0 + a.abs());
    let mut best = (a, value(a));
    let fb = value(b);
    if fb < best.1 {
        best = (b, fb);
    }
    for &k in kinks {
        if k >= a - span && k <= b + span && k >= lo && k <= hi {
            let fk = value(k);
            if fk <= best.1 {
                best = (k, fk);
            }
        }
    }
    Some(best)
}

/// Maximum of a concave function; see [`minimize_convex`].
pub(crate) fn maximize_concave<V, D>(
    value: V,
    deriv: D,
    lo: f64,
    hi: f64,
    kinks: &[f64],
    hint: f64,
) -> Option<(f64, f64)>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> (f64, f64),
{
    minimize_convex(
        |t| -value(t),
        |t| {
            let (m, p) = deriv(t);
            (-m, -p)
        },
        lo,
        hi,
        kinks,
        hint,
    )
    .map(|(t, v)| (t, -v))
}
