//! ρ-conjugates and the two-function conjugate decomposition.
//!
//! `(f)*_ρ(u) = sup_y −(ρ/2)‖y‖² + ⟨u, y⟩ − f(y)`, the classical conjugate of
//! `f + (ρ/2)‖·‖²`. For separable `f` the sup splits into one-dimensional sups,
//! so the lattice maximum over the box equals the sum of per-axis maxima.
//! When the objective is concave (`ρ ≥ f.rho`) each axis is also maximized
//! exactly over ℝ, which yields an upper bound and settles the tail.

use serde::{Deserialize, Serialize};

use crate::catalog::FunctionSpec;
use crate::error::{ensure_nonneg, Result, WcError};
use crate::grid::{scan_min, GridDomain, Status, Tolerance, Verdict};
use crate::scalar::{golden_min, maximize_concave};
use crate::vector::{dot, norm_sq, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Exactness {
    Analytic,
    Grid,
}

/// A conjugate value with its provenance.
///
/// For [`Exactness::Grid`], `value` is the lattice maximum (a lower bound of
/// the true sup) and `upper` an upper bound, `+∞` when none is available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateValue {
    pub value: f64,
    pub argsup: Option<Vector>,
    pub exactness: Exactness,
    pub upper: f64,
    /// The sup outside the box does not exceed the sup inside it.
    pub tail_discharged: bool,
}

impl ConjugateValue {
    /// `upper − value`, the width of the enclosure of the true sup.
    pub fn width(&self) -> f64 {
        if self.value.is_infinite() && self.upper.is_infinite() {
            0.0
        } else {
            self.upper - self.value
        }
    }
}

fn concave_ok(f: &FunctionSpec, rho: f64) -> bool {
    rho >= f.rho - 1e-12
}

/// Per-axis pieces of the conjugate objective `ψᵢ(t) = uᵢt − (ρ/2)t² − φᵢ(t)`.
struct AxisSup {
    grid: f64,
    grid_arg: f64,
    full: f64,
    inside: f64,
    outside: f64,
}

fn axis_sup(f: &FunctionSpec, rho: f64, i: usize, ui: f64, axis: &[f64], exact: bool) -> AxisSup {
    let psi = |t: f64| ui * t - 0.5 * rho * t * t - f.coord_value(i, t);
    let mut grid = f64::NEG_INFINITY;
    let mut grid_arg = axis[0];
    for &t in axis {
        let v = psi(t);
        if v > grid {
            grid = v;
            grid_arg = t;
        }
    }
    if !exact {
        return AxisSup { grid, grid_arg, full: f64::INFINITY, inside: f64::INFINITY, outside: f64::INFINITY };
    }
    let dpsi = |t: f64| {
        let (dm, dp) = f.coord_deriv(i, t);
        (ui - rho * t - dm, ui - rho * t - dp)
    };
    let kinks = f.kinks();
    let (lo, hi) = (axis[0], *axis.last().unwrap());
    let sup = |a: f64, b: f64, hint: f64| maximize_concave(psi, dpsi, a, b, &kinks, hint).map_or(f64::INFINITY, |r| r.1.max(psi(hint.clamp(a, b))));
    let inside = sup(lo, hi, grid_arg).max(grid);
    let left = sup(f64::NEG_INFINITY, lo, lo);
    let right = sup(hi, f64::INFINITY, hi);
    let outside = left.max(right);
    AxisSup { grid, grid_arg, full: inside.max(outside), inside, outside }
}

/// `(f)*_ρ(u)` by the lattice path, regardless of closed forms.
pub fn rho_conjugate_grid(f: &FunctionSpec, rho: f64, u: &Vector, domain: &GridDomain, tol: &Tolerance) -> Result<ConjugateValue> {
    ensure_nonneg("rho", rho)?;
    domain.check_dim(u)?;
    f.check_dim(u.dim())?;
    let exact = concave_ok(f, rho);
    let sups: Vec<AxisSup> = (0..u.dim()).map(|i| axis_sup(f, rho, i, u[i], &domain.axis(i), exact)).collect();
    let value: f64 = sups.iter().map(|s| s.grid).sum();
    let argsup = Vector::new(sups.iter().map(|s| s.grid_arg).collect());
    if exact {
        let full: f64 = sups.iter().map(|s| s.full).sum();
        let inside: f64 = sups.iter().map(|s| s.inside).sum();
        let tail = (0..sups.len())
            .map(|i| sups[i].outside + full - sups[i].full)
            .fold(f64::NEG_INFINITY, f64::max);
        let tail_discharged = tail <= inside + tol.abs_tol;
        return Ok(ConjugateValue { value, argsup: Some(argsup), exactness: Exactness::Grid, upper: full.max(value), tail_discharged });
    }
    // Non-concave objective: bound the tail with the minorant and the box
    // with a Lipschitz estimate.
    let n = u.dim();
    let m = f.minorant(n);
    let r0 = domain.origin_depth();
    let slope = u.norm() + m.c1;
    let curv = rho - m.c2;
    let tail = if curv > 0.0 {
        let r = (slope / curv).max(r0);
        -m.c0 + slope * r - 0.5 * curv * r * r
    } else if curv == 0.0 && slope <= 0.0 {
        -m.c0 + slope * r0
    } else {
        f64::INFINITY
    };
    let lip = u.norm() + rho * domain.radius() + f.lipschitz_on(domain);
    let box_upper = value + lip * domain.step() * (n as f64).sqrt() / 2.0;
    let tail_discharged = tail <= value + tol.abs_tol;
    let upper = if tail_discharged { box_upper } else { f64::INFINITY };
    Ok(ConjugateValue { value, argsup: Some(argsup), exactness: Exactness::Grid, upper, tail_discharged })
}

/// `(f)*_ρ(u)`: closed form when the catalog has one, lattice otherwise.
pub fn rho_conjugate(f: &FunctionSpec, rho: f64, u: &Vector, domain: &GridDomain, tol: &Tolerance) -> Result<ConjugateValue> {
    ensure_nonneg("rho", rho)?;
    domain.check_dim(u)?;
    f.check_dim(u.dim())?;
    if let Some((value, argsup)) = f.analytic_conjugate(rho, u) {
        return Ok(ConjugateValue { value, argsup, exactness: Exactness::Analytic, upper: value, tail_discharged: true });
    }
    rho_conjugate_grid(f, rho, u, domain, tol)
}

/// Reference lattice maximum by full enumeration of the product grid.
pub fn rho_conjugate_bruteforce(f: &FunctionSpec, rho: f64, u: &Vector, domain: &GridDomain) -> Result<(f64, Vector)> {
    domain.check_dim(u)?;
    let out = scan_min(domain, f64::NEG_INFINITY, |y| Some(-(dot(u, y) - 0.5 * rho * norm_sq(y) - f.eval(y))))?;
    let arg = out.argmin.ok_or_else(|| WcError::Inconclusive("empty grid".into()))?;
    Ok((-out.min, domain.point(arg)))
}

/// Agreement of `(f)*_ρ` with the classical conjugate of `f + (ρ/2)‖·‖²` at
/// every `u` in `us`.
///
/// The margin is the smallest remaining tolerance; the witness is the worst
/// `u`. When one side is a closed form the lattice enclosure width is added
/// to the tolerance.
pub fn conjugate_identity_check(f: &FunctionSpec, rho: f64, us: &[Vector], domain: &GridDomain, tol: &Tolerance) -> Result<Verdict> {
    ensure_nonneg("rho", rho)?;
    let g = f.convexified(rho);
    let mut worst = (f64::INFINITY, None);
    let mut inconclusive = None;
    for u in us {
        let a = rho_conjugate(f, rho, u, domain, tol)?;
        let b = rho_conjugate_grid(&g, 0.0, u, domain, tol)?;
        let margin = if a.value.is_infinite() {
            if b.upper.is_infinite() {
                tol.abs_tol
            } else {
                f64::NEG_INFINITY
            }
        } else {
            if !b.tail_discharged {
                inconclusive.get_or_insert_with(|| u.clone());
            }
            let slack = if a.exactness == Exactness::Analytic && b.upper.is_finite() { b.width() } else { 0.0 };
            tol.abs_tol + tol.grid_slop + slack - (a.value - b.value).abs()
        };
        if margin < worst.0 || worst.1.is_none() {
            worst = (margin, Some(u.clone()));
        }
    }
    let (margin, witness) = worst;
    if margin < 0.0 {
        return Ok(Verdict::fails(margin, witness, "ρ-conjugate and convexified conjugate disagree"));
    }
    if let Some(u) = inconclusive {
        return Ok(Verdict::inconclusive(margin, Some(u), "lattice sup may miss the tail"));
    }
    Ok(Verdict { status: Status::Holds, margin, witness, first_violation: None, reason: None })
}

/// Output of [`conjugate_sum_decompose`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub p0: Vector,
    pub p1: Vector,
    /// `(f₀)*_{ρ₀}(p₀) + (f₁)*_{ρ₁}(p₁)`.
    pub value: f64,
    /// `(f₀ + f₁)*_{ρ₀+ρ₁}(s)` computed directly.
    pub joint: ConjugateValue,
    /// Both part conjugates were evaluated exactly, by closed form or by
    /// concave maximization over ℝ.
    pub exact_parts: bool,
}

/// One coordinate of `(f)*_ρ`: closed form, exact concave maximization over
/// ℝ, or the lattice maximum on `axis`, in that order of preference.
fn coord_conjugate(f: &FunctionSpec, rho: f64, i: usize, p: f64, axis: &[f64]) -> f64 {
    if let Some(v) = f.coord_conjugate(i, p, rho) {
        return v;
    }
    if concave_ok(f, rho) {
        let psi = |t: f64| p * t - 0.5 * rho * t * t - f.coord_value(i, t);
        let dpsi = |t: f64| {
            let (dm, dp) = f.coord_deriv(i, t);
            (p - rho * t - dm, p - rho * t - dp)
        };
        return maximize_concave(psi, dpsi, f64::NEG_INFINITY, f64::INFINITY, &f.kinks(), 0.0).map_or(f64::INFINITY, |r| r.1);
    }
    axis.iter()
        .map(|&t| p * t - 0.5 * rho * t * t - f.coord_value(i, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether [`part_conjugate`] is exact for `(f, ρ)` rather than a lattice value.
pub(crate) fn part_conjugate_exact(f: &FunctionSpec, rho: f64) -> bool {
    f.has_analytic_conjugate || concave_ok(f, rho)
}

/// `(f)*_ρ(p)` evaluated the same way [`conjugate_sum_decompose`] evaluates
/// its parts.
pub(crate) fn part_conjugate(f: &FunctionSpec, rho: f64, p: &Vector, domain: &GridDomain) -> f64 {
    (0..p.dim()).map(|i| coord_conjugate(f, rho, i, p[i], &domain.axis(i))).sum()
}

/// `min_{p₀ + p₁ = s} (f₀)*_{ρ₀}(p₀) + (f₁)*_{ρ₁}(p₁)` over a `p₀` lattice of
/// the same extent as `domain`, refined by golden section within one step.
///
/// Ties on the lattice go to the smallest `|p₀|`, then the smallest `p₀`, per
/// coordinate. Fails with [`WcError::Inconclusive`] when the minimum is not
/// within tolerance of the joint conjugate.
pub fn conjugate_sum_decompose(
    f0: &FunctionSpec,
    rho0: f64,
    f1: &FunctionSpec,
    rho1: f64,
    s: &Vector,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Decomposition> {
    ensure_nonneg("rho0", rho0)?;
    ensure_nonneg("rho1", rho1)?;
    domain.check_dim(s)?;
    f0.check_dim(s.dim())?;
    f1.check_dim(s.dim())?;
    let n = s.dim();
    let mut p0 = Vec::with_capacity(n);
    let mut value = 0.0;
    for i in 0..n {
        let axis = domain.axis(i);
        let obj = |p: f64| coord_conjugate(f0, rho0, i, p, &axis) + coord_conjugate(f1, rho1, i, s[i] - p, &axis);
        let mut best: Option<(f64, f64)> = None;
        // Mirrored lattice points and the ends keep one-point domains, such as
        // that of a part convexified exactly to an affine function, reachable.
        let candidates = axis.iter().copied().chain(axis.iter().map(|t| s[i] - t)).chain([0.0, s[i]]);
        for p in candidates {
            let v = obj(p);
            if !v.is_finite() {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bv)) => v < bv || (v == bv && (p.abs() < bp.abs() || (p.abs() == bp.abs() && p < bp))),
            };
            if better {
                best = Some((p, v));
            }
        }
        let Some((mut bp, mut bv)) = best else {
            return Err(WcError::InvalidArgument(format!(
                "s = {s} lies outside the domain of the part conjugates on axis {i}"
            )));
        };
        let h = domain.step();
        let (lo, hi) = ((bp - h).max(axis[0]), (bp + h).min(*axis.last().unwrap()));
        let (rp, rv) = if lo < hi {
            golden_min(|p| { let v = obj(p); if v.is_nan() { f64::INFINITY } else { v } }, lo, hi, 200)
        } else {
            (bp, bv)
        };
        if rv < bv - 1e-15 * (1.0 + bv.abs()) {
            bp = rp;
            bv = rv;
        }
        p0.push(bp);
        value += bv;
    }
    let p0 = Vector::new(p0);
    let p1 = s - &p0;
    let sum = FunctionSpec::sum(&[f0.clone(), f1.clone()])?;
    let joint = rho_conjugate(&sum, rho0 + rho1, s, domain, tol)?;
    let reference = if joint.upper.is_finite() { joint.upper } else { joint.value };
    if value > reference + tol.abs_tol + tol.grid_slop {
        return Err(WcError::Inconclusive(format!(
            "decomposition value {value} exceeds the joint conjugate {reference} (p₀ lattice too coarse or too narrow)"
        )));
    }
    Ok(Decomposition {
        p0,
        p1,
        value,
        joint,
        exact_parts: part_conjugate_exact(f0, rho0) && part_conjugate_exact(f1, rho1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::function;
    use approx::assert_abs_diff_eq;

    fn d1() -> GridDomain {
        GridDomain::standard(1)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn golden_values() {
        let q = function("quadratic", &[("a", 1.0)]).unwrap();
        let c = rho_conjugate(&q, 1.0, &Vector::scalar(2.0), &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(c.value, 1.0);
        assert_abs_diff_eq!(c.argsup.unwrap()[0], 1.0);
        let a = function("abs", &[]).unwrap();
        assert_eq!(rho_conjugate(&a, 0.0, &Vector::scalar(0.5), &d1(), &tol()).unwrap().value, 0.0);
        let c = rho_conjugate(&a, 1.0, &Vector::scalar(3.0), &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(c.value, 2.0);
        assert_abs_diff_eq!(c.argsup.unwrap()[0], 2.0);
    }

    #[test]
    fn grid_path_brackets_truth() {
        let a = function("abs", &[]).unwrap();
        let c = rho_conjugate_grid(&a, 1.0, &Vector::scalar(3.0), &d1(), &tol()).unwrap();
        assert!(c.value <= 2.0 + 1e-12 && c.upper >= 2.0 - 1e-12);
        assert!(c.width() < 1e-9);
        assert!(c.tail_discharged);
        let wide = rho_conjugate_grid(&a, 1.0, &Vector::scalar(8.0), &d1(), &tol()).unwrap();
        assert!(!wide.tail_discharged);
        assert_abs_diff_eq!(wide.upper, 24.5, epsilon = 1e-9);
    }

    #[test]
    fn identity_examples() {
        let t = tol();
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        assert!(conjugate_identity_check(&nq, 1.0, &[Vector::scalar(0.0)], &d1(), &t).unwrap().is_holds());
        let a = function("abs", &[]).unwrap();
        assert!(conjugate_identity_check(&a, 1.0, &[Vector::scalar(3.0)], &d1(), &t).unwrap().is_holds());
        let m = function("mcp", &[("lambda", 1.0), ("gamma", 2.0)]).unwrap();
        let v = conjugate_identity_check(&m, 0.5, &[Vector::scalar(1.0)], &d1(), &Tolerance::new(1e-6, 0.0).unwrap()).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn decomposition_examples() {
        let t = tol();
        let d = d1();
        let q = function("quadratic", &[("a", 1.0)]).unwrap();
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        let r = conjugate_sum_decompose(&q, 0.0, &nq, 1.0, &Vector::scalar(0.0), &d, &t).unwrap();
        assert_eq!((r.p0[0], r.p1[0], r.value), (0.0, 0.0, 0.0));

        let q2 = function("quadratic", &[("a", 1.0), ("c", 2.0)]).unwrap();
        let a = function("abs", &[]).unwrap();
        let r = conjugate_sum_decompose(&q2, 0.0, &a, 0.0, &Vector::scalar(0.0), &d, &t).unwrap();
        assert_abs_diff_eq!(r.p0[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p1[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, -1.5, epsilon = 1e-12);

        let r = conjugate_sum_decompose(&a, 0.0, &a, 0.0, &Vector::scalar(0.0), &d, &t).unwrap();
        assert_eq!((r.p0[0], r.p1[0], r.value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn separable_sup_matches_product_grid() {
        let d = GridDomain::cube(2, -2.0, 2.0, 0.1).unwrap();
        let f = function("mcp", &[("lambda", 1.0), ("gamma", 2.0)]).unwrap();
        let u = Vector::new(vec![0.7, -1.3]);
        let c = rho_conjugate_grid(&f, 0.5, &u, &d, &tol()).unwrap();
        let (bv, barg) = rho_conjugate_bruteforce(&f, 0.5, &u, &d).unwrap();
        assert_abs_diff_eq!(c.value, bv, epsilon = 1e-12);
        assert_abs_diff_eq!(c.argsup.unwrap().dist(&barg), 0.0, epsilon = 1e-12);
    }
}
