//! Membership oracles for the proximal ε-subdifferential
//! `∂^ε_{(γ,C)} f(x₀) = {v : f(x) − f(x₀) ≥ ⟨v, x − x₀⟩ − C‖x − x₀‖^γ − ε ∀x}`.
//!
//! [`membership_grid`] enumerates the lattice and discharges the unbounded
//! remainder analytically. [`membership_via_conjugate`] decides the same
//! question through the Fenchel–Young gap of the ρ-conjugate with `ρ = 2C`.

use serde::{Deserialize, Serialize};

use crate::catalog::FunctionSpec;
use crate::conjugate::rho_conjugate;
use crate::error::{ensure_nonneg, Result, WcError};
use crate::grid::{scan_min, GridDomain, Status, Tolerance, Verdict};
use crate::scalar::minimize_convex;
use crate::vector::{dist, dist_sq, dot, Vector};

fn default_gamma() -> f64 {
    2.0
}

/// Does `v` belong to `∂^ε_{(γ,C)} f(x₀)`?
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgradientQuery {
    pub x0: Vector,
    pub v: Vector,
    pub eps: f64,
    #[serde(rename = "C", alias = "c")]
    pub c: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl SubgradientQuery {
    /// A query with `γ = 2`.
    pub fn new(x0: Vector, v: Vector, eps: f64, c: f64) -> Self {
        SubgradientQuery { x0, v, eps, c, gamma: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("eps", self.eps)?;
        ensure_nonneg("C", self.c)?;
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(WcError::InvalidArgument(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        crate::error::ensure_dim(self.x0.dim(), self.v.dim())?;
        if !(self.x0.is_finite() && self.v.is_finite()) {
            return Err(WcError::InvalidArgument("query vectors must be finite".into()));
        }
        Ok(())
    }

    fn slack(&self, f: &FunctionSpec, fx0: f64, z: &[f64]) -> f64 {
        let d2 = dist_sq(z, &self.x0);
        let pen = if self.gamma == 2.0 { d2 } else { d2.sqrt().powf(self.gamma) };
        let lin: f64 = self.v.iter().zip(z.iter().zip(self.x0.iter())).map(|(v, (z, x))| v * (z - x)).sum();
        f.eval(z) - fx0 - lin + self.c * pen + self.eps
    }
}

fn prepare(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain) -> Result<f64> {
    q.validate()?;
    domain.check_dim(&q.x0)?;
    f.check_dim(q.x0.dim())?;
    let fx0 = f.eval(&q.x0);
    if !fx0.is_finite() {
        return Err(WcError::InvalidArgument(format!("f(x0) = {fx0} is not finite")));
    }
    Ok(fx0)
}

/// Lower bound of the slack on the minorant-controlled region `‖x − x₀‖ ≥ d`.
fn minorant_tail(f: &FunctionSpec, q: &SubgradientQuery, fx0: f64, d_min: f64) -> f64 {
    let n = q.x0.dim();
    let m = f.minorant(n);
    let x0n = q.x0.norm();
    let k = m.c0 - fx0 + q.eps - m.c1 * x0n - 0.5 * m.c2 * x0n * x0n;
    let shifted = &q.v + &(&q.x0 * m.c2);
    let b = m.c1 + shifted.norm();
    if q.gamma == 2.0 {
        let a2 = q.c - 0.5 * m.c2;
        if a2 > 0.0 {
            let d = (b / (2.0 * a2)).max(d_min);
            k - b * d + a2 * d * d
        } else if a2 == 0.0 && b == 0.0 {
            k
        } else {
            f64::NEG_INFINITY
        }
    } else if m.c2 == 0.0 {
        if q.c > 0.0 {
            let d = (b / (q.c * q.gamma)).powf(1.0 / (q.gamma - 1.0)).max(d_min);
            k - b * d + q.c * d.powf(q.gamma)
        } else if b == 0.0 {
            k
        } else {
            f64::NEG_INFINITY
        }
    } else {
        f64::NEG_INFINITY
    }
}

/// Per-coordinate slack `sᵢ(t) = φᵢ(t) − φᵢ(x₀ᵢ) − vᵢ(t − x₀ᵢ) + C(t − x₀ᵢ)²`,
/// convex when `C ≥ ρ/2`. Returns `(min over [lo, hi], min over ℝ, min
/// outside (lo, hi))`, with `−∞` when unbounded below.
fn coord_slack_minima(f: &FunctionSpec, q: &SubgradientQuery, i: usize, lo: f64, hi: f64) -> (f64, f64, f64) {
    let (x, v, c) = (q.x0[i], q.v[i], q.c);
    let fx = f.coord_value(i, x);
    let s = |t: f64| f.coord_value(i, t) - fx - v * (t - x) + c * (t - x) * (t - x);
    let ds = |t: f64| {
        let (dm, dp) = f.coord_deriv(i, t);
        let lin = -v + 2.0 * c * (t - x);
        (dm + lin, dp + lin)
    };
    let kinks = f.kinks();
    let min = |a: f64, b: f64, hint: f64| minimize_convex(s, ds, a, b, &kinks, hint).map_or(f64::NEG_INFINITY, |r| r.1.min(s(hint.clamp(a, b))));
    let inside = min(lo, hi, x.clamp(lo, hi));
    let left = min(f64::NEG_INFINITY, lo, lo);
    let right = min(hi, f64::INFINITY, hi);
    let outside = left.min(right);
    (inside, inside.min(outside), outside)
}

fn separable_convex(f: &FunctionSpec, q: &SubgradientQuery) -> bool {
    q.gamma == 2.0 && q.c >= 0.5 * f.rho - 1e-12
}

/// Lower bound of the slack over all points outside the box.
fn separable_tail(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain) -> f64 {
    if !separable_convex(f, q) {
        return f64::NEG_INFINITY;
    }
    let parts: Vec<(f64, f64, f64)> =
        (0..q.x0.dim()).map(|i| coord_slack_minima(f, q, i, domain.lo()[i], domain.hi()[i])).collect();
    let all: f64 = parts.iter().map(|p| p.1).sum();
    let worst = parts
        .iter()
        .map(|p| if p.2 == f64::NEG_INFINITY || all == f64::NEG_INFINITY { f64::NEG_INFINITY } else { p.2 + all - p.1 })
        .fold(f64::INFINITY, f64::min);
    q.eps + worst
}

/// Certified lower bound of the slack beyond the lattice box.
fn tail_bound(f: &FunctionSpec, q: &SubgradientQuery, fx0: f64, domain: &GridDomain) -> f64 {
    let by_minorant = minorant_tail(f, q, fx0, domain.depth(&q.x0));
    if by_minorant >= 0.0 {
        return by_minorant;
    }
    by_minorant.max(separable_tail(f, q, domain))
}

/// How far the lattice minimum of the slack may sit above its continuous
/// minimum over the box. Available for `γ = 2` and `C ≥ ρ/2`.
pub fn grid_resolution(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain) -> Result<Option<f64>> {
    let fx0 = prepare(f, q, domain)?;
    if !separable_convex(f, q) {
        return Ok(None);
    }
    let scan = scan_min(domain, f64::NEG_INFINITY, |z| Some(q.slack(f, fx0, z)))?;
    let boxed: f64 = q.eps
        + (0..q.x0.dim())
            .map(|i| coord_slack_minima(f, q, i, domain.lo()[i], domain.hi()[i]).0)
            .sum::<f64>();
    Ok(Some((scan.min - boxed).max(0.0)))
}

/// Grid oracle for `v ∈ ∂^ε_{(γ,C)} f(x₀)`.
///
/// FAILS on any lattice violation. Otherwise HOLDS only when the region
/// beyond the box is shown violation-free, either by the catalog minorant or,
/// for `γ = 2` and `C ≥ ρ/2`, by exact per-coordinate convex minimization.
pub fn membership_grid(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain, tol: &Tolerance) -> Result<Verdict> {
    let fx0 = prepare(f, q, domain)?;
    let scan = scan_min(domain, tol.fail_threshold(), |z| Some(q.slack(f, fx0, z)))?;
    let witness = scan.argmin.map(|i| domain.point(i));
    let verdict = Verdict::from_margin(scan.min, witness, tol).with_first_violation(scan.first_below.map(|i| domain.point(i)));
    if verdict.is_fails() {
        return Ok(verdict);
    }
    let tail = tail_bound(f, q, fx0, domain);
    if tail >= -tol.abs_tol {
        return Ok(verdict);
    }
    Ok(Verdict { reason: Some(format!("tail beyond the grid not discharged (bound {tail:.3e})")), status: Status::Inconclusive, ..verdict })
}

/// Fenchel–Young gaps `(lower, upper)` of `f + (ρ/2)‖·‖²` at `x₀` for the dual
/// point `w`, plus the maximizer of the conjugate objective.
pub(crate) fn fy_gap(f: &FunctionSpec, rho: f64, x0: &Vector, w: &Vector, domain: &GridDomain, tol: &Tolerance) -> Result<(f64, f64, Option<Vector>)> {
    let conj = rho_conjugate(f, rho, w, domain, tol)?;
    let base = f.eval(x0) + 0.5 * rho * x0.norm_sq() - dot(w, x0);
    Ok((base + conj.value, base + conj.upper, conj.argsup))
}

/// Conjugate oracle for `v ∈ ∂^ε_{(2,C)} f(x₀)`, with `ρ = 2C`:
/// membership holds iff `f(x₀) + (f)*_ρ(v + ρx₀) ≤ −(ρ/2)‖x₀‖² + ⟨v + ρx₀, x₀⟩ + ε`.
///
/// Exact for closed-form conjugates. With a lattice conjugate, HOLDS needs
/// the certified upper gap below `ε`, FAILS needs the lower gap above
/// `ε + grid_slop`. The FAILS witness is the conjugate maximizer.
pub fn membership_via_conjugate(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain, tol: &Tolerance) -> Result<Verdict> {
    prepare(f, q, domain)?;
    if q.gamma != 2.0 {
        return Err(WcError::InvalidArgument("the conjugate oracle needs gamma = 2".into()));
    }
    let rho = 2.0 * q.c;
    let w = &q.v + &(&q.x0 * rho);
    let (lo, hi, arg) = fy_gap(f, rho, &q.x0, &w, domain, tol)?;
    if lo == f64::INFINITY {
        return Ok(Verdict::fails(f64::NEG_INFINITY, None, "v+ρx₀ ∉ dom (f)*_ρ"));
    }
    if hi <= q.eps + tol.abs_tol {
        return Ok(Verdict::holds(q.eps - hi, None));
    }
    if lo > q.eps + tol.abs_tol + tol.grid_slop {
        return Ok(Verdict::fails(q.eps - lo, arg, "Fenchel–Young gap exceeds ε"));
    }
    let margin = if hi.is_finite() { q.eps - hi } else { q.eps - lo };
    Ok(Verdict::inconclusive(margin, arg, "gap enclosure straddles ε"))
}

/// `0 ∈ ∂^ε_{(2,C)} f(x)`.
pub fn is_eps_critical(f: &FunctionSpec, x: &Vector, eps: f64, c: f64, domain: &GridDomain, tol: &Tolerance) -> Result<Verdict> {
    let q = SubgradientQuery::new(x.clone(), Vector::zeros(x.dim()), eps, c);
    membership_grid(f, &q, domain, tol)
}

/// Local and global verdicts for the same query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalisationReport {
    pub local: Verdict,
    pub global: Verdict,
    /// `local HOLDS ⇒ global HOLDS`.
    pub implication_holds: bool,
}

/// Compares the query restricted to the lattice ball of radius
/// `local_radius` around `x₀` with the global query.
pub fn check_globalisation(
    f: &FunctionSpec,
    q: &SubgradientQuery,
    local_radius: f64,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<GlobalisationReport> {
    if !(local_radius.is_finite() && local_radius > 0.0) {
        return Err(WcError::InvalidArgument(format!("local radius must be positive, got {local_radius}")));
    }
    let fx0 = prepare(f, q, domain)?;
    let reach = local_radius * (1.0 + 1e-9) + 1e-12;
    let scan = scan_min(domain, tol.fail_threshold(), |z| (dist(z, &q.x0) <= reach).then(|| q.slack(f, fx0, z)))?;
    let local = if scan.visited == 0 {
        Verdict::inconclusive(f64::INFINITY, None, "no lattice point within the local radius")
    } else {
        Verdict::from_margin(scan.min, scan.argmin.map(|i| domain.point(i)), tol)
            .with_first_violation(scan.first_below.map(|i| domain.point(i)))
    };
    let global = membership_grid(f, q, domain, tol)?;
    let implication_holds = !local.is_holds() || global.is_holds();
    Ok(GlobalisationReport { local, global, implication_holds })
}

/// Verified elements of `∂^ε_{(2,ρ/2)} f(x₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgradientSample {
    pub elements: Vec<Vector>,
    /// INCONCLUSIVE when nothing could be verified.
    pub status: Status,
}

/// Up to `count` elements of `∂^ε_{(2,ρ/2)} f(x₀)` with `ρ = f.rho`, each
/// verified by [`membership_via_conjugate`].
///
/// Candidates, in order: the center of the one-sided derivative box at `x₀`,
/// the corners of that box, then ε-enlargements found by bisection on the
/// Fenchel–Young gap along `±eᵢ` and `±(1, …, 1)`.
pub fn sample_subgradients(
    f: &FunctionSpec,
    x0: &Vector,
    eps: f64,
    count: usize,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<SubgradientSample> {
    ensure_nonneg("eps", eps)?;
    if count == 0 {
        return Err(WcError::InvalidArgument("count must be positive".into()));
    }
    let n = x0.dim();
    let rho = f.rho;
    let c = 0.5 * rho;
    let q0 = SubgradientQuery::new(x0.clone(), Vector::zeros(n), eps, c);
    prepare(f, &q0, domain)?;

    let intervals = f.derivative_box(x0);
    let center = Vector::new(intervals.iter().map(|(a, b)| 0.5 * (a + b)).collect());
    let mut candidates = vec![center.clone()];
    for mask in 0..(1usize << n) {
        candidates.push(Vector::new(
            intervals.iter().enumerate().map(|(i, (a, b))| if mask >> (n - 1 - i) & 1 == 0 { *a } else { *b }).collect(),
        ));
    }
    let mut elements: Vec<Vector> = Vec::new();
    let offer = |v: Vector, elements: &mut Vec<Vector>| -> Result<()> {
        if elements.len() >= count || elements.iter().any(|e| e.dist(&v) < 1e-12) {
            return Ok(());
        }
        let q = SubgradientQuery::new(x0.clone(), v.clone(), eps, c);
        if membership_via_conjugate(f, &q, domain, tol)?.is_holds() {
            elements.push(v);
        }
        Ok(())
    };
    for v in candidates {
        offer(v, &mut elements)?;
    }

    let gap_hi = |v: &Vector| -> Result<f64> {
        let w = v + &(x0 * rho);
        Ok(fy_gap(f, rho, x0, &w, domain, tol)?.1)
    };
    if eps > 0.0 && elements.len() < count && gap_hi(&center)? <= eps {
        let mut dirs = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                dirs.push(Vector::new(d));
            }
        }
        if n > 1 {
            let k = 1.0 / (n as f64).sqrt();
            dirs.push(Vector::filled(n, k));
            dirs.push(Vector::filled(n, -k));
        }
        for d in dirs {
            if elements.len() >= count {
                break;
            }
            let mut hi = 1e-3;
            while hi < 1e3 && gap_hi(&(&center + &(&d * hi)))? <= eps {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if gap_hi(&(&center + &(&d * mid)))? <= eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo > 0.0 {
                offer(&center + &(&d * lo), &mut elements)?;
            }
        }
    }
    let status = if elements.is_empty() { Status::Inconclusive } else { Status::Holds };
    Ok(SubgradientSample { elements, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::function;

    fn q(x0: f64, v: f64, eps: f64, c: f64) -> SubgradientQuery {
        SubgradientQuery::new(Vector::scalar(x0), Vector::scalar(v), eps, c)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn unit() -> GridDomain {
        GridDomain::cube(1, -1.0, 1.0, 0.01).unwrap()
    }

    #[test]
    fn grid_examples() {
        let abs = function("abs", &[]).unwrap();
        assert!(membership_grid(&abs, &q(0.0, 0.5, 0.0, 0.0), &GridDomain::standard(1), &tol()).unwrap().is_holds());
        let bad = membership_grid(&abs, &q(0.0, 1.5, 0.0, 0.0), &unit(), &tol()).unwrap();
        assert!(bad.is_fails());
        assert_eq!(bad.witness.unwrap()[0], 1.0);
        assert!((bad.first_violation.unwrap()[0] - 0.01).abs() < 1e-12);
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        let eq = membership_grid(&nq, &q(0.0, 0.0, 0.0, 0.5), &GridDomain::standard(1), &tol()).unwrap();
        assert!(eq.is_holds());
        assert_eq!(eq.margin, 0.0);
    }

    #[test]
    fn conjugate_examples() {
        let d = GridDomain::standard(1);
        let abs = function("abs", &[]).unwrap();
        assert!(membership_via_conjugate(&abs, &q(0.0, 0.5, 0.0, 0.0), &d, &tol()).unwrap().is_holds());
        let v = membership_via_conjugate(&abs, &q(1.1, 0.9, 0.005, 0.0), &d, &tol()).unwrap();
        assert!(v.is_fails());
        assert!((v.margin - (0.005 - 0.11)).abs() < 1e-12);
        assert!(membership_via_conjugate(&abs, &q(1.1, 0.9, 0.005, 0.5), &d, &tol()).unwrap().is_holds());
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        assert!(membership_via_conjugate(&nq, &q(0.0, 0.0, 0.0, 0.5), &d, &tol()).unwrap().is_holds());
        let out = membership_via_conjugate(&abs, &q(0.0, 1.5, 0.0, 0.0), &d, &tol()).unwrap();
        assert_eq!(out.reason.as_deref(), Some("v+ρx₀ ∉ dom (f)*_ρ"));
    }

    #[test]
    fn criticality_examples() {
        let abs = function("abs", &[]).unwrap();
        let d = GridDomain::standard(1);
        let x = |t: f64| Vector::scalar(t);
        assert!(is_eps_critical(&abs, &x(0.0), 0.0, 0.0, &d, &tol()).unwrap().is_holds());
        let v = is_eps_critical(&abs, &x(0.05), 0.04, 0.0, &d, &tol()).unwrap();
        assert!(v.is_fails());
        assert_eq!(v.witness.unwrap()[0], 0.0);
        assert!(is_eps_critical(&abs, &x(0.05), 0.05, 0.0, &d, &tol()).unwrap().is_holds());
    }

    #[test]
    fn globalisation_examples() {
        let d = GridDomain::standard(1);
        let abs = function("abs", &[]).unwrap();
        let r = check_globalisation(&abs, &q(1.0, 1.0, 0.0, 0.0), 0.5, &d, &tol()).unwrap();
        assert!(r.local.is_holds() && r.global.is_holds());
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        let r = check_globalisation(&nq, &q(2.0, -2.0, 0.0, 0.5), 0.1, &d, &tol()).unwrap();
        assert!(r.local.is_holds() && r.global.is_holds());
        assert!(r.global.margin.abs() < 1e-12);
        let r = check_globalisation(&abs, &q(1.0, 1.2, 0.0, 0.0), 0.5, &d, &tol()).unwrap();
        assert!(r.local.is_fails() && r.global.is_fails());
        assert!((r.local.witness.unwrap()[0] - 1.5).abs() < 1e-9);
        assert!(r.implication_holds);
    }

    #[test]
    fn sampler_examples() {
        let d = GridDomain::standard(1);
        let abs = function("abs", &[]).unwrap();
        let s = sample_subgradients(&abs, &Vector::scalar(0.0), 0.0, 3, &d, &tol()).unwrap();
        let mut got: Vec<f64> = s.elements.iter().map(|v| v[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![-1.0, 0.0, 1.0]);
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        let s = sample_subgradients(&nq, &Vector::scalar(2.0), 0.0, 1, &d, &tol()).unwrap();
        assert_eq!(s.elements, vec![Vector::scalar(-2.0)]);
        let s = sample_subgradients(&abs, &Vector::scalar(1.0), 0.1, 2, &d, &tol()).unwrap();
        assert_eq!(s.elements.len(), 2);
        assert_eq!(s.elements[0][0], 1.0);
        assert!((s.elements[1][0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn tail_discharge_needs_growth() {
        let d = GridDomain::standard(1);
        let nq = function("negquad", &[("a", 1.0)]).unwrap();
        let v = membership_grid(&nq, &q(0.0, 0.0, 0.0, 0.3), &d, &tol()).unwrap();
        assert!(v.is_fails());
        let wide = GridDomain::cube(1, -0.5, 0.5, 0.01).unwrap();
        let v = membership_grid(&nq, &q(0.0, 0.0, 0.1, 0.45), &wide, &tol()).unwrap();
        assert!(v.is_inconclusive(), "{v:?}");
    }
}
