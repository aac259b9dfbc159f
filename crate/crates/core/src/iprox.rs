//! ε-proximal points and their certificates.
//!
//! `x` is an ε-proximal point of `αf` at `y` when the prox objective
//! `P(x) = f(x) + ‖x − y‖²/(2α)` is within `ε` of its infimum.
//!
//! * Type-2: `(y − x)/α ∈ ∂^ε_{(2,ρ/2+1/(2α))} f(x)`.
//! * Type-1: an error vector `e` and budgets `ε₀ + ε₁ ≤ ε` with
//!   `‖e‖²/(2α) ≤ ε₀` and `(y − x − e)/α ∈ ∂^{ε₁}_{(2,ρ/2)} f(x)`, obtained by
//!   splitting `0 ∈ ∂^ε (‖· − y‖²/(2α) + f)(x)` with the sum rule.

use serde::{Deserialize, Serialize};

use crate::catalog::FunctionSpec;
use crate::error::{ensure_nonneg, ensure_positive, Result, WcError};
use crate::grid::{tabulate, GridDomain, Tolerance, Verdict};
use crate::scalar::minimize_convex;
use crate::subdiff::{membership_grid, SubgradientQuery};
use crate::sumrule::decompose_subgradient;
use crate::vector::{dist_sq, Vector};

/// Anchor `y`, step `α` and budget `ε` of a prox computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxQuery {
    pub y: Vector,
    pub alpha: f64,
    pub eps: f64,
}

impl ProxQuery {
    pub fn new(y: Vector, alpha: f64, eps: f64) -> Self {
        ProxQuery { y, alpha, eps }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("alpha", self.alpha)?;
        ensure_nonneg("eps", self.eps)?;
        if !self.y.is_finite() {
            return Err(WcError::InvalidArgument("y must be finite".into()));
        }
        Ok(())
    }

    /// `f(x) + ‖x − y‖²/(2α)`.
    pub fn objective(&self, f: &FunctionSpec, x: &[f64]) -> f64 {
        f.eval(x) + dist_sq(x, &self.y) / (2.0 * self.alpha)
    }
}

/// Output of [`solve_eps_prox`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxSolution {
    pub x: Vector,
    /// Certified bound on `P(x) − inf P`.
    pub gap_bound: f64,
    /// Taken from the closed-form prox.
    pub exact: bool,
}

fn strong_convexity(f: &FunctionSpec, rho: f64, alpha: f64) -> Result<f64> {
    ensure_nonneg("rho", rho)?;
    if rho < f.rho {
        return Err(WcError::InvalidArgument(format!("rho = {rho} is below the modulus {} of {f}", f.rho)));
    }
    let mu = 1.0 / alpha - rho;
    if mu <= 0.0 {
        return Err(WcError::Precondition(format!("need 1/alpha > rho (1/alpha = {}, rho = {rho})", 1.0 / alpha)));
    }
    Ok(mu)
}

/// An ε-proximal point with a certificate `gap_bound ≤ ε`.
///
/// Closed-form proxes are used when available. Otherwise each coordinate of
/// the separable, `μ`-strongly convex objective (`μ = 1/α − ρ`) is minimized
/// by bisection on its one-sided derivatives, and the suboptimality is
/// bounded by `dist(0, ∂P(x))²/(2μ)`.
pub fn solve_eps_prox(f: &FunctionSpec, rho: f64, q: &ProxQuery) -> Result<ProxSolution> {
    q.validate()?;
    f.check_dim(q.y.dim())?;
    let sol = minimize_prox(f, rho, q)?;
    if sol.gap_bound > q.eps {
        return Err(WcError::BudgetNotMet { best: sol.x, gap_bound: sol.gap_bound, eps: q.eps });
    }
    Ok(sol)
}

fn minimize_prox(f: &FunctionSpec, rho: f64, q: &ProxQuery) -> Result<ProxSolution> {
    let mu = strong_convexity(f, rho, q.alpha)?;
    if f.has_exact_prox {
        return Ok(ProxSolution { x: f.exact_prox(q.alpha, &q.y)?, gap_bound: 0.0, exact: true });
    }
    let kinks = f.kinks();
    let inv = 1.0 / q.alpha;
    let mut x = Vec::with_capacity(q.y.dim());
    let mut dist2 = 0.0;
    for (i, &yi) in q.y.iter().enumerate() {
        let value = |t: f64| f.coord_value(i, t) + 0.5 * inv * (t - yi) * (t - yi);
        let deriv = |t: f64| {
            let (dm, dp) = f.coord_deriv(i, t);
            (dm + inv * (t - yi), dp + inv * (t - yi))
        };
        let (t, _) = minimize_convex(value, deriv, f64::NEG_INFINITY, f64::INFINITY, &kinks, yi)
            .ok_or_else(|| WcError::Inconsistency(format!("prox objective of {f} unbounded below")))?;
        let (dm, dp) = deriv(t);
        let d = if dm > 0.0 { dm } else if dp < 0.0 { -dp } else { 0.0 };
        dist2 += d * d;
        x.push(t);
    }
    Ok(ProxSolution { x: Vector::new(x), gap_bound: dist2 / (2.0 * mu), exact: false })
}

/// Lattice points whose prox objective is within `ε` of the infimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsProxSet {
    pub members: Vec<Vector>,
    /// Smallest objective value on the lattice.
    pub grid_min: f64,
    /// The infimum used for the threshold: the lattice minimum, or the
    /// solver's value when lower.
    pub reference: f64,
    pub threshold: f64,
}

impl EpsProxSet {
    /// Whether `x` is a member, up to `1e-12` per coordinate.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.members.iter().any(|m| m.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-12))
    }
}

/// Lattice sublevel set `{x : P(x) ≤ inf P + ε + abs_tol + grid_slop}`.
///
/// The infimum is the lattice minimum, lowered to the certified solver
/// value when the prox objective is strongly convex.
pub fn eps_prox_set(f: &FunctionSpec, q: &ProxQuery, domain: &GridDomain, tol: &Tolerance) -> Result<EpsProxSet> {
    q.validate()?;
    domain.check_dim(&q.y)?;
    f.check_dim(q.y.dim())?;
    let c2 = f.minorant(q.y.dim()).c2;
    if 1.0 / q.alpha <= c2 {
        return Err(WcError::Precondition(format!(
            "prox objective may be unbounded below: 1/alpha = {} ≤ c2 = {c2}",
            1.0 / q.alpha
        )));
    }
    let values = tabulate(domain, |x| q.objective(f, x))?;
    let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut reference = grid_min;
    if 1.0 / q.alpha > f.rho {
        let solved = minimize_prox(f, f.rho, q)?;
        reference = reference.min(q.objective(f, &solved.x) - solved.gap_bound);
    }
    let threshold = reference + q.eps + tol.abs_tol + tol.grid_slop;
    let members = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= threshold)
        .map(|(i, _)| domain.point(i))
        .collect();
    Ok(EpsProxSet { members, grid_min, reference, threshold })
}

/// Type-2 evidence for `x_eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type2Certificate {
    pub x_eps: Vector,
    /// `(y − x_eps)/α`.
    pub v: Vector,
    /// `ρ/2 + 1/(2α)`.
    pub c_prime: f64,
    pub eps: f64,
    pub verdict: Verdict,
    /// `1/α > ρ`, the regime where Type-2 is claimed to characterize ε-prox.
    pub equivalence_applies: bool,
}

/// `(y − x_eps)/α ∈ ∂^ε_{(2,ρ/2+1/(2α))} f(x_eps)`, checked on the lattice.
pub fn certify_type2(
    f: &FunctionSpec,
    rho: f64,
    q: &ProxQuery,
    x_eps: &Vector,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Type2Certificate> {
    q.validate()?;
    ensure_nonneg("rho", rho)?;
    crate::error::ensure_dim(q.y.dim(), x_eps.dim())?;
    let v = &(&q.y - x_eps) * (1.0 / q.alpha);
    let c_prime = 0.5 * rho + 0.5 / q.alpha;
    let verdict = membership_grid(f, &SubgradientQuery::new(x_eps.clone(), v.clone(), q.eps, c_prime), domain, tol)?;
    Ok(Type2Certificate {
        x_eps: x_eps.clone(),
        v,
        c_prime,
        eps: q.eps,
        verdict,
        equivalence_applies: 1.0 / q.alpha > rho,
    })
}

/// Type-1 evidence for `x_eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type1Certificate {
    pub x_eps: Vector,
    pub e: Vector,
    pub eps0: f64,
    pub eps1: f64,
    pub eps: f64,
    /// `(y − x_eps − e)/α`.
    pub vector: Vector,
    /// `‖e‖²/(2α) ≤ ε₀`.
    pub verdict_quadratic: Verdict,
    /// `vector ∈ ∂^{ε₁}_{(2,ρ/2)} f(x_eps)`.
    pub verdict_membership: Verdict,
}

impl Type1Certificate {
    pub fn holds(&self) -> bool {
        self.verdict_quadratic.is_holds() && self.verdict_membership.is_holds()
    }
}

#[allow(clippy::too_many_arguments)]
fn type1_verdicts(
    f: &FunctionSpec,
    rho: f64,
    q: &ProxQuery,
    x: &Vector,
    e: &Vector,
    eps0: f64,
    eps1: f64,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<(Vector, Verdict, Verdict)> {
    let quad = e.norm_sq() / (2.0 * q.alpha);
    let verdict_quadratic = Verdict::from_margin(eps0 - quad, Some(e.clone()), tol);
    let vector = &(&(&q.y - x) - e) * (1.0 / q.alpha);
    let verdict_membership = membership_grid(f, &SubgradientQuery::new(x.clone(), vector.clone(), eps1, 0.5 * rho), domain, tol)?;
    Ok((vector, verdict_quadratic, verdict_membership))
}

/// Type-1 certificate from the sum-rule decomposition of
/// `0 ∈ ∂^ε_{(2,ρ/2)} (‖· − y‖²/(2α) + f)(x_eps)`, with `e = αp₀ − (x_eps − y)`.
///
/// Inherits [`WcError::Inconclusive`] from the decomposition. A returned
/// certificate whose invariants fail is a [`WcError::Inconsistency`].
pub fn certify_type1(
    f: &FunctionSpec,
    rho: f64,
    q: &ProxQuery,
    x_eps: &Vector,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Type1Certificate> {
    q.validate()?;
    let quad = FunctionSpec::quadratic_at(1.0 / q.alpha, q.y.clone())?;
    let zero = Vector::zeros(x_eps.dim());
    let dec = decompose_subgradient(&quad, 0.0, f, rho, x_eps, &zero, q.eps, domain, tol)?;
    let e = &(&dec.p0 * q.alpha) - &(x_eps - &q.y);
    let (vector, verdict_quadratic, verdict_membership) = type1_verdicts(f, rho, q, x_eps, &e, dec.eps0, dec.eps1, domain, tol)?;
    let cert = Type1Certificate { x_eps: x_eps.clone(), e, eps0: dec.eps0, eps1: dec.eps1, eps: q.eps, vector, verdict_quadratic, verdict_membership };
    if !cert.holds() {
        return Err(WcError::Inconsistency(format!(
            "Type-1 invariants fail after decomposition (quadratic margin {:.3e}, membership {})",
            cert.verdict_quadratic.margin, cert.verdict_membership.status
        )));
    }
    Ok(cert)
}

/// The Type-1 certificate with both budgets relaxed to `ε`.
pub fn certify_type1_single_eps(
    f: &FunctionSpec,
    rho: f64,
    q: &ProxQuery,
    x_eps: &Vector,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Type1Certificate> {
    let base = certify_type1(f, rho, q, x_eps, domain, tol)?;
    let (vector, verdict_quadratic, verdict_membership) = type1_verdicts(f, rho, q, x_eps, &base.e, q.eps, q.eps, domain, tol)?;
    Ok(Type1Certificate { eps0: q.eps, eps1: q.eps, vector, verdict_quadratic, verdict_membership, ..base })
}

/// The Type-2 verdict implied by a Type-1 certificate.
///
/// Checked with twice the absolute tolerance, one for each Type-1 clause.
pub fn type1_implies_type2(
    cert: &Type1Certificate,
    f: &FunctionSpec,
    rho: f64,
    q: &ProxQuery,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Verdict> {
    let wide = Tolerance { abs_tol: 2.0 * tol.abs_tol, ..*tol };
    Ok(certify_type2(f, rho, q, &cert.x_eps, domain, &wide)?.verdict)
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

    fn abs() -> FunctionSpec {
        function("abs", &[]).unwrap()
    }

    fn negquad() -> FunctionSpec {
        function("negquad", &[("a", 1.0)]).unwrap()
    }

    fn s(t: f64) -> Vector {
        Vector::scalar(t)
    }

    fn q(y: f64, alpha: f64, eps: f64) -> ProxQuery {
        ProxQuery::new(s(y), alpha, eps)
    }

    #[test]
    fn prox_set_examples() {
        let set = eps_prox_set(&abs(), &q(2.0, 1.0, 0.0), &d1(), &tol()).unwrap();
        assert_eq!(set.members, vec![s(1.0)]);
        let set = eps_prox_set(&abs(), &q(2.0, 1.0, 0.005), &d1(), &tol()).unwrap();
        assert_eq!(set.members.len(), 21);
        assert_abs_diff_eq!(set.members[0][0], 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(set.members[20][0], 1.1, epsilon = 1e-9);
        let set = eps_prox_set(&negquad(), &q(1.0, 0.5, 0.0), &d1(), &tol()).unwrap();
        assert_eq!(set.members, vec![s(2.0)]);
        assert!(matches!(eps_prox_set(&negquad(), &q(1.0, 1.0, 0.0), &d1(), &tol()), Err(WcError::Precondition(_))));
    }

    #[test]
    fn solver_examples() {
        let sol = solve_eps_prox(&abs(), 0.0, &q(2.0, 1.0, 1e-4)).unwrap();
        assert!((sol.x[0] - 1.0).abs() <= 1.5e-2 && sol.gap_bound <= 1e-4);
        let sol = solve_eps_prox(&negquad(), 1.0, &q(1.0, 0.5, 1e-6)).unwrap();
        assert!((sol.x[0] - 2.0).abs() <= 2e-3);
        let cq = function("cosquad", &[]).unwrap();
        let sol = solve_eps_prox(&cq, 0.5, &q(2.0, 1.0, 1e-6)).unwrap();
        assert!(!sol.exact && sol.gap_bound <= 1e-6);
        assert_abs_diff_eq!(sol.x[0], 1.9521161780106642, epsilon = 1e-9);
        assert!(matches!(solve_eps_prox(&negquad(), 1.0, &q(1.0, 1.0, 0.0)), Err(WcError::Precondition(_))));
        assert!(matches!(solve_eps_prox(&negquad(), 0.5, &q(1.0, 0.5, 0.0)), Err(WcError::InvalidArgument(_))));
    }

    #[test]
    fn type2_examples() {
        let c = certify_type2(&abs(), 0.0, &q(2.0, 1.0, 0.005), &s(1.1), &d1(), &tol()).unwrap();
        assert!(c.verdict.is_holds());
        assert_abs_diff_eq!(c.v[0], 0.9, epsilon = 1e-12);
        assert_eq!(c.c_prime, 0.5);
        let c = certify_type2(&abs(), 0.0, &q(2.0, 1.0, 0.005), &s(1.2), &d1(), &tol()).unwrap();
        assert!(c.verdict.is_fails());
        let c = certify_type2(&abs(), 0.0, &q(2.0, 1.0, 0.0), &s(1.0), &d1(), &tol()).unwrap();
        assert!(c.verdict.is_holds());
    }

    #[test]
    fn type2_is_weaker_than_eps_prox_for_positive_rho() {
        let (f, query, x) = (negquad(), q(0.0, 0.5, 0.01), s(0.19));
        assert!(query.objective(&f, &x) > 0.01);
        let c = certify_type2(&f, 1.0, &query, &x, &d1(), &tol()).unwrap();
        assert!(c.verdict.is_holds() && c.equivalence_applies);
        // Lattice minimum at z = 0.09; the continuous one is 0.000975 at z = 0.095.
        assert_abs_diff_eq!(c.verdict.margin, 0.001, epsilon = 1e-9);
    }

    #[test]
    fn type1_examples() {
        let c = certify_type1(&abs(), 0.0, &q(2.0, 1.0, 0.005), &s(1.1), &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(c.e[0], -0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(c.eps0, 0.005, epsilon = 1e-9);
        assert_abs_diff_eq!(c.eps1, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.vector[0], 1.0, epsilon = 1e-9);
        let v = type1_implies_type2(&c, &abs(), 0.0, &q(2.0, 1.0, 0.005), &d1(), &tol()).unwrap();
        assert!(v.is_holds());
        let single = certify_type1_single_eps(&abs(), 0.0, &q(2.0, 1.0, 0.005), &s(1.1), &d1(), &tol()).unwrap();
        assert!(single.holds());
        assert_eq!((single.eps0, single.eps1), (0.005, 0.005));

        let c = certify_type1(&abs(), 0.0, &q(2.0, 1.0, 0.0), &s(1.0), &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(c.e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.vector[0], 1.0, epsilon = 1e-12);

        let c = certify_type1(&negquad(), 1.0, &q(1.0, 0.5, 0.0), &s(2.0), &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(c.e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.vector[0], -2.0, epsilon = 1e-12);
        assert_eq!((c.eps0, c.eps1), (0.0, 0.0));
    }

    #[test]
    fn type1_end_to_end_cosquad() {
        let cq = function("cosquad", &[]).unwrap();
        let query = q(2.0, 1.0, 1e-4);
        let sol = solve_eps_prox(&cq, 0.5, &query).unwrap();
        let c = certify_type1_single_eps(&cq, 0.5, &query, &sol.x, &d1(), &tol()).unwrap();
        assert!(c.holds());
        assert!(type1_implies_type2(&c, &cq, 0.5, &query, &d1(), &tol()).unwrap().is_holds());
    }
}
