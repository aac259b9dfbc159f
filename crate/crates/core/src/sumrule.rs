//! Sum rules for proximal ε-subdifferentials.
//!
//! With `ρ = ρ₀ + ρ₁` and budgets measured in `∂^ε_{(2,ρ/2)}`:
//!
//! * forward: `∂^{ε₀}_{(2,ρ₀/2)} f₀(x) + ∂^{ε₁}_{(2,ρ₁/2)} f₁(x) ⊆ ∂^{ε₀+ε₁}_{(2,ρ/2)} (f₀ + f₁)(x)`;
//! * decomposition: every `u ∈ ∂^ε_{(2,ρ/2)} (f₀ + f₁)(x)` splits as
//!   `u = (p₀ − ρ₀x) + (p₁ − ρ₁x)` with `pᵢ − ρᵢx ∈ ∂^{εᵢ}_{(2,ρᵢ/2)} fᵢ(x)` and
//!   `ε₀ + ε₁ ≤ ε`, the `pᵢ` coming from the ρ-conjugate decomposition of
//!   `s = u + ρx`;
//! * smooth shift: for convex `f₀` with `L₀`-Lipschitz gradient,
//!   `u − ∇f₀(x) ∈ ∂^ε_{(2,ρ/2+L₀/2)} f₁(x)`.

use serde::{Deserialize, Serialize};

use crate::catalog::FunctionSpec;
use crate::conjugate::{conjugate_sum_decompose, part_conjugate, part_conjugate_exact};
use crate::error::{ensure_nonneg, Result, WcError};
use crate::grid::{GridDomain, Tolerance, Verdict};
use crate::subdiff::{membership_grid, SubgradientQuery};
use crate::vector::Vector;

/// Step of the central differences used when `f₀` has no analytic gradient.
pub const FD_STEP: f64 = 1e-5;

/// A verified splitting of an ε-subgradient of `f₀ + f₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumDecomposition {
    pub u: Vector,
    pub x: Vector,
    pub rho0: f64,
    pub rho1: f64,
    pub p0: Vector,
    pub p1: Vector,
    pub eps0: f64,
    pub eps1: f64,
    pub eps: f64,
    /// `(f₀)*_{ρ₀}(p₀) + (f₁)*_{ρ₁}(p₁)`.
    pub value: f64,
    /// `p₀ − ρ₀x ∈ ∂^{ε₀}_{(2,ρ₀/2)} f₀(x)`.
    pub membership0: Verdict,
    /// `p₁ − ρ₁x ∈ ∂^{ε₁}_{(2,ρ₁/2)} f₁(x)`.
    pub membership1: Verdict,
}

impl SumDecomposition {
    /// The subgradient of part `i`, `pᵢ − ρᵢx`.
    pub fn shifted(&self, i: usize) -> Vector {
        match i {
            0 => &self.p0 - &(&self.x * self.rho0),
            _ => &self.p1 - &(&self.x * self.rho1),
        }
    }

    /// Budgets inflated to sum exactly to `ε`, part 0 receiving `share` of
    /// the unused budget. Each inflated budget dominates the original one.
    pub fn padded(&self, share: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&share) {
            return Err(WcError::InvalidArgument(format!("share must lie in [0, 1], got {share}")));
        }
        let spare = (self.eps - self.eps0 - self.eps1).max(0.0);
        Ok((self.eps0 + share * spare, self.eps1 + (1.0 - share) * spare))
    }
}

/// Verifies a premise membership; FAILS is the caller's error.
fn premise(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain, tol: &Tolerance, what: &str) -> Result<()> {
    let v = membership_grid(f, q, domain, tol)?;
    if v.is_fails() {
        return Err(WcError::InvalidArgument(format!("premise {what} fails (margin {:.3e})", v.margin)));
    }
    if v.is_inconclusive() {
        return Err(WcError::Inconclusive(format!(
            "premise {what} cannot be verified: {}",
            v.reason.as_deref().unwrap_or("inconclusive")
        )));
    }
    Ok(())
}

/// Checks `w + v ∈ ∂^{ε₀+ε₁}_{(2,(ρ₀+ρ₁)/2)} (f₀ + f₁)(x)` after verifying
/// `w ∈ ∂^{ε₀}_{(2,ρ₀/2)} f₀(x)` and `v ∈ ∂^{ε₁}_{(2,ρ₁/2)} f₁(x)`.
///
/// The conclusion is checked with twice the absolute tolerance, since each
/// premise may itself be short by up to one tolerance.
#[allow(clippy::too_many_arguments)]
pub fn forward_sum_inclusion(
    f0: &FunctionSpec,
    rho0: f64,
    eps0: f64,
    w: &Vector,
    f1: &FunctionSpec,
    rho1: f64,
    eps1: f64,
    v: &Vector,
    x: &Vector,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Verdict> {
    ensure_nonneg("rho0", rho0)?;
    ensure_nonneg("rho1", rho1)?;
    premise(f0, &SubgradientQuery::new(x.clone(), w.clone(), eps0, 0.5 * rho0), domain, tol, "w ∈ ∂f₀(x)")?;
    premise(f1, &SubgradientQuery::new(x.clone(), v.clone(), eps1, 0.5 * rho1), domain, tol, "v ∈ ∂f₁(x)")?;
    let sum = FunctionSpec::sum(&[f0.clone(), f1.clone()])?;
    let q = SubgradientQuery::new(x.clone(), w + v, eps0 + eps1, 0.5 * (rho0 + rho1));
    let wide = Tolerance { abs_tol: 2.0 * tol.abs_tol, ..*tol };
    membership_grid(&sum, &q, domain, &wide)
}

/// Splits `u ∈ ∂^ε_{(2,(ρ₀+ρ₁)/2)} (f₀ + f₁)(x)` into part subgradients with
/// budgets `εᵢ = fᵢ(x) + (fᵢ)*_{ρᵢ}(pᵢ) − ⟨pᵢ, x⟩ + (ρᵢ/2)‖x‖²`.
///
/// Both memberships and `ε₀ + ε₁ ≤ ε` are re-verified before returning.
/// A re-verification failure is [`WcError::Inconclusive`] when a part
/// conjugate or the premise was only known on the lattice, and
/// [`WcError::Inconsistency`] otherwise.
#[allow(clippy::too_many_arguments)]
pub fn decompose_subgradient(
    f0: &FunctionSpec,
    rho0: f64,
    f1: &FunctionSpec,
    rho1: f64,
    x: &Vector,
    u: &Vector,
    eps: f64,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<SumDecomposition> {
    ensure_nonneg("eps", eps)?;
    let rho = rho0 + rho1;
    let sum = FunctionSpec::sum(&[f0.clone(), f1.clone()])?;
    premise(&sum, &SubgradientQuery::new(x.clone(), u.clone(), eps, 0.5 * rho), domain, tol, "u ∈ ∂(f₀ + f₁)(x)")?;

    let s = u + &(x * rho);
    let dec = conjugate_sum_decompose(f0, rho0, f1, rho1, &s, domain, tol)?;
    let budget = |f: &FunctionSpec, r: f64, p: &Vector| {
        let gap = f.eval(x) + part_conjugate(f, r, p, domain) - p.dot(x) + 0.5 * r * x.norm_sq();
        gap.max(0.0)
    };
    let eps0 = budget(f0, rho0, &dec.p0);
    let eps1 = budget(f1, rho1, &dec.p1);
    let exact = part_conjugate_exact(f0, rho0) && part_conjugate_exact(f1, rho1);

    let fail = |msg: String| if exact { WcError::Inconsistency(msg) } else { WcError::Inconclusive(msg) };
    if eps0 + eps1 > eps + tol.abs_tol {
        // The premise was verified on the lattice only; the continuous gap
        // may exceed ε by the lattice resolution.
        return Err(WcError::Inconclusive(format!(
            "budgets ε₀ + ε₁ = {} exceed ε = {eps}; the lattice premise hides part of the gap",
            eps0 + eps1
        )));
    }
    let mut out = SumDecomposition {
        u: u.clone(),
        x: x.clone(),
        rho0,
        rho1,
        p0: dec.p0,
        p1: dec.p1,
        eps0,
        eps1,
        eps,
        value: dec.value,
        membership0: Verdict::holds(0.0, None),
        membership1: Verdict::holds(0.0, None),
    };
    out.membership0 = membership_grid(f0, &SubgradientQuery::new(x.clone(), out.shifted(0), eps0, 0.5 * rho0), domain, tol)?;
    out.membership1 = membership_grid(f1, &SubgradientQuery::new(x.clone(), out.shifted(1), eps1, 0.5 * rho1), domain, tol)?;
    for (i, m) in [&out.membership0, &out.membership1].into_iter().enumerate() {
        if m.is_fails() {
            return Err(fail(format!("part {i} membership fails with margin {:.3e}", m.margin)));
        }
        if m.is_inconclusive() {
            return Err(WcError::Inconclusive(format!(
                "part {i} membership: {}",
                m.reason.as_deref().unwrap_or("inconclusive")
            )));
        }
    }
    Ok(out)
}

/// `∇f₀(x)`, analytic when the catalog provides it, central differences
/// otherwise. Returns the gradient and a bound on its error.
pub fn smooth_gradient(f0: &FunctionSpec, x: &Vector) -> Result<(Vector, f64)> {
    let l0 = f0
        .lipschitz_grad
        .ok_or_else(|| WcError::InvalidArgument(format!("{f0} has no Lipschitz gradient")))?;
    if let Some(g) = f0.gradient(x) {
        return Ok((g, 0.0));
    }
    Ok(central_difference(f0, x, l0))
}

fn central_difference(f: &FunctionSpec, x: &Vector, l0: f64) -> (Vector, f64) {
    let n = x.dim();
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let mut a = x.clone().into_inner();
            let mut b = a.clone();
            a[i] += FD_STEP;
            b[i] -= FD_STEP;
            (f.eval(&a) - f.eval(&b)) / (2.0 * FD_STEP)
        })
        .collect();
    (Vector::new(g), l0 * FD_STEP * 0.5 * (n as f64).sqrt())
}

/// Checks `u − ∇f₀(x) ∈ ∂^ε_{(2,ρ/2+L₀/2)} f₁(x)` after verifying
/// `u ∈ ∂^ε_{(2,ρ/2)} (f₀ + f₁)(x)`.
///
/// For `ε = 0` the set `∂⁰_{(2,ρ/2)} f₁(x)` must also be shown nonempty; the
/// center and corners of the one-sided derivative box are tried.
#[allow(clippy::too_many_arguments)]
pub fn smooth_shift_inclusion(
    f0: &FunctionSpec,
    f1: &FunctionSpec,
    rho: f64,
    x: &Vector,
    u: &Vector,
    eps: f64,
    domain: &GridDomain,
    tol: &Tolerance,
) -> Result<Verdict> {
    ensure_nonneg("rho", rho)?;
    ensure_nonneg("eps", eps)?;
    let Some(l0) = f0.lipschitz_grad else {
        return Err(WcError::InvalidArgument(format!("{f0} has no Lipschitz gradient")));
    };
    if f0.rho > 0.0 {
        return Err(WcError::InvalidArgument(format!("{f0} is not convex")));
    }
    let sum = FunctionSpec::sum(&[f0.clone(), f1.clone()])?;
    premise(&sum, &SubgradientQuery::new(x.clone(), u.clone(), eps, 0.5 * rho), domain, tol, "u ∈ ∂(f₀ + f₁)(x)")?;
    if eps == 0.0 && !has_exact_subgradient(f1, x, 0.5 * rho, domain, tol)? {
        return Err(WcError::Precondition(format!("no element of ∂⁰ f₁({x}) with C = {} was found", 0.5 * rho)));
    }
    let (g, err) = smooth_gradient(f0, x)?;
    let reach = domain.radius() + x.norm();
    let tol = tol.with_slop(tol.grid_slop + err * reach);
    let q = SubgradientQuery::new(x.clone(), u - &g, eps, 0.5 * (rho + l0));
    membership_grid(f1, &q, domain, &tol)
}

fn has_exact_subgradient(f: &FunctionSpec, x: &Vector, c: f64, domain: &GridDomain, tol: &Tolerance) -> Result<bool> {
    let n = x.dim();
    let iv = f.derivative_box(x);
    let mut cands = vec![Vector::new(iv.iter().map(|(a, b)| 0.5 * (a + b)).collect())];
    for mask in 0..(1usize << n) {
        cands.push(Vector::new(iv.iter().enumerate().map(|(i, (a, b))| if mask >> i & 1 == 0 { *a } else { *b }).collect()));
    }
    for v in cands {
        if membership_grid(f, &SubgradientQuery::new(x.clone(), v, 0.0, c), domain, tol)?.is_holds() {
            return Ok(true);
        }
    }
    Ok(false)
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

    fn shifted_quad() -> FunctionSpec {
        function("quadratic", &[("a", 1.0), ("c", 2.0)]).unwrap()
    }

    fn s(t: f64) -> Vector {
        Vector::scalar(t)
    }

    #[test]
    fn forward_examples() {
        let v = forward_sum_inclusion(&abs(), 0.0, 0.01, &s(0.9), &negquad(), 1.0, 0.0, &s(0.0), &s(0.0), &d1(), &tol()).unwrap();
        assert!(v.is_holds(), "{v:?}");
        let v = forward_sum_inclusion(&abs(), 0.0, 0.0, &s(1.0), &abs(), 0.0, 0.0, &s(1.0), &s(0.0), &d1(), &tol()).unwrap();
        assert!(v.is_holds());
        let q = function("quadratic", &[("a", 1.0)]).unwrap();
        let v = forward_sum_inclusion(&q, 0.0, 0.0, &s(1.0), &negquad(), 1.0, 0.0, &s(-1.0), &s(1.0), &d1(), &tol()).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn forward_rejects_bad_premise() {
        let err = forward_sum_inclusion(&abs(), 0.0, 0.0, &s(1.5), &abs(), 0.0, 0.0, &s(0.0), &s(0.0), &d1(), &tol());
        assert!(matches!(err, Err(WcError::InvalidArgument(_))));
    }

    #[test]
    fn decomposition_examples() {
        let q = function("quadratic", &[("a", 1.0)]).unwrap();
        let d = decompose_subgradient(&q, 0.0, &negquad(), 1.0, &s(0.0), &s(0.0), 0.01, &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(d.p0[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p1[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eps0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eps1, 0.0, epsilon = 1e-12);

        let d = decompose_subgradient(&shifted_quad(), 0.0, &abs(), 0.0, &s(1.1), &s(0.0), 0.005, &d1(), &tol()).unwrap();
        assert_abs_diff_eq!(d.p0[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.p1[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.eps0, 0.005, epsilon = 1e-9);
        assert_abs_diff_eq!(d.eps1, 0.0, epsilon = 1e-9);
        assert!(d.membership0.is_holds() && d.membership1.is_holds());

        let d = decompose_subgradient(&abs(), 0.0, &abs(), 0.0, &s(0.0), &s(0.0), 0.0, &d1(), &tol()).unwrap();
        assert_eq!((d.p0[0], d.p1[0], d.eps0, d.eps1), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn padding_preserves_memberships() {
        let d = decompose_subgradient(&shifted_quad(), 0.0, &abs(), 0.0, &s(1.0), &s(0.0), 0.05, &d1(), &tol()).unwrap();
        for share in [0.0, 0.3, 1.0] {
            let (e0, e1) = d.padded(share).unwrap();
            assert!(e0 >= d.eps0 && e1 >= d.eps1);
            assert_abs_diff_eq!(e0 + e1, 0.05, epsilon = 1e-15);
            let m0 = membership_grid(&shifted_quad(), &SubgradientQuery::new(s(1.0), d.shifted(0), e0, 0.0), &d1(), &tol()).unwrap();
            let m1 = membership_grid(&abs(), &SubgradientQuery::new(s(1.0), d.shifted(1), e1, 0.0), &d1(), &tol()).unwrap();
            assert!(m0.is_holds() && m1.is_holds());
        }
        assert!(d.padded(1.5).is_err());
    }

    #[test]
    fn smooth_shift_examples() {
        let v = smooth_shift_inclusion(&shifted_quad(), &abs(), 0.0, &s(1.0), &s(0.0), 0.0, &d1(), &tol()).unwrap();
        assert!(v.is_holds(), "{v:?}");
        let q = function("quadratic", &[("a", 1.0)]).unwrap();
        let v = smooth_shift_inclusion(&q, &negquad(), 1.0, &s(0.0), &s(0.0), 0.0, &d1(), &tol()).unwrap();
        assert!(v.is_holds());
        let v = smooth_shift_inclusion(&shifted_quad(), &abs(), 0.0, &s(1.0), &s(0.002), 0.01, &d1(), &tol()).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn smooth_shift_needs_the_enlarged_constant() {
        let v = smooth_shift_inclusion(&shifted_quad(), &abs(), 0.0, &s(1.0), &s(0.1), 0.01, &d1(), &tol()).unwrap();
        assert!(v.is_holds());
        assert_abs_diff_eq!(v.margin, 0.005, epsilon = 1e-9);
        let convex = membership_grid(&abs(), &SubgradientQuery::new(s(1.0), s(1.1), 0.01, 0.0), &d1(), &tol()).unwrap();
        assert!(convex.is_fails());
    }

    #[test]
    fn finite_difference_gradient() {
        let cq = function("cosquad", &[]).unwrap();
        let (g, err) = smooth_gradient(&cq, &s(1.0)).unwrap();
        assert_eq!(err, 0.0);
        let (fd, bound) = central_difference(&cq, &s(1.0), 1.5);
        assert!((fd[0] - g[0]).abs() <= bound);
        assert_abs_diff_eq!(g[0], 0.5 - 1f64.sin(), epsilon = 1e-12);
        assert!(smooth_gradient(&abs(), &s(1.0)).is_err());
    }
}
