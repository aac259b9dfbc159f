//! Inexact proximal point iteration with per-step certificates.

use serde::{Deserialize, Serialize};

use crate::catalog::{FunctionDesc, FunctionSpec};
use crate::error::{ensure_nonneg, ensure_positive, Result, WcError};
use crate::grid::{GridDomain, Status, Tolerance, Verdict};
use crate::iprox::{certify_type1, certify_type2, solve_eps_prox, ProxQuery, Type1Certificate, Type2Certificate};
use crate::subdiff::{fy_gap, is_eps_critical};
use crate::vector::Vector;

/// Inner accuracy `ε_k` at iteration `k = 0, 1, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `ε_k = eps`.
    Constant { eps: f64 },
    /// `ε_k = eps0 · q^k`.
    Geometric { eps0: f64, q: f64 },
    /// `ε_k = eps0/(k + 1)²`.
    Summable { eps0: f64 },
}

impl Schedule {
    pub fn eps(&self, k: usize) -> f64 {
        match *self {
            Schedule::Constant { eps } => eps,
            Schedule::Geometric { eps0, q } => eps0 * q.powi(k as i32),
            Schedule::Summable { eps0 } => eps0 / ((k + 1) as f64).powi(2),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Constant { eps } => ensure_nonneg("eps", eps),
            Schedule::Geometric { eps0, q } => {
                ensure_nonneg("eps0", eps0)?;
                if !(0.0..1.0).contains(&q) {
                    return Err(WcError::InvalidArgument(format!("geometric ratio must lie in [0, 1), got {q}")));
                }
                Ok(())
            }
            Schedule::Summable { eps0 } => ensure_nonneg("eps0", eps0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    #[default]
    None,
    Type1,
    Type2,
    Both,
}

impl CertificateMode {
    fn type1(self) -> bool {
        matches!(self, CertificateMode::Type1 | CertificateMode::Both)
    }

    fn type2(self) -> bool {
        matches!(self, CertificateMode::Type2 | CertificateMode::Both)
    }
}

/// An inexact proximal point run.
///
/// The run stops after `max_iters` steps, or earlier once the residual is at
/// most `tol_r` and `ε_k` at most `tol_eps` (both must be set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IppaConfig {
    pub function: FunctionDesc,
    pub alpha: f64,
    pub x0: Vector,
    pub schedule: Schedule,
    pub max_iters: usize,
    #[serde(default)]
    pub certificate_mode: CertificateMode,
    /// Weak convexity modulus used by the solver and certificates; defaults
    /// to the catalog value.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Lattice for the certificates; defaults to the standard grid.
    #[serde(default)]
    pub grid: Option<GridDomain>,
    #[serde(default)]
    pub tol_r: Option<f64>,
    #[serde(default)]
    pub tol_eps: Option<f64>,
}

/// One proximal step `x_k → x_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IppaStep {
    pub k: usize,
    pub x: Vector,
    pub x_next: Vector,
    pub eps: f64,
    /// `f(x_k)`.
    pub objective: f64,
    /// `‖x_k − x_{k+1}‖/α`.
    pub residual: f64,
    pub gap_bound: f64,
    /// `f(x_{k+1}) + ‖x_{k+1} − x_k‖²/(2α) ≤ f(x_k) + ε_k`.
    pub descent: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type2: Option<Type2Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type1: Option<Type1Certificate>,
    /// Why a requested Type-1 certificate is missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type1_error: Option<String>,
}

impl IppaStep {
    /// Worst status over the descent check and the attached certificates.
    pub fn status(&self) -> Status {
        let mut s = self.descent.status;
        if let Some(c) = &self.type2 {
            s = s.worst(c.verdict.status);
        }
        if let Some(c) = &self.type1 {
            s = s.worst(c.verdict_quadratic.status).worst(c.verdict_membership.status);
        }
        if self.type1_error.is_some() {
            s = s.worst(Status::Inconclusive);
        }
        s
    }
}

/// ε-criticality of the last iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalCriticality {
    pub x: Vector,
    /// Fenchel–Young gap of `0 ∈ ∂_{(2,ρ/2)} f(x)`, the smallest ε for which
    /// `x` is ε-critical with `C = ρ/2`.
    pub eps: f64,
    pub c: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IppaTrace {
    pub steps: Vec<IppaStep>,
    /// Set when a step could not be completed; the trace stops there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub converged: bool,
    pub final_x: Vector,
    pub criticality: FinalCriticality,
}

impl IppaTrace {
    pub fn status(&self) -> Status {
        let base = if self.error.is_some() { Status::Inconclusive } else { Status::Holds };
        self.steps.iter().fold(base, |s, st| s.worst(st.status()))
    }
}

impl IppaConfig {
    pub fn validate(&self) -> Result<(FunctionSpec, f64, GridDomain)> {
        ensure_positive("alpha", self.alpha)?;
        self.schedule.validate()?;
        if self.max_iters == 0 {
            return Err(WcError::InvalidArgument("max_iters must be positive".into()));
        }
        if !self.x0.is_finite() {
            return Err(WcError::InvalidArgument("x0 must be finite".into()));
        }
        let f = self.function.build()?;
        f.check_dim(self.x0.dim())?;
        let rho = self.rho.unwrap_or(f.rho);
        ensure_nonneg("rho", rho)?;
        if 1.0 / self.alpha <= rho {
            return Err(WcError::Precondition(format!("need 1/alpha > rho (1/alpha = {}, rho = {rho})", 1.0 / self.alpha)));
        }
        let domain = match &self.grid {
            Some(g) => g.clone(),
            None => GridDomain::standard(self.x0.dim()),
        };
        domain.check_dim(&self.x0)?;
        Ok((f, rho, domain))
    }
}

/// Runs `x_{k+1} = ε_k-prox_{αf}(x_k)` with the requested certificates.
pub fn run_ippa(cfg: &IppaConfig, tol: &Tolerance) -> Result<IppaTrace> {
    let (f, rho, domain) = cfg.validate()?;
    let mut x = cfg.x0.clone();
    let mut steps = Vec::new();
    let mut error = None;
    let mut converged = false;
    for k in 0..cfg.max_iters {
        let eps = cfg.schedule.eps(k);
        let q = ProxQuery::new(x.clone(), cfg.alpha, eps);
        let sol = match solve_eps_prox(&f, rho, &q) {
            Ok(s) => s,
            Err(e) => {
                error = Some(format!("step {k}: {e}"));
                break;
            }
        };
        let next = sol.x;
        let objective = f.eval(&x);
        let residual = x.dist(&next) / cfg.alpha;
        let lhs = f.eval(&next) + next.dist(&x).powi(2) / (2.0 * cfg.alpha);
        let descent = Verdict::from_margin(objective + eps - lhs, Some(next.clone()), tol);
        let type2 = if cfg.certificate_mode.type2() { Some(certify_type2(&f, rho, &q, &next, &domain, tol)?) } else { None };
        let (type1, type1_error) = if cfg.certificate_mode.type1() {
            match certify_type1(&f, rho, &q, &next, &domain, tol) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };
        steps.push(IppaStep { k, x: x.clone(), x_next: next.clone(), eps, objective, residual, gap_bound: sol.gap_bound, descent, type2, type1, type1_error });
        x = next;
        if let (Some(tr), Some(te)) = (cfg.tol_r, cfg.tol_eps) {
            if residual <= tr && eps <= te {
                converged = true;
                break;
            }
        }
    }
    let criticality = final_criticality(&f, rho, &x, &domain, tol)?;
    Ok(IppaTrace { steps, error, converged, final_x: x, criticality })
}

fn final_criticality(f: &FunctionSpec, rho: f64, x: &Vector, domain: &GridDomain, tol: &Tolerance) -> Result<FinalCriticality> {
    let c = 0.5 * rho;
    let (_, hi, _) = fy_gap(f, rho, x, &(x * rho), domain, tol)?;
    let eps = hi.max(0.0);
    let verdict = if eps.is_finite() {
        is_eps_critical(f, x, eps, c, domain, tol)?
    } else {
        Verdict::inconclusive(f64::NAN, Some(x.clone()), "no finite upper bound on the criticality gap")
    };
    Ok(FinalCriticality { x: x.clone(), eps, c, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: &str, params: &[(&str, f64)], x0: f64, schedule: Schedule, iters: usize) -> IppaConfig {
        IppaConfig {
            function: FunctionDesc::new(name, params),
            alpha: 1.0,
            x0: Vector::scalar(x0),
            schedule,
            max_iters: iters,
            certificate_mode: CertificateMode::Both,
            rho: None,
            grid: None,
            tol_r: None,
            tol_eps: None,
        }
    }

    #[test]
    fn soft_threshold_steps() {
        let t = run_ippa(&cfg("abs", &[], 3.0, Schedule::Constant { eps: 0.0 }, 5), &Tolerance::default()).unwrap();
        let xs: Vec<f64> = t.steps.iter().map(|s| s.x_next[0]).collect();
        assert_eq!(xs, vec![2.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.status(), Status::Holds);
        assert!(t.criticality.verdict.is_holds());
        assert_eq!(t.criticality.eps, 0.0);
    }

    #[test]
    fn quadratic_halves() {
        let t = run_ippa(&cfg("quadratic", &[("a", 1.0)], 4.0, Schedule::Constant { eps: 0.0 }, 6), &Tolerance::default()).unwrap();
        for (k, s) in t.steps.iter().enumerate() {
            assert!((s.x_next[0] - 4.0 / 2f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
        assert_eq!(t.status(), Status::Holds);
    }

    #[test]
    fn stopping_rule() {
        let mut c = cfg("abs", &[], 3.0, Schedule::Constant { eps: 0.0 }, 50);
        c.tol_r = Some(1e-12);
        c.tol_eps = Some(0.0);
        let t = run_ippa(&c, &Tolerance::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.steps.len(), 4);
    }

    #[test]
    fn budget_failure_truncates() {
        let c = cfg("cosquad", &[], 0.5, Schedule::Constant { eps: 0.0 }, 3);
        let t = run_ippa(&c, &Tolerance::default()).unwrap();
        // An exact budget is only met when bisection lands on a zero derivative.
        match &t.error {
            Some(e) => {
                assert!(e.contains("exceeds budget"));
                assert!(t.steps.len() < 3);
                assert_eq!(t.status(), Status::Inconclusive);
            }
            None => assert_eq!(t.steps.len(), 3),
        }
    }

    #[test]
    fn rejects_large_steps() {
        let mut c = cfg("negquad", &[("a", 1.0)], 1.0, Schedule::Constant { eps: 0.0 }, 3);
        c.alpha = 1.0;
        assert!(matches!(run_ippa(&c, &Tolerance::default()), Err(WcError::Precondition(_))));
        let c = cfg("abs", &[], 1.0, Schedule::Geometric { eps0: 1.0, q: 1.0 }, 3);
        assert!(run_ippa(&c, &Tolerance::default()).is_err());
    }
}
