//! Problem files of the command-line subcommands.
//!
//! Every file is a JSON object with a `function` (`{"name", "params"}`, or
//! `{"name": "sum", "parts": [...]}`) and the fields of its query. A `grid`
//! field overrides the standard lattice of the problem dimension; the
//! caller's grid, when given, overrides both.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::catalog::{FunctionDesc, FunctionSpec};
use crate::conjugate::{conjugate_identity_check, rho_conjugate};
use crate::driver::report::{Record, Report};
use crate::error::{Result, WcError};
use crate::grid::{GridDomain, Status, Tolerance, Verdict};
use crate::iprox::{certify_type1, certify_type1_single_eps, certify_type2, eps_prox_set, solve_eps_prox, type1_implies_type2, ProxQuery};
use crate::subdiff::{membership_grid, membership_via_conjugate, SubgradientQuery};
use crate::sumrule::{decompose_subgradient, forward_sum_inclusion, smooth_shift_inclusion};
use crate::vector::Vector;

/// Parses JSON into `T`, reporting the line, column and field path of the
/// first error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        WcError::Parse(format!("line {} column {}, at `{path}`: {inner}", inner.line(), inner.column()))
    })
}

/// A cube lattice `[lo, hi]ⁿ` whose dimension comes from the problem, as
/// given by `--grid lo,hi,step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl CubeGrid {
    pub fn domain(&self, n: usize) -> Result<GridDomain> {
        GridDomain::cube(n, self.lo, self.hi, self.step)
    }
}

impl std::str::FromStr for CubeGrid {
    type Err = WcError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let nums = parts.iter().map(|p| p.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
        match nums.as_deref() {
            Ok(&[lo, hi, step]) => {
                let g = CubeGrid { lo, hi, step };
                g.domain(1)?;
                Ok(g)
            }
            _ => Err(WcError::Parse(format!("expected lo,hi,step, got {s:?}"))),
        }
    }
}

pub(crate) fn resolve_grid(over: Option<&CubeGrid>, own: &Option<GridDomain>, dim: usize) -> Result<GridDomain> {
    let g = match over {
        Some(c) => Some(c.domain(dim)?),
        None => own.clone(),
    };
    match g {
        Some(g) => {
            crate::error::ensure_dim(g.dim(), dim)?;
            Ok(g)
        }
        None if (1..=3).contains(&dim) => Ok(GridDomain::standard(dim)),
        None => Err(WcError::InvalidArgument(format!("no standard grid in dimension {dim}; pass one"))),
    }
}

fn build(desc: &FunctionDesc, dim: usize) -> Result<FunctionSpec> {
    let f = desc.build()?;
    f.check_dim(dim)?;
    Ok(f)
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("problem values serialize")
}

/// Which membership oracle `check-membership` runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    #[default]
    Grid,
    Conjugate,
    Both,
}

/// `v ∈ ∂^ε_{(γ,C)} f(x₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipProblem {
    pub function: FunctionDesc,
    pub x0: Vector,
    pub v: Vector,
    pub eps: f64,
    #[serde(rename = "C", alias = "c")]
    pub c: f64,
    #[serde(default = "two")]
    pub gamma: f64,
    #[serde(default)]
    pub oracle: Oracle,
    #[serde(default)]
    pub grid: Option<GridDomain>,
}

fn two() -> f64 {
    2.0
}

impl MembershipProblem {
    pub fn run(&self, grid: Option<&CubeGrid>, tol: &Tolerance) -> Result<Report> {
        let n = self.x0.dim();
        let f = build(&self.function, n)?;
        let domain = resolve_grid(grid, &self.grid, n)?;
        let q = SubgradientQuery { x0: self.x0.clone(), v: self.v.clone(), eps: self.eps, c: self.c, gamma: self.gamma };
        let inputs = to_value(self);
        let mut records = Vec::new();
        if matches!(self.oracle, Oracle::Grid | Oracle::Both) {
            records.push(Record::new("check-membership/grid", inputs.clone(), &membership_grid(&f, &q, &domain, tol)?));
        }
        if matches!(self.oracle, Oracle::Conjugate | Oracle::Both) {
            records.push(Record::new("check-membership/conjugate", inputs, &membership_via_conjugate(&f, &q, &domain, tol)?));
        }
        Ok(Report::new(records))
    }
}

/// `(f)*_ρ(u)` at each `u`, with the identity check against the convexified
/// conjugate as the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateProblem {
    pub function: FunctionDesc,
    /// Defaults to the declared modulus.
    #[serde(default)]
    pub rho: Option<f64>,
    pub u: Vec<Vector>,
    #[serde(default)]
    pub grid: Option<GridDomain>,
}

impl ConjugateProblem {
    pub fn run(&self, grid: Option<&CubeGrid>, tol: &Tolerance) -> Result<Report> {
        let n = self.u.first().ok_or_else(|| WcError::InvalidArgument("no u points".into()))?.dim();
        let f = build(&self.function, n)?;
        let rho = self.rho.unwrap_or(f.rho);
        let domain = resolve_grid(grid, &self.grid, n)?;
        let records = self
            .u
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let c = rho_conjugate(&f, rho, u, &domain, tol)?;
                let check = conjugate_identity_check(&f, rho, std::slice::from_ref(u), &domain, tol)?;
                Ok(Record::new(format!("conjugate/{k}"), json!({ "function": self.function, "rho": rho, "u": u }), &check).with_outputs(to_value(&c)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Report::new(records))
    }
}

/// The three sum-rule checks, selected by `mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SumRuleProblem {
    /// `w ∈ ∂^{ε₀} f₀(x)`, `v ∈ ∂^{ε₁} f₁(x)` ⟹ `w + v ∈ ∂^{ε₀+ε₁}(f₀ + f₁)(x)`.
    Forward {
        f0: FunctionDesc,
        f1: FunctionDesc,
        #[serde(default)]
        rho0: Option<f64>,
        #[serde(default)]
        rho1: Option<f64>,
        x: Vector,
        w: Vector,
        v: Vector,
        eps0: f64,
        eps1: f64,
        #[serde(default)]
        grid: Option<GridDomain>,
    },
    /// Splits `u ∈ ∂^ε(f₀ + f₁)(x)` into part subgradients and budgets.
    Decompose {
        f0: FunctionDesc,
        f1: FunctionDesc,
        #[serde(default)]
        rho0: Option<f64>,
        #[serde(default)]
        rho1: Option<f64>,
        x: Vector,
        u: Vector,
        eps: f64,
        #[serde(default)]
        grid: Option<GridDomain>,
    },
    /// `u − ∇f₀(x) ∈ ∂^ε_{(2,(ρ+L₀)/2)} f₁(x)` for smooth convex `f₀`.
    SmoothShift {
        f0: FunctionDesc,
        f1: FunctionDesc,
        #[serde(default)]
        rho: Option<f64>,
        x: Vector,
        u: Vector,
        eps: f64,
        #[serde(default)]
        grid: Option<GridDomain>,
    },
}

impl SumRuleProblem {
    pub fn run(&self, over: Option<&CubeGrid>, tol: &Tolerance) -> Result<Report> {
        let inputs = to_value(self);
        let record = match self {
            SumRuleProblem::Forward { f0, f1, rho0, rho1, x, w, v, eps0, eps1, grid } => {
                let n = x.dim();
                let (g0, g1) = (build(f0, n)?, build(f1, n)?);
                let domain = resolve_grid(over, grid, n)?;
                let verdict = forward_sum_inclusion(&g0, rho0.unwrap_or(g0.rho), *eps0, w, &g1, rho1.unwrap_or(g1.rho), *eps1, v, x, &domain, tol)?;
                Record::new("sum-rule/forward", inputs, &verdict)
            }
            SumRuleProblem::Decompose { f0, f1, rho0, rho1, x, u, eps, grid } => {
                let n = x.dim();
                let (g0, g1) = (build(f0, n)?, build(f1, n)?);
                let domain = resolve_grid(over, grid, n)?;
                let d = decompose_subgradient(&g0, rho0.unwrap_or(g0.rho), &g1, rho1.unwrap_or(g1.rho), x, u, *eps, &domain, tol)?;
                let status = d.membership0.status.worst(d.membership1.status);
                let margin = (eps + tol.abs_tol - d.eps0 - d.eps1).min(d.membership0.margin).min(d.membership1.margin);
                let verdict = Verdict { status, margin, witness: None, first_violation: None, reason: None };
                Record::new("sum-rule/decompose", inputs, &verdict).with_outputs(to_value(&d))
            }
            SumRuleProblem::SmoothShift { f0, f1, rho, x, u, eps, grid } => {
                let n = x.dim();
                let (g0, g1) = (build(f0, n)?, build(f1, n)?);
                let domain = resolve_grid(over, grid, n)?;
                let verdict = smooth_shift_inclusion(&g0, &g1, rho.unwrap_or(g1.rho), x, u, *eps, &domain, tol)?;
                Record::new("sum-rule/smooth-shift", inputs, &verdict)
            }
        };
        Ok(Report::new(vec![record]))
    }
}

/// A prox query on one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxProblem {
    pub function: FunctionDesc,
    #[serde(default)]
    pub rho: Option<f64>,
    pub y: Vector,
    pub alpha: f64,
    pub eps: f64,
    /// Candidate point for `certify`; the solver output when absent.
    #[serde(default)]
    pub x_eps: Option<Vector>,
    #[serde(default)]
    pub grid: Option<GridDomain>,
}

/// Certificate kinds of the `certify` subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyKind {
    Type1,
    Type2,
    /// Type-1, its single-ε variant, the implied Type-2, and Type-2 directly.
    Chain,
}

impl ProxProblem {
    fn setup(&self, over: Option<&CubeGrid>) -> Result<(FunctionSpec, f64, ProxQuery, GridDomain)> {
        let n = self.y.dim();
        let f = build(&self.function, n)?;
        let rho = self.rho.unwrap_or(f.rho);
        let q = ProxQuery::new(self.y.clone(), self.alpha, self.eps);
        q.validate()?;
        Ok((f, rho, q, resolve_grid(over, &self.grid, n)?))
    }

    /// Solver output, checked against the lattice ε-prox set.
    pub fn run_eps_prox(&self, over: Option<&CubeGrid>, tol: &Tolerance) -> Result<Report> {
        let (f, rho, q, domain) = self.setup(over)?;
        let sol = solve_eps_prox(&f, rho, &q)?;
        let set = eps_prox_set(&f, &q, &domain, tol)?;
        let value = q.objective(&f, &sol.x);
        let verdict = Verdict::from_margin(set.threshold - value, Some(sol.x.clone()), tol);
        let outputs = json!({
            "x": sol.x, "gap_bound": sol.gap_bound, "exact": sol.exact, "objective": value,
            "reference": set.reference, "threshold": set.threshold, "members": set.members,
        });
        Ok(Report::new(vec![Record::new("eps-prox", to_value(self), &verdict).with_outputs(outputs)]))
    }

    pub fn run_certify(&self, kind: CertifyKind, over: Option<&CubeGrid>, tol: &Tolerance) -> Result<Report> {
        let (f, rho, q, domain) = self.setup(over)?;
        let x = match &self.x_eps {
            Some(x) => x.clone(),
            None => solve_eps_prox(&f, rho, &q)?.x,
        };
        let inputs = json!({ "function": self.function, "rho": rho, "y": q.y, "alpha": q.alpha, "eps": q.eps, "x_eps": x });
        let mut records = Vec::new();
        if matches!(kind, CertifyKind::Type2 | CertifyKind::Chain) {
            let c = certify_type2(&f, rho, &q, &x, &domain, tol)?;
            records.push(Record::new("certify/type2", inputs.clone(), &c.verdict).with_outputs(to_value(&c)));
        }
        if matches!(kind, CertifyKind::Type1 | CertifyKind::Chain) {
            let c = match certify_type1(&f, rho, &q, &x, &domain, tol) {
                Ok(c) => c,
                Err(e) => {
                    let status = if matches!(e, WcError::Inconsistency(_)) { Status::Fails } else { Status::Inconclusive };
                    records.push(Record::error("certify/type1", inputs, status, e.to_string()));
                    return Ok(Report::new(records));
                }
            };
            let verdict = if c.holds() { c.verdict_membership.clone() } else { c.verdict_quadratic.clone() };
            records.push(Record::new("certify/type1", inputs.clone(), &verdict).with_outputs(to_value(&c)));
            if kind == CertifyKind::Chain {
                let single = certify_type1_single_eps(&f, rho, &q, &x, &domain, tol)?;
                records.push(Record::new("certify/type1-single-eps", inputs.clone(), &single.verdict_membership).with_outputs(to_value(&single)));
                records.push(Record::new("certify/type1-implies-type2", inputs, &type1_implies_type2(&c, &f, rho, &q, &domain, tol)?));
            }
        }
        Ok(Report::new(records))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn membership_problem() {
        let p: MembershipProblem =
            parse_json(r#"{"function": {"name": "abs"}, "x0": [1], "v": [0.9], "eps": 0.1, "C": 0, "oracle": "both"}"#).unwrap();
        let r = p.run(None, &tol()).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.status(), Status::Holds);
    }

    #[test]
    fn sum_rule_modes() {
        let p: SumRuleProblem = parse_json(
            r#"{"mode": "decompose", "f0": {"name": "quadratic", "params": {"a": 1, "c": 2}}, "f1": {"name": "abs"}, "x": [1.1], "u": [0], "eps": 0.005}"#,
        )
        .unwrap();
        let r = p.run(None, &tol()).unwrap();
        assert_eq!(r.status(), Status::Holds);
        assert!((r.records[0].outputs["eps0"].as_f64().unwrap() - 0.005).abs() < 1e-9);
        let bad = parse_json::<SumRuleProblem>(r#"{"mode": "sideways"}"#).unwrap_err();
        assert!(matches!(bad, WcError::Parse(_)));
    }

    #[test]
    fn certify_chain_on_worked_case() {
        let p: ProxProblem = parse_json(r#"{"function": {"name": "abs"}, "y": [2], "alpha": 1, "eps": 0.005, "x_eps": [1.1]}"#).unwrap();
        let r = p.run_certify(CertifyKind::Chain, None, &tol()).unwrap();
        assert_eq!(r.records.len(), 4);
        assert_eq!(r.status(), Status::Holds, "{}", r.to_json());
        let far = ProxProblem { x_eps: Some(Vector::scalar(1.2)), ..p };
        assert_eq!(far.run_certify(CertifyKind::Type2, None, &tol()).unwrap().status(), Status::Fails);
    }

    #[test]
    fn eps_prox_problem() {
        let p: ProxProblem = parse_json(r#"{"function": {"name": "cosquad"}, "y": [2], "alpha": 1, "eps": 0.001}"#).unwrap();
        let r = p.run_eps_prox(None, &tol()).unwrap();
        assert_eq!(r.status(), Status::Holds);
        assert!((r.records[0].outputs["x"][0].as_f64().unwrap() - 1.9521161780106642).abs() < 1e-6);
    }

    #[test]
    fn cube_grid_override() {
        let p: ConjugateProblem = parse_json(r#"{"function": {"name": "abs"}, "u": [[0.5]]}"#).unwrap();
        let g: CubeGrid = "-2,2,0.01".parse().unwrap();
        assert_eq!(p.run(Some(&g), &tol()).unwrap().status(), Status::Holds);
        assert!("-2,2".parse::<CubeGrid>().is_err());
        assert!("2,-2,0.1".parse::<CubeGrid>().is_err());
    }
}
