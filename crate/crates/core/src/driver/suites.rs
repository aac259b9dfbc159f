//! Randomized property suites over the catalog.
//!
//! Every case draws its inputs from its own ChaCha stream, keyed by the
//! run seed, the suite and the case index, so cases run in parallel and the
//! report does not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::catalog::{standard_catalog, FunctionDesc, FunctionSpec};
use crate::conjugate::{conjugate_identity_check, conjugate_sum_decompose, rho_conjugate, rho_conjugate_grid, Exactness};
use crate::convexity::{check_paraconvexity, check_weak_convexity, DEFAULT_LAMBDAS};
use crate::driver::problem::{resolve_grid, CubeGrid};
use crate::driver::ippa::{run_ippa, CertificateMode, IppaConfig, Schedule};
use crate::driver::report::{Record, Report};
use crate::error::{Result, WcError};
use crate::grid::{tabulate, GridDomain, Status, Tolerance, Verdict};
use crate::iprox::{certify_type1, certify_type1_single_eps, certify_type2, eps_prox_set, solve_eps_prox, type1_implies_type2, ProxQuery};
use crate::subdiff::{check_globalisation, grid_resolution, membership_grid, membership_via_conjugate, sample_subgradients, SubgradientQuery};
use crate::sumrule::{decompose_subgradient, forward_sum_inclusion, smooth_shift_inclusion};
use crate::vector::Vector;

/// Tolerance on conjugate values and decomposition budgets.
pub const VALUE_TOL: f64 = 1e-6;
/// Budget tolerance of the sum-rule round trip.
pub const BUDGET_TOL: f64 = 1e-9;
/// Draws per case before a premise is given up on.
const PREMISE_ATTEMPTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Modulus,
    MembershipMonotonicity,
    MembershipSweep,
    Nonemptiness,
    Globalisation,
    ConjugateIdentity,
    ConjugateDecomposition,
    SumruleForward,
    SumruleRoundtrip,
    SmoothShift,
    Type2Equivalence,
    Type1Chain,
    Ippa,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 13] = [
        SuiteKind::Modulus,
        SuiteKind::MembershipMonotonicity,
        SuiteKind::MembershipSweep,
        SuiteKind::Nonemptiness,
        SuiteKind::Globalisation,
        SuiteKind::ConjugateIdentity,
        SuiteKind::ConjugateDecomposition,
        SuiteKind::SumruleForward,
        SuiteKind::SumruleRoundtrip,
        SuiteKind::SmoothShift,
        SuiteKind::Type2Equivalence,
        SuiteKind::Type1Chain,
        SuiteKind::Ippa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Modulus => "modulus",
            SuiteKind::MembershipMonotonicity => "membership-monotonicity",
            SuiteKind::MembershipSweep => "membership-sweep",
            SuiteKind::Nonemptiness => "nonemptiness",
            SuiteKind::Globalisation => "globalisation",
            SuiteKind::ConjugateIdentity => "conjugate-identity",
            SuiteKind::ConjugateDecomposition => "conjugate-decomposition",
            SuiteKind::SumruleForward => "sumrule-forward",
            SuiteKind::SumruleRoundtrip => "sumrule-roundtrip",
            SuiteKind::SmoothShift => "smooth-shift",
            SuiteKind::Type2Equivalence => "type2-equivalence",
            SuiteKind::Type1Chain => "type1-chain",
            SuiteKind::Ippa => "ippa",
        }
    }

    /// Number of cases when the configuration does not say.
    pub fn default_cases(self) -> usize {
        match self {
            SuiteKind::Modulus | SuiteKind::Ippa => 1,
            SuiteKind::MembershipMonotonicity => 500,
            SuiteKind::MembershipSweep | SuiteKind::SumruleForward => 200,
            SuiteKind::Nonemptiness | SuiteKind::ConjugateIdentity | SuiteKind::Type1Chain => 50,
            SuiteKind::Globalisation | SuiteKind::SumruleRoundtrip | SuiteKind::SmoothShift | SuiteKind::Type2Equivalence => 100,
            SuiteKind::ConjugateDecomposition => 10,
        }
    }
}

/// One suite entry of an experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub name: SuiteKind,
    /// Number of random cases; see [`SuiteKind::default_cases`].
    #[serde(default)]
    pub cases: Option<usize>,
    /// Dimension of the sampled points (1 to 3).
    #[serde(default)]
    pub dim: Option<usize>,
    /// Function pool; defaults to the standard catalog.
    #[serde(default)]
    pub functions: Option<Vec<FunctionDesc>>,
    /// Run configuration of the `ippa` suite.
    #[serde(default)]
    pub ippa: Option<IppaConfig>,
}

impl SuiteSpec {
    pub fn new(name: SuiteKind) -> Self {
        SuiteSpec { name, cases: None, dim: None, functions: None, ippa: None }
    }

    pub fn with_cases(mut self, cases: usize) -> Self {
        self.cases = Some(cases);
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    pub fn with_functions(mut self, functions: Vec<FunctionDesc>) -> Self {
        self.functions = Some(functions);
        self
    }
}

/// Settings shared by all suites of a run.
#[derive(Clone, Debug)]
pub struct SuiteContext {
    pub seed: u64,
    pub tol: Tolerance,
    /// Lattice override; the standard grid of the suite dimension otherwise.
    pub grid: Option<GridDomain>,
    /// Cube lattice in the suite dimension; ignored when `grid` is set.
    pub cube: Option<CubeGrid>,
}

impl SuiteContext {
    pub fn new(seed: u64) -> Self {
        SuiteContext { seed, tol: Tolerance::default(), grid: None, cube: None }
    }
}

struct Env {
    kind: SuiteKind,
    seed: u64,
    tol: Tolerance,
    domain: GridDomain,
    pool: Vec<(FunctionDesc, FunctionSpec)>,
}

impl Env {
    fn rng(&self, case: usize) -> ChaCha8Rng {
        let suite = SuiteKind::ALL.iter().position(|k| *k == self.kind).unwrap_or(0) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.set_stream(case as u64);
        rng
    }

    fn id(&self, case: impl std::fmt::Display) -> String {
        format!("{}/{case}", self.kind.name())
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn pick<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a (FunctionDesc, FunctionSpec) {
        &self.pool[rng.gen_range(0..self.pool.len())]
    }

    /// A uniformly drawn lattice point of `[lo, hi]ⁿ ∩ domain`.
    fn lattice_point(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vector {
        let d = &self.domain;
        Vector::new(
            (0..d.dim())
                .map(|i| {
                    let a = ((lo - d.lo()[i]) / d.step()).ceil().max(0.0) as usize;
                    let b = (((hi - d.lo()[i]) / d.step()).floor() as usize).min(d.axis_len(i) - 1);
                    d.axis_value(i, rng.gen_range(a..=b.max(a)))
                })
                .collect(),
        )
    }

    fn point(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vector {
        Vector::new((0..self.dim()).map(|_| rng.gen_range(lo..hi)).collect())
    }
}

fn center(f: &FunctionSpec, x: &Vector) -> Vector {
    Vector::new(f.derivative_box(x).iter().map(|(a, b)| 0.5 * (a + b)).collect())
}

fn jitter(rng: &mut ChaCha8Rng, v: &Vector, r: f64) -> Vector {
    Vector::new(v.iter().map(|c| c + rng.gen_range(-r..r)).collect())
}

/// `0` with probability `p_zero`, else uniform on `[0, hi)`.
fn budget(rng: &mut ChaCha8Rng, p_zero: f64, hi: f64) -> f64 {
    if rng.gen_bool(p_zero) {
        0.0
    } else {
        rng.gen_range(0.0..hi)
    }
}

/// A step with `1/α > max(ρ, c₂)`.
fn step_for(rng: &mut ChaCha8Rng, f: &FunctionSpec, n: usize) -> f64 {
    let r = f.rho.max(f.minorant(n).c2);
    let hi = if r > 0.0 { (0.8 / r).min(2.0) } else { 2.0 };
    rng.gen_range(0.2..hi)
}

fn random_subgradient(rng: &mut ChaCha8Rng, f: &FunctionSpec, x: &Vector, eps: f64, env: &Env) -> Result<Option<Vector>> {
    let s = sample_subgradients(f, x, eps, 4, &env.domain, &env.tol)?;
    if s.elements.is_empty() {
        return Ok(None);
    }
    Ok(Some(s.elements[rng.gen_range(0..s.elements.len())].clone()))
}

/// Draws an element of `∂^ε_{(2,C)}(f₀ + f₁)(x)`, `C = (ρ₀ + ρ₁)/2`, that the
/// grid oracle verifies. The sampler's conjugate check cannot tell a slope of
/// `1e-10` from zero, so its elements are re-checked here.
#[allow(clippy::too_many_arguments)]
fn premise_sample(rng: &mut ChaCha8Rng, f0: &FunctionSpec, rho0: f64, f1: &FunctionSpec, rho1: f64, x: &Vector, eps: f64, env: &Env) -> Result<Option<Vector>> {
    let sum = FunctionSpec::sum(&[f0.clone(), f1.clone()])?;
    let Some(u) = random_subgradient(rng, &sum, x, eps, env)? else {
        return Ok(None);
    };
    let q = SubgradientQuery::new(x.clone(), u.clone(), eps, 0.5 * (rho0 + rho1));
    Ok(membership_grid(&sum, &q, &env.domain, &env.tol)?.is_holds().then_some(u))
}

fn error_record(id: String, inputs: serde_json::Value, e: &WcError) -> Record {
    let status = if matches!(e, WcError::Inconsistency(_)) { Status::Fails } else { Status::Inconclusive };
    Record::error(id, inputs, status, e.to_string())
}

fn q_json(q: &SubgradientQuery) -> serde_json::Value {
    serde_json::to_value(q).expect("queries serialize")
}

/// Runs one suite.
pub fn run_suite(spec: &SuiteSpec, ctx: &SuiteContext) -> Result<Report> {
    let dim = spec.dim.unwrap_or(1);
    if !(1..=3).contains(&dim) {
        return Err(WcError::InvalidArgument(format!("suite dimension must be 1, 2 or 3, got {dim}")));
    }
    let domain = resolve_grid(ctx.cube.as_ref(), &ctx.grid, dim)?;
    let descs = spec.functions.clone().unwrap_or_else(standard_catalog);
    if descs.is_empty() {
        return Err(WcError::InvalidArgument("empty function pool".into()));
    }
    let pool = descs
        .into_iter()
        .map(|d| {
            let f = d.build()?;
            f.check_dim(domain.dim())?;
            Ok((d, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let env = Env { kind: spec.name, seed: ctx.seed, tol: ctx.tol, domain, pool };
    let cases = spec.cases.unwrap_or_else(|| spec.name.default_cases());
    let per_case = |f: &(dyn Fn(&Env, usize) -> Vec<Record> + Sync), n: usize| -> Vec<Record> {
        (0..n).into_par_iter().flat_map_iter(|i| f(&env, i)).collect()
    };
    let records = match spec.name {
        SuiteKind::Modulus => per_case(&modulus_case, env.pool.len()),
        SuiteKind::MembershipMonotonicity => per_case(&monotonicity_case, cases),
        SuiteKind::MembershipSweep => per_case(&sweep_case, cases),
        SuiteKind::Nonemptiness => per_case(&|e: &Env, i| nonempty_case(e, i, cases), env.pool.len() * 2 * cases),
        SuiteKind::Globalisation => per_case(&globalisation_case, cases),
        SuiteKind::ConjugateIdentity => per_case(&|e: &Env, i| identity_case(e, i, cases), env.pool.len() * cases),
        SuiteKind::ConjugateDecomposition => per_case(&decomposition_case, cases),
        SuiteKind::SumruleForward => per_case(&forward_case, cases),
        SuiteKind::SumruleRoundtrip => per_case(&roundtrip_case, cases),
        SuiteKind::SmoothShift => {
            let mut r = vec![smooth_shift_documented(&env)];
            r.extend(per_case(&smooth_shift_case, cases));
            r
        }
        SuiteKind::Type2Equivalence => per_case(&type2_case, cases),
        SuiteKind::Type1Chain => per_case(&type1_case, cases),
        SuiteKind::Ippa => ippa_records(&env, spec.ippa.clone().unwrap_or_else(default_ippa))?,
    };
    Ok(Report::new(records))
}

fn modulus_case(env: &Env, i: usize) -> Vec<Record> {
    let (desc, f) = &env.pool[i];
    let inputs = json!({ "function": desc, "rho": f.rho });
    let id = env.id(desc);
    let run = || -> Result<Record> {
        let holds = check_weak_convexity(f, f.rho, &env.domain, &env.tol)?;
        let sharp = if f.rho > 0.0 { Some(check_weak_convexity(f, (f.rho - 0.1).max(0.0), &env.domain, &env.tol)?) } else { None };
        let para = if f.rho > 0.0 {
            Some(check_paraconvexity(f, 2.0, 0.5 * f.rho, &env.domain, &DEFAULT_LAMBDAS, &env.tol)?)
        } else {
            None
        };
        let n = env.dim();
        let m = f.minorant(n);
        let gaps = tabulate(&env.domain, |x| f.eval(x) - m.eval(x))?;
        let minorant_margin = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let mut verdict = holds.clone();
        let mut reason = None;
        if let Some(s) = &sharp {
            if !s.is_fails() {
                reason = Some(format!("modulus not sharp: rho - 0.1 gives {}", s.status));
            }
        }
        if let Some(p) = &para {
            if p.status != holds.status {
                reason = Some(format!("paraconvexity with C = rho/2 gives {}, weak convexity {}", p.status, holds.status));
            }
        }
        if minorant_margin < -env.tol.abs_tol {
            reason = Some(format!("minorant exceeds f by {:.3e}", -minorant_margin));
        }
        if let Some(r) = reason {
            verdict = Verdict::fails(verdict.margin, verdict.witness, r);
        }
        Ok(Record::new(id.clone(), inputs.clone(), &verdict).with_outputs(json!({
            "sharpness": sharp.map(|s| s.status),
            "sharpness_witness": sharp_witness(f, env),
            "paraconvexity": para.map(|p| p.status),
            "minorant_margin": minorant_margin,
        })))
    };
    vec![run().unwrap_or_else(|e| error_record(id.clone(), inputs.clone(), &e))]
}

fn sharp_witness(f: &FunctionSpec, env: &Env) -> Option<Vector> {
    if f.rho <= 0.0 {
        return None;
    }
    check_weak_convexity(f, (f.rho - 0.1).max(0.0), &env.domain, &env.tol).ok().and_then(|v| v.witness)
}

fn monotonicity_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let (desc, f) = env.pick(&mut rng);
    let x0 = env.lattice_point(&mut rng, -3.0, 3.0);
    let v = jitter(&mut rng, &center(f, &x0), 0.5);
    let q = SubgradientQuery::new(x0, v, rng.gen_range(0.0..0.3), rng.gen_range(0.0..1.0));
    let inputs = json!({ "function": desc, "query": q_json(&q) });
    let run = || -> Result<Record> {
        let base = membership_grid(f, &q, &env.domain, &env.tol)?;
        if !base.is_holds() {
            return Ok(Record::new(env.id(i), inputs.clone(), &Verdict::holds(f64::INFINITY, None))
                .with_outputs(json!({ "base": base.status, "vacuous": true })));
        }
        let more_eps = membership_grid(f, &SubgradientQuery { eps: q.eps + 0.1, ..q.clone() }, &env.domain, &env.tol)?;
        let more_c = membership_grid(f, &SubgradientQuery { c: q.c + 0.1, ..q.clone() }, &env.domain, &env.tol)?;
        let verdict = if more_eps.is_holds() && more_c.is_holds() {
            Verdict::holds(more_eps.margin.min(more_c.margin), None)
        } else {
            Verdict::fails(more_eps.margin.min(more_c.margin), Some(q.x0.clone()), "enlarged query does not hold")
        };
        Ok(Record::new(env.id(i), inputs.clone(), &verdict)
            .with_outputs(json!({ "base": base.status, "eps_plus": more_eps.status, "c_plus": more_c.status })))
    };
    vec![run().unwrap_or_else(|e| error_record(env.id(i), inputs.clone(), &e))]
}

/// Grid and conjugate oracles on the same query, `C = ρ/2`.
///
/// The conjugate oracle gets the lattice resolution of the query as grid
/// slop, so a lattice that misses the continuous minimum cannot produce a
/// disagreement.
pub fn oracle_agreement(f: &FunctionSpec, q: &SubgradientQuery, domain: &GridDomain, tol: &Tolerance) -> Result<(Verdict, Verdict, f64)> {
    let grid = membership_grid(f, q, domain, tol)?;
    let slop = grid_resolution(f, q, domain)?.unwrap_or(0.0);
    let conj = membership_via_conjugate(f, q, domain, &tol.with_slop(tol.grid_slop + slop))?;
    Ok((grid, conj, slop))
}

fn sweep_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let (desc, f) = env.pick(&mut rng);
    let x0 = env.lattice_point(&mut rng, -3.0, 3.0);
    let v = jitter(&mut rng, &center(f, &x0), 0.3);
    let q = SubgradientQuery::new(x0, v, rng.gen_range(0.0..0.2), 0.5 * f.rho);
    let inputs = json!({ "function": desc, "query": q_json(&q) });
    let run = || -> Result<Record> {
        let (grid, conj, slop) = oracle_agreement(f, &q, &env.domain, &env.tol)?;
        let verdict = if grid.is_inconclusive() || conj.is_inconclusive() {
            Verdict::inconclusive(grid.margin, grid.witness.clone(), "an oracle is inconclusive")
        } else if grid.status == conj.status {
            Verdict::holds(grid.margin, grid.witness.clone())
        } else {
            Verdict::fails(grid.margin, grid.witness.clone(), format!("grid {} but conjugate {}", grid.status, conj.status))
        };
        Ok(Record::new(env.id(i), inputs.clone(), &verdict).with_outputs(json!({
            "grid": grid.status, "conjugate": conj.status, "grid_margin": grid.margin, "conjugate_margin": conj.margin, "slop": slop,
        })))
    };
    vec![run().unwrap_or_else(|e| error_record(env.id(i), inputs.clone(), &e))]
}

fn nonempty_case(env: &Env, i: usize, per: usize) -> Vec<Record> {
    let (fi, rest) = (i / (2 * per), i % (2 * per));
    let eps = if rest < per { 0.01 } else { 0.1 };
    let (desc, f) = &env.pool[fi];
    let mut rng = env.rng(i);
    let x0 = env.point(&mut rng, -4.0, 4.0);
    let id = env.id(format_args!("{desc}/{eps}/{}", rest % per));
    let inputs = json!({ "function": desc, "x0": x0, "eps": eps });
    let record = match sample_subgradients(f, &x0, eps, 1, &env.domain, &env.tol) {
        Ok(s) if !s.elements.is_empty() => {
            Record::new(id, inputs, &Verdict::holds(0.0, Some(s.elements[0].clone()))).with_outputs(json!({ "elements": s.elements }))
        }
        Ok(_) => Record::error(id, inputs, Status::Inconclusive, "no verified element found"),
        Err(e) => error_record(id, inputs, &e),
    };
    vec![record]
}

fn globalisation_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let (desc, f) = env.pick(&mut rng);
    let x0 = env.lattice_point(&mut rng, -3.0, 3.0);
    let c = center(f, &x0);
    let v = if rng.gen_bool(0.5) { c } else { jitter(&mut rng, &c, 0.3) };
    let radius = rng.gen_range(0.1..1.0);
    let q = SubgradientQuery::new(x0, v, 0.0, 0.5 * f.rho);
    let inputs = json!({ "function": desc, "query": q_json(&q), "local_radius": radius });
    let run = || -> Result<Record> {
        let rep = check_globalisation(f, &q, radius, &env.domain, &env.tol)?;
        let verdict = match (rep.local.status, rep.global.status) {
            (Status::Holds, Status::Fails) => Verdict::fails(rep.global.margin, rep.global.witness.clone(), "local subgradient is not global"),
            (Status::Holds, Status::Inconclusive) => Verdict::inconclusive(rep.global.margin, None, "global tail inconclusive"),
            _ => Verdict::holds(rep.global.margin, None),
        };
        Ok(Record::new(env.id(i), inputs.clone(), &verdict).with_outputs(json!({ "local": rep.local.status, "global": rep.global.status })))
    };
    vec![run().unwrap_or_else(|e| error_record(env.id(i), inputs.clone(), &e))]
}

/// Closed form against the lattice enclosure, and the ρ-conjugate against
/// the convexified conjugate, at `u` drawn from the range of the
/// convexified subdifferential over `[−3, 3]ⁿ`.
fn identity_case(env: &Env, i: usize, per: usize) -> Vec<Record> {
    let (desc, f) = &env.pool[i / per];
    let mut rng = env.rng(i);
    let rho = f.rho + if rng.gen_bool(0.5) { 0.0 } else { 0.5 };
    // u is a subgradient of f + (ρ/2)‖·‖² at a point inside the box, so the
    // sup is attained where the lattice can see it.
    let y = env.point(&mut rng, -3.0, 3.0);
    let u = Vector::new(
        f.derivative_box(&y).iter().zip(y.iter()).map(|((a, b), t)| rng.gen_range(*a..=*b) + rho * t).collect(),
    );
    let id = env.id(format_args!("{desc}/{}", i % per));
    let inputs = json!({ "function": desc, "rho": rho, "u": u });
    let run = || -> Result<Record> {
        let tol = env.tol.with_slop(env.tol.grid_slop + VALUE_TOL);
        let identity = conjugate_identity_check(f, rho, std::slice::from_ref(&u), &env.domain, &tol)?;
        let a = rho_conjugate(f, rho, &u, &env.domain, &env.tol)?;
        let mut verdict = identity.clone();
        let mut outputs = json!({ "identity": identity.status, "value": a.value });
        if a.exactness == Exactness::Analytic {
            let g = rho_conjugate_grid(f, rho, &u, &env.domain, &env.tol)?;
            let margin = if a.value.is_infinite() {
                if g.upper.is_infinite() { 0.0 } else { f64::NEG_INFINITY }
            } else {
                (a.value - g.value + VALUE_TOL).min(g.upper + VALUE_TOL - a.value)
            };
            let agree = Verdict::from_margin(margin, Some(u.clone()), &env.tol);
            outputs = json!({ "identity": identity.status, "value": a.value, "grid_value": g.value, "grid_upper": g.upper });
            if !agree.is_holds() {
                verdict = Verdict::fails(margin, Some(u.clone()), "closed form outside the lattice enclosure");
            }
        }
        Ok(Record::new(id.clone(), inputs.clone(), &verdict).with_outputs(outputs))
    };
    vec![run().unwrap_or_else(|e| error_record(id.clone(), inputs.clone(), &e))]
}

/// The pair used by case `k` of the decomposition suite: neighbours in pool
/// order.
fn pair(env: &Env, k: usize) -> (&(FunctionDesc, FunctionSpec), &(FunctionDesc, FunctionSpec)) {
    let m = env.pool.len();
    (&env.pool[k % m], &env.pool[(k + 1 + k / m) % m])
}

/// Twenty `s` points per pair, each `∂(f₀ + f₁ + (ρ/2)‖·‖²)(y)` at a random `y`.
fn decomposition_case(env: &Env, k: usize) -> Vec<Record> {
    const POINTS: usize = 20;
    let ((d0, f0), (d1, f1)) = pair(env, k);
    let mut rng = env.rng(k);
    let sum = match FunctionSpec::sum(&[f0.clone(), f1.clone()]) {
        Ok(s) => s,
        Err(e) => return vec![error_record(env.id(k), json!({ "f0": d0, "f1": d1 }), &e)],
    };
    let rho = f0.rho + f1.rho;
    (0..POINTS)
        .map(|j| {
            let y = env.point(&mut rng, -0.9, 0.9);
            let s = &center(&sum, &y) + &(&y * rho);
            let id = env.id(format_args!("{k}/{j}"));
            let inputs = json!({ "f0": d0, "rho0": f0.rho, "f1": d1, "rho1": f1.rho, "s": s });
            match conjugate_sum_decompose(f0, f0.rho, f1, f1.rho, &s, &env.domain, &env.tol) {
                Ok(dec) => {
                    let joint = if dec.joint.upper.is_finite() { dec.joint.upper } else { dec.joint.value };
                    let width = if dec.joint.upper.is_finite() { 0.0 } else { env.tol.grid_slop };
                    let sum_err = (&dec.p0 + &dec.p1).dist(&s);
                    let margin = (VALUE_TOL + width - (dec.value - joint).abs()).min(env.tol.abs_tol - sum_err);
                    let verdict = Verdict::from_margin(margin, Some(dec.p0.clone()), &env.tol);
                    Record::new(id, inputs, &verdict).with_outputs(json!({ "p0": dec.p0, "p1": dec.p1, "value": dec.value, "joint": joint }))
                }
                Err(e) => error_record(id, inputs, &e),
            }
        })
        .collect()
}

fn forward_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let mut last = None;
    for _ in 0..PREMISE_ATTEMPTS {
        let ((d0, f0), (d1, f1)) = (env.pick(&mut rng), env.pick(&mut rng));
        let x = env.lattice_point(&mut rng, -2.0, 2.0);
        let (e0, e1) = (budget(&mut rng, 0.25, 0.1), budget(&mut rng, 0.25, 0.1));
        let inputs = json!({ "f0": d0, "f1": d1, "x": x, "eps0": e0, "eps1": e1 });
        let drawn = (|| -> Result<Option<(Vector, Vector)>> {
            let w = random_subgradient(&mut rng, f0, &x, e0, env)?;
            let v = random_subgradient(&mut rng, f1, &x, e1, env)?;
            Ok(w.zip(v))
        })();
        let (w, v) = match drawn {
            Ok(Some(wv)) => wv,
            Ok(None) => continue,
            Err(e) => {
                last = Some(error_record(env.id(i), inputs, &e));
                continue;
            }
        };
        let inputs = json!({ "f0": d0, "f1": d1, "x": x, "eps0": e0, "eps1": e1, "w": w, "v": v });
        match forward_sum_inclusion(f0, f0.rho, e0, &w, f1, f1.rho, e1, &v, &x, &env.domain, &env.tol) {
            Ok(verdict) => return vec![Record::new(env.id(i), inputs, &verdict)],
            Err(e @ (WcError::InvalidArgument(_) | WcError::Inconclusive(_))) => last = Some(error_record(env.id(i), inputs, &e)),
            Err(e) => return vec![error_record(env.id(i), inputs, &e)],
        }
    }
    vec![last.unwrap_or_else(|| Record::error(env.id(i), json!(null), Status::Inconclusive, "no premise-verified sample"))]
}

fn roundtrip_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let mut last = None;
    for _ in 0..PREMISE_ATTEMPTS {
        let ((d0, f0), (d1, f1)) = (env.pick(&mut rng), env.pick(&mut rng));
        let x = env.point(&mut rng, -1.0, 1.0);
        let eps = budget(&mut rng, 0.2, 0.1);
        let share = rng.gen_range(0.0..=1.0);
        let inputs = json!({ "f0": d0, "f1": d1, "x": x, "eps": eps });
        let u = match premise_sample(&mut rng, f0, f0.rho, f1, f1.rho, &x, eps, env) {
            Ok(Some(u)) => u,
            Ok(None) => continue,
            Err(e) => {
                last = Some(error_record(env.id(i), inputs, &e));
                continue;
            }
        };
        let inputs = json!({ "f0": d0, "f1": d1, "x": x, "eps": eps, "u": u });
        let d = match decompose_subgradient(f0, f0.rho, f1, f1.rho, &x, &u, eps, &env.domain, &env.tol) {
            Ok(d) => d,
            Err(e @ WcError::InvalidArgument(_)) => {
                last = Some(error_record(env.id(i), inputs, &e));
                continue;
            }
            Err(e) => return vec![error_record(env.id(i), inputs, &e)],
        };
        let padded = (|| -> Result<(Verdict, Verdict)> {
            let (p0, p1) = d.padded(share)?;
            let m0 = membership_grid(f0, &SubgradientQuery::new(x.clone(), d.shifted(0), p0, 0.5 * f0.rho), &env.domain, &env.tol)?;
            let m1 = membership_grid(f1, &SubgradientQuery::new(x.clone(), d.shifted(1), p1, 0.5 * f1.rho), &env.domain, &env.tol)?;
            Ok((m0, m1))
        })();
        let (m0, m1) = match padded {
            Ok(p) => p,
            Err(e) => return vec![error_record(env.id(i), inputs, &e)],
        };
        let budget_margin = eps + BUDGET_TOL - d.eps0 - d.eps1;
        let status = [&d.membership0, &d.membership1, &m0, &m1].iter().fold(Status::Holds, |s, v| s.worst(v.status));
        let verdict = if budget_margin < 0.0 {
            Verdict::fails(budget_margin, None, "budgets exceed eps")
        } else {
            let margin = budget_margin.min(d.membership0.margin).min(d.membership1.margin);
            Verdict { status, margin, witness: None, first_violation: None, reason: None }
        };
        return vec![Record::new(env.id(i), inputs, &verdict).with_outputs(json!({
            "p0": d.p0, "p1": d.p1, "eps0": d.eps0, "eps1": d.eps1,
            "membership0": d.membership0.status, "membership1": d.membership1.status,
            "padded_share": share, "padded0": m0.status, "padded1": m1.status,
        }))];
    }
    vec![last.unwrap_or_else(|| Record::error(env.id(i), json!(null), Status::Inconclusive, "no premise-verified sample"))]
}

/// `f₀ = (x − 2)²/2`, `f₁ = |x|`, `x = 1`, `u = 0.1`, `ε = 0.01`: the shifted
/// subgradient `1.1` belongs with `C = L₀/2` but not with `C = 0`.
fn smooth_shift_documented(env: &Env) -> Record {
    let id = env.id("documented");
    let inputs = json!({ "f0": "quadratic(a=1,c=2)", "f1": "abs", "x": 1.0, "u": 0.1, "eps": 0.01 });
    let run = || -> Result<Record> {
        let f0 = FunctionDesc::new("quadratic", &[("a", 1.0), ("c", 2.0)]).build()?;
        let f1 = FunctionDesc::new("abs", &[]).build()?;
        let n = env.dim();
        let x = Vector::filled(n, 1.0);
        let u = Vector::filled(n, 0.1);
        let with_l0 = smooth_shift_inclusion(&f0, &f1, 0.0, &x, &u, 0.01 * n as f64, &env.domain, &env.tol)?;
        let shifted = &u - &f0.gradient(&x).expect("smooth");
        let without = membership_grid(&f1, &SubgradientQuery::new(x.clone(), shifted, 0.01 * n as f64, 0.0), &env.domain, &env.tol)?;
        let verdict = if with_l0.is_holds() && without.is_fails() {
            Verdict::holds(with_l0.margin, None)
        } else {
            Verdict::fails(with_l0.margin, None, format!("C = L0/2 gives {}, C = 0 gives {}", with_l0.status, without.status))
        };
        Ok(Record::new(id.clone(), inputs.clone(), &verdict).with_outputs(json!({ "c_l0_half": with_l0.status, "c_zero": without.status })))
    };
    run().unwrap_or_else(|e| error_record(id.clone(), inputs.clone(), &e))
}

fn smooth_shift_case(env: &Env, i: usize) -> Vec<Record> {
    let smooth: Vec<&(FunctionDesc, FunctionSpec)> = env.pool.iter().filter(|(_, f)| f.lipschitz_grad.is_some() && f.rho == 0.0).collect();
    if smooth.is_empty() {
        return vec![Record::error(env.id(i), json!(null), Status::Inconclusive, "no smooth convex function in the pool")];
    }
    let mut rng = env.rng(i);
    let mut last = None;
    for _ in 0..PREMISE_ATTEMPTS {
        let (d0, f0) = smooth[rng.gen_range(0..smooth.len())];
        let (d1, f1) = env.pick(&mut rng);
        let x = env.point(&mut rng, -1.0, 1.0);
        let eps = budget(&mut rng, 0.2, 0.1);
        let inputs = json!({ "f0": d0, "f1": d1, "rho": f1.rho, "x": x, "eps": eps });
        let u = match premise_sample(&mut rng, f0, 0.0, f1, f1.rho, &x, eps, env) {
            Ok(Some(u)) => u,
            Ok(None) => continue,
            Err(e) => {
                last = Some(error_record(env.id(i), inputs, &e));
                continue;
            }
        };
        let inputs = json!({ "f0": d0, "f1": d1, "rho": f1.rho, "x": x, "eps": eps, "u": u });
        match smooth_shift_inclusion(f0, f1, f1.rho, &x, &u, eps, &env.domain, &env.tol) {
            Ok(v) => return vec![Record::new(env.id(i), inputs, &v)],
            Err(e @ (WcError::InvalidArgument(_) | WcError::Precondition(_))) => last = Some(error_record(env.id(i), inputs, &e)),
            Err(e) => return vec![error_record(env.id(i), inputs, &e)],
        }
    }
    vec![last.unwrap_or_else(|| Record::error(env.id(i), json!(null), Status::Inconclusive, "no premise-verified sample"))]
}

/// Outcome of comparing lattice ε-prox membership with Type-2 verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOutcome {
    pub compared: usize,
    /// Points inside the boundary band or with an inconclusive certificate.
    pub skipped: usize,
    /// `(x, member, type2 status)` for every disagreement.
    pub disagreements: Vec<(Vector, bool, Status)>,
}

/// Checks `x ∈ ε-prox ⟺ Type-2 HOLDS` on up to `max_points` lattice points
/// near the ε-sublevel set, skipping points whose objective gap lies within
/// `2·slop + abs_tol` of `ε`, where `slop` is the lattice resolution of the
/// point's Type-2 query.
pub fn type2_equivalence(f: &FunctionSpec, q: &ProxQuery, domain: &GridDomain, tol: &Tolerance, max_points: usize) -> Result<EquivalenceOutcome> {
    let set = eps_prox_set(f, q, domain, tol)?;
    let values = tabulate(domain, |x| q.objective(f, x))?;
    let window = set.reference + 3.0 * q.eps + 0.05;
    let near: Vec<usize> = (0..values.len()).filter(|&k| values[k] <= window).collect();
    let stride = near.len().div_ceil(max_points.max(1)).max(1);
    let mut out = EquivalenceOutcome { compared: 0, skipped: 0, disagreements: Vec::new() };
    for &k in near.iter().step_by(stride) {
        let x = domain.point(k);
        let member = values[k] <= set.threshold;
        let cert = certify_type2(f, f.rho, q, &x, domain, tol)?;
        let tq = SubgradientQuery::new(x.clone(), cert.v.clone(), q.eps, cert.c_prime);
        let slop = grid_resolution(f, &tq, domain)?.unwrap_or(0.0);
        let band = 2.0 * slop + tol.abs_tol + tol.grid_slop;
        if (values[k] - set.reference - q.eps).abs() <= band || cert.verdict.is_inconclusive() {
            out.skipped += 1;
            continue;
        }
        out.compared += 1;
        if member != cert.verdict.is_holds() {
            out.disagreements.push((x, member, cert.verdict.status));
        }
    }
    Ok(out)
}

fn type2_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let (desc, f) = env.pick(&mut rng);
    let alpha = step_for(&mut rng, f, env.dim());
    let q = ProxQuery::new(env.point(&mut rng, -2.0, 2.0), alpha, rng.gen_range(0.001..0.1));
    let inputs = json!({ "function": desc, "rho": f.rho, "query": q });
    let run = || -> Result<Record> {
        let out = type2_equivalence(f, &q, &env.domain, &env.tol, 40)?;
        let verdict = match out.disagreements.first() {
            None if out.compared > 0 => Verdict::holds(0.0, None),
            None => Verdict::inconclusive(0.0, None, "every point fell in the boundary band"),
            Some((x, member, status)) => Verdict::fails(
                -(out.disagreements.len() as f64),
                Some(x.clone()),
                format!("sublevel member = {member} but Type-2 {status}"),
            ),
        };
        Ok(Record::new(env.id(i), inputs.clone(), &verdict)
            .with_outputs(json!({ "compared": out.compared, "skipped": out.skipped, "disagreements": out.disagreements.len() })))
    };
    vec![run().unwrap_or_else(|e| error_record(env.id(i), inputs.clone(), &e))]
}

fn type1_case(env: &Env, i: usize) -> Vec<Record> {
    let mut rng = env.rng(i);
    let (desc, f) = env.pick(&mut rng);
    let alpha = step_for(&mut rng, f, env.dim());
    let q = ProxQuery::new(env.point(&mut rng, -2.0, 2.0), alpha, rng.gen_range(0.001..0.05));
    let from_solver = rng.gen_bool(0.5);
    let pick = rng.gen::<f64>();
    let inputs = json!({ "function": desc, "rho": f.rho, "query": q, "from_solver": from_solver });
    let run = || -> Result<Record> {
        let x = if from_solver {
            solve_eps_prox(f, f.rho, &q)?.x
        } else {
            let set = eps_prox_set(f, &q, &env.domain, &env.tol)?;
            set.members[((pick * set.members.len() as f64) as usize).min(set.members.len() - 1)].clone()
        };
        let cert = certify_type1(f, f.rho, &q, &x, &env.domain, &env.tol)?;
        let single = certify_type1_single_eps(f, f.rho, &q, &x, &env.domain, &env.tol)?;
        let implied = type1_implies_type2(&cert, f, f.rho, &q, &env.domain, &env.tol)?;
        let quad = cert.e.norm_sq() / (2.0 * q.alpha);
        let margin = (cert.eps0 + env.tol.abs_tol - quad).min(q.eps + env.tol.abs_tol - cert.eps0 - cert.eps1);
        let status = [&cert.verdict_membership, &single.verdict_quadratic, &single.verdict_membership, &implied]
            .iter()
            .fold(if margin >= 0.0 { Status::Holds } else { Status::Fails }, |s, v| s.worst(v.status));
        let verdict = Verdict { status, margin: margin.min(implied.margin), witness: Some(x.clone()), first_violation: None, reason: None };
        Ok(Record::new(env.id(i), inputs.clone(), &verdict).with_outputs(json!({
            "x_eps": x, "e": cert.e, "eps0": cert.eps0, "eps1": cert.eps1, "vector": cert.vector,
            "type1": cert.verdict_membership.status, "single_eps": single.verdict_membership.status, "type2": implied.status,
        })))
    };
    vec![run().unwrap_or_else(|e| error_record(env.id(i), inputs.clone(), &e))]
}

/// cosquad from `x₀ = 0.5` with `α = 1`, a geometric schedule and both
/// certificates.
pub fn default_ippa() -> IppaConfig {
    IppaConfig {
        function: FunctionDesc::new("cosquad", &[]),
        alpha: 1.0,
        x0: Vector::scalar(0.5),
        schedule: Schedule::Geometric { eps0: 1e-2, q: 0.5 },
        max_iters: 40,
        certificate_mode: CertificateMode::Both,
        rho: None,
        grid: None,
        tol_r: None,
        tol_eps: None,
    }
}

fn ippa_records(env: &Env, cfg: IppaConfig) -> Result<Vec<Record>> {
    let cfg = IppaConfig { grid: cfg.grid.clone().or_else(|| (cfg.x0.dim() == env.dim()).then(|| env.domain.clone())), ..cfg };
    Ok(ippa_report(&cfg, &env.tol)?.records)
}

/// Runs the IPPA and reports one record per step, an error record if the
/// trace was truncated, and the final criticality record.
pub fn ippa_report(cfg: &IppaConfig, tol: &Tolerance) -> Result<Report> {
    let id = |case: std::fmt::Arguments| format!("{}/{case}", SuiteKind::Ippa.name());
    let inputs = serde_json::to_value(cfg).expect("configs serialize");
    let trace = run_ippa(cfg, tol)?;
    let mut records: Vec<Record> = trace
        .steps
        .iter()
        .map(|s| {
            let margin = s.type2.as_ref().map_or(s.descent.margin, |c| c.verdict.margin.min(s.descent.margin));
            let verdict = Verdict { status: s.status(), margin, witness: Some(s.x_next.clone()), first_violation: None, reason: s.type1_error.clone() };
            Record::new(id(format_args!("step/{}", s.k)), json!({ "k": s.k, "x": s.x, "eps": s.eps }), &verdict).with_outputs(json!({
                "x_next": s.x_next, "objective": s.objective, "residual": s.residual, "gap_bound": s.gap_bound,
                "descent": s.descent.status,
                "type2": s.type2.as_ref().map(|c| c.verdict.status),
                "type1_quadratic": s.type1.as_ref().map(|c| c.verdict_quadratic.status),
                "type1_membership": s.type1.as_ref().map(|c| c.verdict_membership.status),
                "e": s.type1.as_ref().map(|c| c.e.clone()),
            }))
        })
        .collect();
    if let Some(err) = &trace.error {
        records.push(Record::error(id(format_args!("error")), inputs.clone(), Status::Inconclusive, err.clone()));
    }
    let c = &trace.criticality;
    records.push(Record::new(id(format_args!("final")), inputs, &c.verdict).with_outputs(json!({
        "x": trace.final_x, "eps": c.eps, "C": c.c, "iterations": trace.steps.len(), "converged": trace.converged,
    })));
    Ok(Report::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: SuiteKind, cases: usize) -> Report {
        run_suite(&SuiteSpec::new(kind).with_cases(cases), &SuiteContext::new(11)).unwrap()
    }

    #[test]
    fn reports_are_reproducible() {
        let a = small(SuiteKind::MembershipSweep, 12);
        let b = small(SuiteKind::MembershipSweep, 12);
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 12);
    }

    #[test]
    fn suite_names_roundtrip() {
        for k in SuiteKind::ALL {
            let text = serde_json::to_string(&k).unwrap();
            assert_eq!(text, format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn documented_smooth_shift_sample() {
        let r = small(SuiteKind::SmoothShift, 0);
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].verdict, Status::Holds, "{:?}", r.records[0]);
    }

    #[test]
    fn ippa_suite_records_every_step() {
        let r = small(SuiteKind::Ippa, 1);
        assert_eq!(r.records.len(), 41);
        assert_eq!(r.status(), Status::Holds);
    }
}
