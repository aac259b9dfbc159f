//! Named weakly convex test functions.
//!
//! Every entry is coordinate-separable, `f(x) = Σᵢ φ(xᵢ)`, which is what
//! lets the oracles compute exact one-dimensional quantities (one-sided
//! derivatives, conjugates, prox) alongside brute-force grid scans.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Result, WcError};
use crate::grid::GridDomain;
use crate::vector::Vector;

/// Global minorant `f(x) ≥ c0 − c1‖x‖ − (c2/2)‖x‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMinorant {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl QuadraticMinorant {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        self.c0 - self.c1 * r2.sqrt() - 0.5 * self.c2 * r2
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Center {
    Scalar(f64),
    Point(Vector),
}

impl Center {
    fn at(&self, i: usize) -> f64 {
        match self {
            Center::Scalar(c) => *c,
            Center::Point(p) => p[i],
        }
    }
}

/// One separable building block.
#[derive(Clone, Debug, PartialEq)]
enum Atom {
    Abs,
    Quadratic { a: f64, center: Center },
    NegQuad { a: f64 },
    Mcp { lambda: f64, gamma: f64 },
    Scad { lambda: f64, gamma: f64 },
    CosQuad,
    Huber { delta: f64 },
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn soft_threshold(y: f64, k: f64) -> f64 {
    sign(y) * (y.abs() - k).max(0.0)
}

/// Minimum of `t²/4 + cos t`, attained where `t/2 = sin t`.
fn cosquad_min() -> f64 {
    let mut t: f64 = 1.9;
    for _ in 0..50 {
        let g = 0.5 * t - t.sin();
        let h = 0.5 - t.cos();
        t -= g / h;
    }
    0.25 * t * t + t.cos()
}

impl Atom {
    fn value(&self, i: usize, t: f64) -> f64 {
        match self {
            Atom::Abs => t.abs(),
            Atom::Quadratic { a, center } => {
                let d = t - center.at(i);
                0.5 * a * d * d
            }
            Atom::NegQuad { a } => -0.5 * a * t * t,
            Atom::Mcp { lambda, gamma } => {
                let s = t.abs();
                if s <= gamma * lambda {
                    lambda * s - s * s / (2.0 * gamma)
                } else {
                    0.5 * gamma * lambda * lambda
                }
            }
            Atom::Scad { lambda, gamma } => {
                let s = t.abs();
                if s <= *lambda {
                    lambda * s
                } else if s <= gamma * lambda {
                    (2.0 * gamma * lambda * s - s * s - lambda * lambda) / (2.0 * (gamma - 1.0))
                } else {
                    0.5 * lambda * lambda * (gamma + 1.0)
                }
            }
            Atom::CosQuad => 0.25 * t * t + t.cos(),
            Atom::Huber { delta } => {
                let s = t.abs();
                if s <= *delta {
                    0.5 * s * s / delta
                } else {
                    s - 0.5 * delta
                }
            }
        }
    }

    /// One-sided derivatives `(φ'₋(t), φ'₊(t))`.
    fn deriv(&self, i: usize, t: f64) -> (f64, f64) {
        let both = |d: f64| (d, d);
        match self {
            Atom::Abs => {
                if t == 0.0 {
                    (-1.0, 1.0)
                } else {
                    both(sign(t))
                }
            }
            Atom::Quadratic { a, center } => both(a * (t - center.at(i))),
            Atom::NegQuad { a } => both(-a * t),
            Atom::Mcp { lambda, gamma } => {
                let s = t.abs();
                if t == 0.0 {
                    (-lambda, *lambda)
                } else if s <= gamma * lambda {
                    both(sign(t) * (lambda - s / gamma))
                } else {
                    both(0.0)
                }
            }
            Atom::Scad { lambda, gamma } => {
                let s = t.abs();
                if t == 0.0 {
                    (-lambda, *lambda)
                } else if s <= *lambda {
                    both(sign(t) * lambda)
                } else if s <= gamma * lambda {
                    both(sign(t) * (gamma * lambda - s) / (gamma - 1.0))
                } else {
                    both(0.0)
                }
            }
            Atom::CosQuad => both(0.5 * t - t.sin()),
            Atom::Huber { delta } => {
                if t.abs() <= *delta {
                    both(t / delta)
                } else {
                    both(sign(t))
                }
            }
        }
    }

    fn kinks(&self) -> &'static [f64] {
        match self {
            Atom::Abs | Atom::Mcp { .. } | Atom::Scad { .. } => &[0.0],
            _ => &[],
        }
    }

    fn rho(&self) -> f64 {
        match self {
            Atom::Abs | Atom::Quadratic { .. } | Atom::Huber { .. } => 0.0,
            Atom::NegQuad { a } => *a,
            Atom::Mcp { gamma, .. } => 1.0 / gamma,
            Atom::Scad { gamma, .. } => 1.0 / (gamma - 1.0),
            Atom::CosQuad => 0.5,
        }
    }

    /// Constant curvature that offsets the modulus of other summands.
    fn strong_convexity(&self) -> f64 {
        match self {
            Atom::Quadratic { a, .. } => *a,
            _ => 0.0,
        }
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        match self {
            Atom::Quadratic { a, .. } | Atom::NegQuad { a } => Some(*a),
            Atom::CosQuad => Some(1.5),
            Atom::Huber { delta } => Some(1.0 / delta),
            _ => None,
        }
    }

    /// Per-coordinate minorant `(c0, c1, c2)`.
    fn minorant(&self) -> (f64, f64, f64) {
        match self {
            Atom::NegQuad { a } => (0.0, 0.0, *a),
            Atom::CosQuad => (-1.0, 0.0, 0.0),
            _ => (0.0, 0.0, 0.0),
        }
    }

    fn lower_bound(&self) -> f64 {
        match self {
            Atom::NegQuad { a } if *a > 0.0 => f64::NEG_INFINITY,
            Atom::CosQuad => cosquad_min(),
            _ => 0.0,
        }
    }

    fn lipschitz_on(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let m = lo.abs().max(hi.abs());
        match self {
            Atom::Abs | Atom::Huber { .. } => 1.0,
            Atom::Quadratic { a, center } => {
                let c = center.at(i);
                a * (lo - c).abs().max((hi - c).abs())
            }
            Atom::NegQuad { a } => a * m,
            Atom::Mcp { lambda, .. } | Atom::Scad { lambda, .. } => *lambda,
            Atom::CosQuad => 0.5 * m + 1.0,
        }
    }

    fn has_prox(&self) -> bool {
        !matches!(self, Atom::CosQuad)
    }

    fn has_conjugate(&self) -> bool {
        matches!(self, Atom::Abs | Atom::Quadratic { .. } | Atom::NegQuad { .. } | Atom::Huber { .. })
    }

    /// `argmin_t φ(t) + (t − y)²/(2α)`; caller guarantees `1/α > ρ`.
    fn prox(&self, i: usize, alpha: f64, y: f64) -> f64 {
        match self {
            Atom::Abs => soft_threshold(y, alpha),
            Atom::Quadratic { a, center } => (y / alpha + a * center.at(i)) / (a + 1.0 / alpha),
            Atom::NegQuad { a } => y / (1.0 - alpha * a),
            Atom::Mcp { lambda, gamma } => {
                let s = y.abs();
                if s <= alpha * lambda {
                    0.0
                } else if s <= gamma * lambda {
                    sign(y) * (s - alpha * lambda) / (1.0 - alpha / gamma)
                } else {
                    y
                }
            }
            Atom::Scad { lambda, gamma } => {
                let s = y.abs();
                if s <= lambda * (1.0 + alpha) {
                    soft_threshold(y, alpha * lambda)
                } else if s <= gamma * lambda {
                    ((gamma - 1.0) * y - sign(y) * alpha * gamma * lambda) / (gamma - 1.0 - alpha)
                } else {
                    y
                }
            }
            Atom::Huber { delta } => {
                if y.abs() <= delta + alpha {
                    y * delta / (delta + alpha)
                } else {
                    y - alpha * sign(y)
                }
            }
            Atom::CosQuad => unreachable!("cosquad has no closed-form prox"),
        }
    }

    /// `sup_t {u t − (ρ/2) t² − φ(t)}` with an attaining `t` when one exists.
    fn conjugate(&self, i: usize, u: f64, rho: f64) -> (f64, Option<f64>) {
        const INF: f64 = f64::INFINITY;
        match self {
            Atom::Abs => {
                if rho == 0.0 {
                    if u.abs() <= 1.0 {
                        (0.0, Some(0.0))
                    } else {
                        (INF, None)
                    }
                } else {
                    let k = (u.abs() - 1.0).max(0.0);
                    (k * k / (2.0 * rho), Some(sign(u) * k / rho))
                }
            }
            Atom::Quadratic { a, center } => {
                let c = center.at(i);
                let curv = a + rho;
                if curv == 0.0 {
                    if u == 0.0 {
                        (0.0, Some(0.0))
                    } else {
                        (INF, None)
                    }
                } else {
                    let w = u + a * c;
                    (w * w / (2.0 * curv) - 0.5 * a * c * c, Some(w / curv))
                }
            }
            Atom::NegQuad { a } => {
                let curv = rho - a;
                if curv > 0.0 {
                    (u * u / (2.0 * curv), Some(u / curv))
                } else if curv == 0.0 && u == 0.0 {
                    (0.0, Some(0.0))
                } else {
                    (INF, None)
                }
            }
            Atom::Huber { delta } => {
                let knee = 1.0 + rho * delta;
                if u.abs() <= knee {
                    (u * u * delta / (2.0 * knee), Some(u * delta / knee))
                } else if rho == 0.0 {
                    (INF, None)
                } else {
                    let k = u.abs() - 1.0;
                    (k * k / (2.0 * rho) + 0.5 * delta, Some(sign(u) * k / rho))
                }
            }
            _ => unreachable!("no analytic conjugate"),
        }
    }

    fn describe(&self) -> FunctionDesc {
        let mut params = BTreeMap::new();
        let name = match self {
            Atom::Abs => "abs",
            Atom::Quadratic { a, center } => {
                params.insert("a".into(), Vector::scalar(*a));
                params.insert(
                    "c".into(),
                    match center {
                        Center::Scalar(c) => Vector::scalar(*c),
                        Center::Point(p) => p.clone(),
                    },
                );
                "quadratic"
            }
            Atom::NegQuad { a } => {
                params.insert("a".into(), Vector::scalar(*a));
                "negquad"
            }
            Atom::Mcp { lambda, gamma } => {
                params.insert("lambda".into(), Vector::scalar(*lambda));
                params.insert("gamma".into(), Vector::scalar(*gamma));
                "mcp"
            }
            Atom::Scad { lambda, gamma } => {
                params.insert("lambda".into(), Vector::scalar(*lambda));
                params.insert("gamma".into(), Vector::scalar(*gamma));
                "scad"
            }
            Atom::CosQuad => "cosquad",
            Atom::Huber { delta } => {
                params.insert("delta".into(), Vector::scalar(*delta));
                "huber"
            }
        };
        FunctionDesc { name: name.into(), params, parts: Vec::new() }
    }
}

/// A weakly convex function together with its certified constants.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    /// Declared modulus: `f + (ρ/2)‖·‖²` is convex.
    pub rho: f64,
    /// Lipschitz constant of `∇f` when `f` is differentiable.
    pub lipschitz_grad: Option<f64>,
    pub has_exact_prox: bool,
    pub has_analytic_conjugate: bool,
    atoms: Vec<Atom>,
    dim: Option<usize>,
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.len() > 1 {
            let parts: Vec<String> = self.atoms.iter().map(|a| a.describe().to_string()).collect();
            return write!(f, "{}", parts.join(" + "));
        }
        write!(f, "{}", self.describe())
    }
}

fn take_param(params: &mut BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.remove(key) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(WcError::InvalidArgument(format!("parameter {key} must be finite, got {v}"))),
        None => default.ok_or_else(|| WcError::InvalidArgument(format!("missing parameter {key}"))),
    }
}

/// Builds a catalog entry by name.
///
/// Names and parameters: `abs`; `quadratic` (`a ≥ 0` default 1, `c` default
/// 0) for `(a/2)‖x − c‖²`; `negquad` (`a ≥ 0`, default 1) for `−(a/2)‖x‖²`;
/// `mcp` and `scad` (`lambda > 0`, `gamma`); `cosquad` for
/// `Σ xᵢ²/4 + cos xᵢ`; `huber` (`delta > 0`). Sums are built with
/// [`FunctionSpec::sum`].
pub fn make_function(name: &str, params: &BTreeMap<String, f64>) -> Result<FunctionSpec> {
    let mut p = params.clone();
    let atom = match name {
        "abs" => Atom::Abs,
        "quadratic" => {
            let a = take_param(&mut p, "a", Some(1.0))?;
            let c = take_param(&mut p, "c", Some(0.0))?;
            if a < 0.0 {
                return Err(WcError::InvalidArgument(format!("quadratic needs a ≥ 0, got {a}")));
            }
            Atom::Quadratic { a, center: Center::Scalar(c) }
        }
        "negquad" => {
            let a = take_param(&mut p, "a", Some(1.0))?;
            if a < 0.0 {
                return Err(WcError::InvalidArgument(format!("negquad needs a ≥ 0, got {a}")));
            }
            Atom::NegQuad { a }
        }
        "mcp" => {
            let lambda = take_param(&mut p, "lambda", None)?;
            let gamma = take_param(&mut p, "gamma", None)?;
            if lambda <= 0.0 || gamma <= 0.0 {
                return Err(WcError::InvalidArgument(format!(
                    "mcp needs lambda > 0 and gamma > 0, got lambda={lambda}, gamma={gamma}"
                )));
            }
            Atom::Mcp { lambda, gamma }
        }
        "scad" => {
            let lambda = take_param(&mut p, "lambda", None)?;
            let gamma = take_param(&mut p, "gamma", None)?;
            if lambda <= 0.0 || gamma <= 1.0 {
                return Err(WcError::InvalidArgument(format!(
                    "scad needs lambda > 0 and gamma > 1, got lambda={lambda}, gamma={gamma}"
                )));
            }
            Atom::Scad { lambda, gamma }
        }
        "cosquad" => Atom::CosQuad,
        "huber" => {
            let delta = take_param(&mut p, "delta", None)?;
            if delta <= 0.0 {
                return Err(WcError::InvalidArgument(format!("huber needs delta > 0, got {delta}")));
            }
            Atom::Huber { delta }
        }
        "sum" => {
            return Err(WcError::InvalidArgument("sums are built from parts, not parameters".into()));
        }
        other => return Err(WcError::InvalidArgument(format!("unknown function {other:?}"))),
    };
    if let Some(k) = p.keys().next() {
        return Err(WcError::InvalidArgument(format!("unknown parameter {k:?} for {name}")));
    }
    Ok(FunctionSpec::from_atom(atom, params.clone(), None))
}

/// Convenience wrapper around [`make_function`] taking `(key, value)` pairs.
pub fn function(name: &str, params: &[(&str, f64)]) -> Result<FunctionSpec> {
    let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_function(name, &map)
}

/// `f(x)`; `+∞` outside the domain of `f`.
pub fn evaluate(f: &FunctionSpec, x: &Vector) -> f64 {
    f.eval(x)
}

impl FunctionSpec {
    fn from_atom(atom: Atom, params: BTreeMap<String, f64>, dim: Option<usize>) -> Self {
        FunctionSpec {
            name: atom.describe().name,
            params,
            rho: atom.rho(),
            lipschitz_grad: atom.lipschitz_grad(),
            has_exact_prox: atom.has_prox(),
            has_analytic_conjugate: atom.has_conjugate(),
            atoms: vec![atom],
            dim,
        }
    }

    /// `(a/2)‖x − c‖²` with a vector center; fixes the dimension.
    pub fn quadratic_at(a: f64, center: Vector) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(WcError::InvalidArgument(format!("quadratic needs a ≥ 0, got {a}")));
        }
        let n = center.dim();
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), a);
        Ok(FunctionSpec::from_atom(Atom::Quadratic { a, center: Center::Point(center) }, params, Some(n)))
    }

    /// Pointwise sum. Gradient Lipschitz constants add; the moduli add, less
    /// the curvature of quadratic summands.
    pub fn sum(parts: &[FunctionSpec]) -> Result<Self> {
        if parts.is_empty() {
            return Err(WcError::InvalidArgument("a sum needs at least one part".into()));
        }
        let mut dim = None;
        for p in parts {
            if let Some(d) = p.dim {
                if let Some(prev) = dim {
                    ensure_dim(prev, d)?;
                }
                dim = Some(d);
            }
        }
        let atoms: Vec<Atom> = parts.iter().flat_map(|p| p.atoms.iter().cloned()).collect();
        if atoms.len() == 1 {
            let mut only = parts.iter().find(|p| !p.atoms.is_empty()).cloned().expect("one atom");
            only.dim = dim;
            return Ok(only);
        }
        let lipschitz_grad = parts.iter().map(|p| p.lipschitz_grad).sum::<Option<f64>>();
        Ok(FunctionSpec {
            name: "sum".into(),
            params: BTreeMap::new(),
            rho: (parts.iter().map(|p| p.rho).sum::<f64>() - atoms.iter().map(Atom::strong_convexity).sum::<f64>()).max(0.0),
            lipschitz_grad,
            has_exact_prox: false,
            has_analytic_conjugate: false,
            atoms,
            dim,
        })
    }

    /// `f + (r/2)‖·‖²`, declared with modulus `max(ρ − r, 0)`.
    pub fn convexified(&self, r: f64) -> Self {
        let mut g = FunctionSpec::sum(&[
            self.clone(),
            FunctionSpec::from_atom(Atom::Quadratic { a: r, center: Center::Scalar(0.0) }, BTreeMap::new(), None),
        ])
        .expect("dimensions agree");
        g.rho = (self.rho - r).max(0.0);
        g
    }

    /// Dimension fixed by a vector parameter, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim {
            Some(d) => ensure_dim(d, n),
            None => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &t)| self.coord_value(i, t)).sum()
    }

    pub(crate) fn coord_value(&self, i: usize, t: f64) -> f64 {
        self.atoms.iter().map(|a| a.value(i, t)).sum()
    }

    pub(crate) fn coord_deriv(&self, i: usize, t: f64) -> (f64, f64) {
        self.atoms.iter().fold((0.0, 0.0), |(m, p), a| {
            let (dm, dp) = a.deriv(i, t);
            (m + dm, p + dp)
        })
    }

    /// Points where some coordinate function fails to be differentiable.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.atoms.iter().flat_map(|a| a.kinks().iter().copied()).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Per-coordinate one-sided derivative intervals of `f` at `x`.
    pub fn derivative_box(&self, x: &[f64]) -> Vec<(f64, f64)> {
        x.iter().enumerate().map(|(i, &t)| self.coord_deriv(i, t)).collect()
    }

    /// Analytic gradient, available for differentiable entries.
    pub fn gradient(&self, x: &[f64]) -> Option<Vector> {
        self.lipschitz_grad?;
        Some(Vector::new(x.iter().enumerate().map(|(i, &t)| self.coord_deriv(i, t).1).collect()))
    }

    pub fn minorant(&self, n: usize) -> QuadraticMinorant {
        let (c0, c1, c2) = self.atoms.iter().fold((0.0, 0.0, 0.0), |(a, b, c), atom| {
            let (p, q, r) = atom.minorant();
            (a + p, b + q, c + r)
        });
        let c1 = c1 * (n as f64).sqrt();
        QuadraticMinorant { c0: c0 * n as f64, c1, c2 }
    }

    /// `inf f` over ℝⁿ.
    pub fn lower_bound(&self, n: usize) -> f64 {
        if self.atoms.len() == 1 {
            return self.atoms[0].lower_bound() * n as f64;
        }
        let m = self.minorant(n);
        if m.c2 == 0.0 && m.c1 == 0.0 {
            m.c0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Euclidean Lipschitz bound of `f` on the box of `domain`.
    pub fn lipschitz_on(&self, domain: &GridDomain) -> f64 {
        (0..domain.dim())
            .map(|i| {
                let l: f64 = self.atoms.iter().map(|a| a.lipschitz_on(i, domain.lo()[i], domain.hi()[i])).sum();
                l * l
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-form minimizer of `f(x) + ‖x − y‖²/(2α)`.
    pub fn exact_prox(&self, alpha: f64, y: &Vector) -> Result<Vector> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(WcError::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        self.check_dim(y.dim())?;
        if 1.0 / alpha <= self.rho {
            return Err(WcError::Precondition(format!(
                "prox needs 1/alpha > rho (1/alpha = {}, rho = {})",
                1.0 / alpha,
                self.rho
            )));
        }
        if !self.has_exact_prox {
            return Err(WcError::Unsupported(format!("{self} has no closed-form prox")));
        }
        let atom = &self.atoms[0];
        Ok(Vector::new(y.iter().enumerate().map(|(i, &t)| atom.prox(i, alpha, t)).collect()))
    }

    /// Closed-form `ρ`-conjugate and its maximizer, when available.
    pub(crate) fn analytic_conjugate(&self, rho: f64, u: &[f64]) -> Option<(f64, Option<Vector>)> {
        if !self.has_analytic_conjugate {
            return None;
        }
        let atom = &self.atoms[0];
        let mut total = 0.0;
        let mut arg = Vec::with_capacity(u.len());
        for (i, &ui) in u.iter().enumerate() {
            let (v, a) = atom.conjugate(i, ui, rho);
            total += v;
            arg.push(a);
        }
        let argsup = arg.into_iter().collect::<Option<Vec<f64>>>().map(Vector::new);
        Some((total, if total.is_finite() { argsup } else { None }))
    }

    /// Closed-form conjugate of coordinate `i` alone.
    pub(crate) fn coord_conjugate(&self, i: usize, p: f64, rho: f64) -> Option<f64> {
        if !self.has_analytic_conjugate {
            return None;
        }
        Some(self.atoms[0].conjugate(i, p, rho).0)
    }

    /// Serializable description from which the `FunctionSpec` can be rebuilt.
    pub fn describe(&self) -> FunctionDesc {
        if self.atoms.len() == 1 {
            return self.atoms[0].describe();
        }
        FunctionDesc {
            name: "sum".into(),
            params: BTreeMap::new(),
            parts: self.atoms.iter().map(Atom::describe).collect(),
        }
    }
}

/// Name, parameters and (for sums) parts, as read from problem files.
///
/// Parameters are numbers, except the quadratic center `c`, which may be an
/// array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDesc {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Vector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<FunctionDesc>,
}

impl FunctionDesc {
    pub fn new(name: &str, params: &[(&str, f64)]) -> Self {
        FunctionDesc {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), Vector::scalar(*v))).collect(),
            parts: Vec::new(),
        }
    }

    pub fn sum(parts: Vec<FunctionDesc>) -> Self {
        FunctionDesc { name: "sum".into(), params: BTreeMap::new(), parts }
    }

    pub fn build(&self) -> Result<FunctionSpec> {
        if self.name == "sum" {
            if !self.params.is_empty() {
                return Err(WcError::InvalidArgument("sum takes parts, not params".into()));
            }
            let parts = self.parts.iter().map(FunctionDesc::build).collect::<Result<Vec<_>>>()?;
            return FunctionSpec::sum(&parts);
        }
        if !self.parts.is_empty() {
            return Err(WcError::InvalidArgument(format!("{} does not take parts", self.name)));
        }
        let mut scalars = BTreeMap::new();
        let mut center = None;
        for (k, v) in &self.params {
            if v.dim() == 1 {
                scalars.insert(k.clone(), v[0]);
            } else if self.name == "quadratic" && k == "c" {
                center = Some(v.clone());
            } else {
                return Err(WcError::InvalidArgument(format!("parameter {k} of {} must be a number", self.name)));
            }
        }
        match center {
            Some(c) => {
                let a = scalars.remove("a").unwrap_or(1.0);
                if let Some(k) = scalars.keys().next() {
                    return Err(WcError::InvalidArgument(format!("unknown parameter {k:?} for quadratic")));
                }
                FunctionSpec::quadratic_at(a, c)
            }
            None => make_function(&self.name, &scalars),
        }
    }
}

impl fmt::Display for FunctionDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.name == "sum" {
            let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
            return write!(f, "sum({})", parts.join(", "));
        }
        write!(f, "{}", self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", ps.join(","))?;
        }
        Ok(())
    }
}

/// A representative set of catalog entries used by tests, benches and suites.
pub fn standard_catalog() -> Vec<FunctionDesc> {
    vec![
        FunctionDesc::new("abs", &[]),
        FunctionDesc::new("quadratic", &[("a", 1.0), ("c", 0.0)]),
        FunctionDesc::new("quadratic", &[("a", 2.0), ("c", 1.5)]),
        FunctionDesc::new("negquad", &[("a", 1.0)]),
        FunctionDesc::new("mcp", &[("lambda", 1.0), ("gamma", 2.0)]),
        FunctionDesc::new("scad", &[("lambda", 1.0), ("gamma", 3.7)]),
        FunctionDesc::new("cosquad", &[]),
        FunctionDesc::new("huber", &[("delta", 1.0)]),
        FunctionDesc::sum(vec![FunctionDesc::new("abs", &[]), FunctionDesc::new("negquad", &[("a", 0.5)])]),
        FunctionDesc::sum(vec![
            FunctionDesc::new("mcp", &[("lambda", 0.5), ("gamma", 3.0)]),
            FunctionDesc::new("quadratic", &[("a", 0.5), ("c", -1.0)]),
        ]),
    ]
}
