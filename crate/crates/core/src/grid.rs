//! Uniform lattices, tolerances and three-valued verdicts.
//!
//! Every universally quantified inequality in this crate is checked by
//! enumerating a [`GridDomain`]. Enumeration is partitioned across rayon
//! workers; reductions pick the minimum slack and break ties by the smallest
//! lattice index, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Result, WcError};
use crate::vector::Vector;

/// Maximum lattice points along any single axis.
pub const MAX_AXIS_POINTS: usize = 1_000_000;
/// Maximum dimension for which grid oracles enumerate points.
pub const MAX_GRID_DIM: usize = 3;
/// Maximum total lattice size for enumeration.
pub const MAX_TOTAL_POINTS: usize = 20_000_000;

/// Axis-aligned box `[lo, hi]` sampled with a uniform step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridDomain {
    lo: Vector,
    hi: Vector,
    step: f64,
    counts: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    lo: Vector,
    hi: Vector,
    step: f64,
}

impl TryFrom<GridRepr> for GridDomain {
    type Error = WcError;
    fn try_from(r: GridRepr) -> Result<Self> {
        GridDomain::new(r.lo, r.hi, r.step)
    }
}

impl From<GridDomain> for GridRepr {
    fn from(g: GridDomain) -> Self {
        GridRepr { lo: g.lo, hi: g.hi, step: g.step }
    }
}

fn axis_count(lo: f64, hi: f64, step: f64) -> f64 {
    ((hi - lo) / step + 1e-9).floor() + 1.0
}

impl GridDomain {
    pub fn new(lo: Vector, hi: Vector, step: f64) -> Result<Self> {
        ensure_dim(lo.dim(), hi.dim())?;
        if lo.dim() == 0 {
            return Err(WcError::InvalidArgument("grid dimension must be ≥ 1".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(WcError::InvalidArgument(format!("grid step must be positive, got {step}")));
        }
        let mut counts = Vec::with_capacity(lo.dim());
        for i in 0..lo.dim() {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(WcError::InvalidArgument("grid bounds must be finite".into()));
            }
            if lo[i] >= hi[i] {
                return Err(WcError::InvalidArgument(format!(
                    "grid needs lo < hi on every axis (axis {i}: {} ≥ {})",
                    lo[i], hi[i]
                )));
            }
            let c = axis_count(lo[i], hi[i], step);
            if c > MAX_AXIS_POINTS as f64 {
                return Err(WcError::Resource(format!(
                    "axis {i} would hold {c} points, more than the {MAX_AXIS_POINTS} limit"
                )));
            }
            counts.push(c as usize);
        }
        Ok(GridDomain { lo, hi, step, counts })
    }

    /// The cube `[lo, hi]ⁿ`.
    pub fn cube(n: usize, lo: f64, hi: f64, step: f64) -> Result<Self> {
        GridDomain::new(Vector::filled(n, lo), Vector::filled(n, hi), step)
    }

    /// `[-5, 5]ⁿ` with step 0.01 in 1D and 0.05 otherwise.
    pub fn standard(n: usize) -> Self {
        let step = if n == 1 { 0.01 } else { 0.05 };
        GridDomain::cube(n, -5.0, 5.0, step).expect("standard grid is well formed")
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Vector {
        &self.lo
    }

    pub fn hi(&self) -> &Vector {
        &self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        self.counts[axis]
    }

    /// Clamped to `hi`, so rounding in `lo + k·step` never leaves the box.
    pub fn axis_value(&self, axis: usize, k: usize) -> f64 {
        (self.lo[axis] + k as f64 * self.step).min(self.hi[axis])
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|k| self.axis_value(axis, k)).collect()
    }

    /// Total lattice size, saturating at `usize::MAX`.
    pub fn len(&self) -> usize {
        self.counts.iter().fold(1usize, |acc, &c| acc.saturating_mul(c))
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Check that the lattice may be enumerated point by point.
    pub fn require_enumerable(&self) -> Result<()> {
        if self.dim() > MAX_GRID_DIM {
            return Err(WcError::DimensionCap { dim: self.dim(), cap: MAX_GRID_DIM });
        }
        if self.len() > MAX_TOTAL_POINTS {
            return Err(WcError::Resource(format!(
                "grid holds {} points, more than the {MAX_TOTAL_POINTS} enumeration limit",
                self.len()
            )));
        }
        Ok(())
    }

    /// Writes the coordinates of lattice point `idx` (row-major, axis 0 slowest).
    pub fn fill_point(&self, mut idx: usize, out: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let c = self.counts[axis];
            out[axis] = self.axis_value(axis, idx % c);
            idx /= c;
        }
    }

    pub fn point(&self, idx: usize) -> Vector {
        let mut buf = vec![0.0; self.dim()];
        self.fill_point(idx, &mut buf);
        Vector::new(buf)
    }

    pub(crate) fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for axis in (0..self.dim()).rev() {
            let c = self.counts[axis];
            out[axis] = idx % c;
            idx /= c;
        }
    }

    pub(crate) fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.counts).fold(0, |acc, (&k, &c)| acc * c + k)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &t)| t >= self.lo[i] && t <= self.hi[i])
    }

    /// Distance from `x` to the complement of the box (0 when `x` is outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &t)| (t - self.lo[i]).min(self.hi[i] - t))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Euclidean distance from the origin to the complement of the box.
    pub fn origin_depth(&self) -> f64 {
        self.depth(&vec![0.0; self.dim()])
    }

    /// Largest Euclidean norm of a point in the box.
    pub fn radius(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.lo[i].abs().max(self.hi[i].abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_dim(&self, x: &Vector) -> Result<()> {
        ensure_dim(self.dim(), x.dim())
    }
}

/// All lattice points in row-major order.
pub fn grid_points(domain: &GridDomain) -> Result<Vec<Vector>> {
    domain.require_enumerable()?;
    Ok((0..domain.len()).map(|i| domain.point(i)).collect())
}

/// Tolerances applied to every grid check.
///
/// A check with minimal slack `m` HOLDS when `m ≥ -abs_tol`, FAILS when
/// `m < -(abs_tol + grid_slop)`, and is INCONCLUSIVE in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub grid_slop: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs_tol: 1e-9, grid_slop: 0.0 }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, grid_slop: f64) -> Result<Self> {
        if !(abs_tol.is_finite() && abs_tol > 0.0) {
            return Err(WcError::InvalidArgument(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if !(grid_slop.is_finite() && grid_slop >= 0.0) {
            return Err(WcError::InvalidArgument(format!("grid_slop must be nonnegative, got {grid_slop}")));
        }
        Ok(Tolerance { abs_tol, grid_slop })
    }

    pub fn with_slop(self, grid_slop: f64) -> Self {
        Tolerance { grid_slop: grid_slop.max(0.0), ..self }
    }

    /// Slop for a function with local Lipschitz bound `lipschitz` on the grid.
    pub fn lipschitz_slop(lipschitz: f64, domain: &GridDomain) -> f64 {
        lipschitz * domain.step()
    }

    pub(crate) fn fail_threshold(&self) -> f64 {
        -(self.abs_tol + self.grid_slop)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "HOLDS",
            Status::Fails => "FAILS",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// FAILS dominates INCONCLUSIVE, which dominates HOLDS.
    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Holds,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a grid-checked inequality.
///
/// `margin` is the minimal slack observed; `witness` is the point attaining
/// it and `first_violation` the first lattice point (row-major) whose slack
/// fell below the failure threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub margin: f64,
    pub witness: Option<Vector>,
    pub first_violation: Option<Vector>,
    pub reason: Option<String>,
}

impl Verdict {
    pub fn holds(margin: f64, witness: Option<Vector>) -> Self {
        Verdict { status: Status::Holds, margin, witness, first_violation: None, reason: None }
    }

    pub fn fails(margin: f64, witness: Option<Vector>, reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::Fails,
            margin,
            witness,
            first_violation: None,
            reason: Some(reason.into()),
        }
    }

    pub fn inconclusive(margin: f64, witness: Option<Vector>, reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::Inconclusive,
            margin,
            witness,
            first_violation: None,
            reason: Some(reason.into()),
        }
    }

    /// Classify a minimal slack against `tol`.
    pub fn from_margin(margin: f64, witness: Option<Vector>, tol: &Tolerance) -> Self {
        if margin >= -tol.abs_tol {
            Verdict::holds(margin, witness)
        } else if margin < tol.fail_threshold() {
            Verdict::fails(margin, witness, "negative slack")
        } else {
            Verdict::inconclusive(margin, witness, "slack within grid slop")
        }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn is_inconclusive(&self) -> bool {
        self.status == Status::Inconclusive
    }

    pub(crate) fn with_first_violation(mut self, p: Option<Vector>) -> Self {
        if self.status == Status::Fails {
            self.first_violation = p;
        }
        self
    }
}

/// Result of a minimum-slack scan over a lattice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScanOutcome {
    pub min: f64,
    pub argmin: Option<usize>,
    pub first_below: Option<usize>,
    pub visited: usize,
}

impl ScanOutcome {
    fn empty() -> Self {
        ScanOutcome { min: f64::INFINITY, argmin: None, first_below: None, visited: 0 }
    }

    fn push(&mut self, idx: usize, slack: f64, threshold: f64) {
        if slack.is_nan() {
            return;
        }
        self.visited += 1;
        if slack < self.min || (slack == self.min && self.argmin.is_some_and(|a| idx < a)) {
            self.min = slack;
            self.argmin = Some(idx);
        } else if self.argmin.is_none() {
            self.argmin = Some(idx);
        }
        if slack < threshold && self.first_below.is_none_or(|f| idx < f) {
            self.first_below = Some(idx);
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        let (min, argmin) = match (a.argmin, b.argmin) {
            (None, _) => (b.min, b.argmin),
            (_, None) => (a.min, a.argmin),
            (Some(ia), Some(ib)) => {
                if b.min < a.min || (b.min == a.min && ib < ia) {
                    (b.min, b.argmin)
                } else {
                    (a.min, a.argmin)
                }
            }
        };
        let first_below = match (a.first_below, b.first_below) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        ScanOutcome { min, argmin, first_below, visited: a.visited + b.visited }
    }
}

/// Minimum of `slack` over all lattice points. `None` from the closure skips
/// a point.
pub(crate) fn scan_min<F>(domain: &GridDomain, threshold: f64, slack: F) -> Result<ScanOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    domain.require_enumerable()?;
    let n = domain.dim();
    let out = (0..domain.len())
        .into_par_iter()
        .fold(
            || (ScanOutcome::empty(), [0.0f64; MAX_GRID_DIM]),
            |(mut acc, mut buf), idx| {
                domain.fill_point(idx, &mut buf[..n]);
                if let Some(s) = slack(&buf[..n]) {
                    acc.push(idx, s, threshold);
                }
                (acc, buf)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(ScanOutcome::empty, ScanOutcome::merge);
    Ok(out)
}

/// Evaluates `f` at every lattice point, in row-major order.
pub(crate) fn tabulate<F>(domain: &GridDomain, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    domain.require_enumerable()?;
    let n = domain.dim();
    Ok((0..domain.len())
        .into_par_iter()
        .map_init(
            || [0.0f64; MAX_GRID_DIM],
            |buf, idx| {
                domain.fill_point(idx, &mut buf[..n]);
                f(&buf[..n])
            },
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(d: &GridDomain) -> Vec<Vec<f64>> {
        grid_points(d).unwrap().into_iter().map(|v| v.into_inner()).collect()
    }

    #[test]
    fn unit_interval_half_step() {
        let d = GridDomain::cube(1, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(pts(&d), vec![vec![0.0], vec![0.5], vec![1.0]]);
    }

    #[test]
    fn square_corners() {
        let d = GridDomain::cube(2, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(pts(&d), vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn no_overshoot() {
        let d = GridDomain::cube(1, 0.0, 1.0, 0.3).unwrap();
        let p = pts(&d);
        assert_eq!(p.len(), 4);
        for (got, want) in p.iter().zip([0.0, 0.3, 0.6, 0.9]) {
            assert_abs_diff_eq!(got[0], want, epsilon = 1e-12);
        }
        assert!(p.iter().all(|x| x[0] <= 1.0));
    }

    #[test]
    fn standard_grid_sizes() {
        assert_eq!(GridDomain::standard(1).len(), 1001);
        assert_eq!(GridDomain::standard(2).len(), 201 * 201);
        let d = GridDomain::standard(1);
        assert_eq!(d.axis_value(0, 500), 0.0);
        assert_eq!(d.axis_value(0, 1000), 5.0);
    }

    #[test]
    fn guards() {
        assert!(matches!(GridDomain::cube(1, 0.0, 1.0, 1e-7), Err(WcError::Resource(_))));
        assert!(GridDomain::cube(1, 1.0, 0.0, 0.1).is_err());
        assert!(GridDomain::cube(1, 0.0, 1.0, 0.0).is_err());
        let d4 = GridDomain::cube(4, 0.0, 1.0, 0.5).unwrap();
        assert!(matches!(grid_points(&d4), Err(WcError::DimensionCap { .. })));
    }

    #[test]
    fn index_roundtrip() {
        let d = GridDomain::cube(3, -1.0, 1.0, 0.5).unwrap();
        let mut m = [0usize; 3];
        for idx in 0..d.len() {
            d.multi_index(idx, &mut m);
            assert_eq!(d.flat_index(&m), idx);
        }
    }

    #[test]
    fn verdict_classification() {
        let tol = Tolerance::new(1e-9, 1e-3).unwrap();
        assert_eq!(Verdict::from_margin(0.0, None, &tol).status, Status::Holds);
        assert_eq!(Verdict::from_margin(-1e-4, None, &tol).status, Status::Inconclusive);
        assert_eq!(Verdict::from_margin(-1e-2, None, &tol).status, Status::Fails);
    }

    #[test]
    fn scan_is_deterministic_on_ties() {
        let d = GridDomain::cube(1, -1.0, 1.0, 0.5).unwrap();
        let out = scan_min(&d, -1e-9, |x| Some((x[0].abs() - 0.5).abs())).unwrap();
        assert_eq!(out.min, 0.0);
        assert_eq!(out.argmin, Some(1));
        assert_eq!(out.visited, 5);
    }

    #[test]
    fn json_roundtrip() {
        let d = GridDomain::cube(2, -1.0, 1.0, 0.25).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: GridDomain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<GridDomain>(r#"{"lo":1,"hi":0,"step":0.1}"#).is_err());
    }
}
