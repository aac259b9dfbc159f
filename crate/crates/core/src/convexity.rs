//! Structural checks: weak convexity and γ-paraconvexity on a lattice.

use rayon::prelude::*;

use crate::catalog::FunctionSpec;
use crate::error::{ensure_nonneg, Result, WcError};
use crate::grid::{tabulate, GridDomain, Tolerance, Verdict, MAX_GRID_DIM};
use crate::vector::{dist, norm_sq, Vector};

/// All pairs are enumerated while their count stays below this.
const FULL_PAIR_LIMIT: usize = 2_500_000;
/// Size of the coarse sub-lattice used above the limit.
const COARSE_POINTS: usize = 2_000;
/// Per-axis index offset for the full-resolution neighbour pairs.
const LOCAL_REACH: i64 = 2;

/// Default λ samples for paraconvexity checks.
pub const DEFAULT_LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Copy, Debug)]
struct PairScan {
    min: f64,
    best: Option<(usize, usize, usize)>,
    first: Option<(usize, usize, usize)>,
}

impl PairScan {
    fn empty() -> Self {
        PairScan { min: f64::INFINITY, best: None, first: None }
    }

    fn push(&mut self, key: (usize, usize, usize), slack: f64, threshold: f64) {
        if slack.is_nan() {
            return;
        }
        if slack < self.min || self.best.is_none() || (slack == self.min && self.best.is_some_and(|b| key < b)) {
            self.min = slack;
            self.best = Some(key);
        }
        if slack < threshold && self.first.is_none_or(|f| key < f) {
            self.first = Some(key);
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        let pick_b = match (a.best, b.best) {
            (None, _) => true,
            (_, None) => false,
            (Some(ka), Some(kb)) => b.min < a.min || (b.min == a.min && kb < ka),
        };
        let (min, best) = if pick_b { (b.min, b.best) } else { (a.min, a.best) };
        let first = match (a.first, b.first) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        PairScan { min, best, first }
    }
}

fn coarse_axis(len: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..len).step_by(stride).collect();
    if *v.last().unwrap() != len - 1 {
        v.push(len - 1);
    }
    v
}

/// Minimum of `slack(x, i, y, j)` over a deterministic set of lattice pairs
/// `i < j`: every pair on small grids, otherwise every pair of a coarse
/// sub-lattice plus every pair of near neighbours at full resolution.
fn pair_scan<F>(domain: &GridDomain, threshold: f64, slack: F) -> Result<PairScan>
where
    F: Fn(&[f64], usize, &[f64], usize) -> (f64, usize) + Sync,
{
    domain.require_enumerable()?;
    let n = domain.dim();
    let total = domain.len();
    let visit = |acc: &mut PairScan, bx: &mut [f64; MAX_GRID_DIM], by: &mut [f64; MAX_GRID_DIM], i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        domain.fill_point(a, &mut bx[..n]);
        domain.fill_point(b, &mut by[..n]);
        let (s, tag) = slack(&bx[..n], a, &by[..n], b);
        acc.push((a, b, tag), s, threshold);
    };
    let new_acc = || (PairScan::empty(), [0.0f64; MAX_GRID_DIM], [0.0f64; MAX_GRID_DIM]);

    if total.saturating_mul(total.saturating_sub(1)) / 2 <= FULL_PAIR_LIMIT {
        return Ok((0..total)
            .into_par_iter()
            .fold(new_acc, |(mut acc, mut bx, mut by), i| {
                for j in i + 1..total {
                    visit(&mut acc, &mut bx, &mut by, i, j);
                }
                (acc, bx, by)
            })
            .map(|t| t.0)
            .reduce(PairScan::empty, PairScan::merge));
    }

    let mut stride = 1;
    loop {
        let count: usize = (0..n).map(|a| coarse_axis(domain.axis_len(a), stride).len()).product();
        if count <= COARSE_POINTS {
            break;
        }
        stride += 1;
    }
    let axes: Vec<Vec<usize>> = (0..n).map(|a| coarse_axis(domain.axis_len(a), stride)).collect();
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
    for axis in &axes {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                axis.iter().map(move |&k| {
                    let mut t = t.clone();
                    t.push(k);
                    t
                })
            })
            .collect();
    }
    let coarse: Vec<usize> = tuples.iter().map(|t| domain.flat_index(t)).collect();

    let coarse_scan = (0..coarse.len())
        .into_par_iter()
        .fold(new_acc, |(mut acc, mut bx, mut by), p| {
            for q in p + 1..coarse.len() {
                visit(&mut acc, &mut bx, &mut by, coarse[p], coarse[q]);
            }
            (acc, bx, by)
        })
        .map(|t| t.0)
        .reduce(PairScan::empty, PairScan::merge);

    let width = (2 * LOCAL_REACH + 1) as usize;
    let offsets: Vec<Vec<i64>> = (0..width.pow(n as u32))
        .map(|mut k| {
            let mut off = vec![0i64; n];
            for slot in off.iter_mut().rev() {
                *slot = (k % width) as i64 - LOCAL_REACH;
                k /= width;
            }
            off
        })
        .filter(|off| off.iter().find(|&&o| o != 0).is_some_and(|&o| o > 0))
        .collect();

    let local_scan = (0..total)
        .into_par_iter()
        .fold(
            || (PairScan::empty(), [0.0f64; MAX_GRID_DIM], [0.0f64; MAX_GRID_DIM], [0usize; MAX_GRID_DIM], [0usize; MAX_GRID_DIM]),
            |(mut acc, mut bx, mut by, mut mi, mut mj), i| {
                domain.multi_index(i, &mut mi[..n]);
                'offsets: for off in &offsets {
                    for a in 0..n {
                        let k = mi[a] as i64 + off[a];
                        if k < 0 || k >= domain.axis_len(a) as i64 {
                            continue 'offsets;
                        }
                        mj[a] = k as usize;
                    }
                    let j = domain.flat_index(&mj[..n]);
                    visit(&mut acc, &mut bx, &mut by, i, j);
                }
                (acc, bx, by, mi, mj)
            },
        )
        .map(|t| t.0)
        .reduce(PairScan::empty, PairScan::merge);

    Ok(PairScan::merge(coarse_scan, local_scan))
}

fn finish(scan: PairScan, domain: &GridDomain, tol: &Tolerance, point: impl Fn(&Vector, &Vector, usize) -> Vector) -> Verdict {
    let Some((i, j, tag)) = scan.best else {
        return Verdict::inconclusive(f64::INFINITY, None, "f is +∞ on every grid pair");
    };
    let w = point(&domain.point(i), &domain.point(j), tag);
    let first = scan.first.map(|(a, b, t)| point(&domain.point(a), &domain.point(b), t));
    Verdict::from_margin(scan.min, Some(w), tol).with_first_violation(first)
}

/// Midpoint convexity of `f + (ρ/2)‖·‖²` over lattice pairs.
///
/// The witness is the midpoint of the most violating pair.
pub fn check_weak_convexity(f: &FunctionSpec, rho: f64, domain: &GridDomain, tol: &Tolerance) -> Result<Verdict> {
    ensure_nonneg("rho", rho)?;
    f.check_dim(domain.dim())?;
    let g = |x: &[f64]| f.eval(x) + 0.5 * rho * norm_sq(x);
    let values = tabulate(domain, g)?;
    if values.iter().all(|v| !v.is_finite()) {
        return Ok(Verdict::inconclusive(f64::INFINITY, None, "f is +∞ on the whole grid"));
    }
    let n = domain.dim();
    let scan = pair_scan(domain, tol.fail_threshold(), |x, i, y, j| {
        let (gx, gy) = (values[i], values[j]);
        if !(gx.is_finite() && gy.is_finite()) {
            return (f64::NAN, 0);
        }
        let mut m = [0.0f64; MAX_GRID_DIM];
        for a in 0..n {
            m[a] = 0.5 * (x[a] + y[a]);
        }
        (0.5 * (gx + gy) - g(&m[..n]), 0)
    })?;
    Ok(finish(scan, domain, tol, |x, y, _| (&(x + y)) * 0.5))
}

/// `f(λx + (1−λ)y) ≤ λf(x) + (1−λ)f(y) + Cλ(1−λ)‖x−y‖^γ` over lattice pairs
/// and the given λ samples.
///
/// The witness is the point `λx + (1−λ)y` of the most violating triple.
pub fn check_paraconvexity(
    f: &FunctionSpec,
    gamma: f64,
    c: f64,
    domain: &GridDomain,
    lambdas: &[f64],
    tol: &Tolerance,
) -> Result<Verdict> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(WcError::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(WcError::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if lambdas.is_empty() {
        return Err(WcError::InvalidArgument("at least one lambda sample is required".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(WcError::InvalidArgument(format!("lambda samples must lie in [0, 1], got {l}")));
    }
    f.check_dim(domain.dim())?;
    let values = tabulate(domain, |x| f.eval(x))?;
    if values.iter().all(|v| !v.is_finite()) {
        return Ok(Verdict::inconclusive(f64::INFINITY, None, "f is +∞ on the whole grid"));
    }
    let n = domain.dim();
    let scan = pair_scan(domain, tol.fail_threshold(), |x, i, y, j| {
        let (fx, fy) = (values[i], values[j]);
        if !(fx.is_finite() && fy.is_finite()) {
            return (f64::NAN, 0);
        }
        let d = dist(x, y).powf(gamma);
        let mut best = (f64::INFINITY, 0);
        let mut m = [0.0f64; MAX_GRID_DIM];
        for (k, &lam) in lambdas.iter().enumerate() {
            for a in 0..n {
                m[a] = lam * x[a] + (1.0 - lam) * y[a];
            }
            let s = lam * fx + (1.0 - lam) * fy + c * lam * (1.0 - lam) * d - f.eval(&m[..n]);
            if s < best.0 {
                best = (s, k);
            }
        }
        best
    })?;
    Ok(finish(scan, domain, tol, |x, y, k| {
        let lam = lambdas[k];
        &(x * lam) + &(y * (1.0 - lam))
    }))
}
