//! Proximal ε-subdifferentials and inexact proximal operators of weakly
//! convex functions on ℝⁿ, with brute-force lattice oracles that certify
//! every claim as HOLDS, FAILS or INCONCLUSIVE.
//!
//! A function `f` is ρ-weakly convex when `f + (ρ/2)‖·‖²` is convex. The
//! central object is the set of `v` with
//!
//! ```text
//! f(z) − f(x₀) ≥ ⟨v, z − x₀⟩ − C‖z − x₀‖² − ε   for all z,
//! ```
//!
//! written `∂^ε_{(2,C)} f(x₀)`. On top of it sit the ρ-conjugate, the sum
//! rules for these sets, and Type-1 / Type-2 certificates for ε-proximal
//! points.
//!
//! ```
//! use wcprox::{function, membership_grid, GridDomain, SubgradientQuery, Tolerance, Vector};
//!
//! let f = function("abs", &[]).unwrap();
//! let q = SubgradientQuery::new(Vector::scalar(1.0), Vector::scalar(0.9), 0.1, 0.0);
//! let v = membership_grid(&f, &q, &GridDomain::standard(1), &Tolerance::default()).unwrap();
//! assert!(v.is_holds());
//! ```

pub mod catalog;
pub mod conjugate;
pub mod convexity;
pub mod driver;
pub mod error;
pub mod grid;
pub mod iprox;
mod scalar;
pub mod subdiff;
pub mod sumrule;
pub mod vector;

pub use catalog::{function, standard_catalog, FunctionDesc, FunctionSpec, QuadraticMinorant};
pub use conjugate::{conjugate_identity_check, conjugate_sum_decompose, rho_conjugate, rho_conjugate_grid, ConjugateValue, Decomposition, Exactness};
pub use convexity::{check_paraconvexity, check_weak_convexity};
pub use error::{Result, WcError};
pub use grid::{grid_points, GridDomain, Status, Tolerance, Verdict};
pub use iprox::{
    certify_type1, certify_type1_single_eps, certify_type2, eps_prox_set, solve_eps_prox, type1_implies_type2, EpsProxSet, ProxQuery, ProxSolution,
    Type1Certificate, Type2Certificate,
};
pub use subdiff::{check_globalisation, is_eps_critical, membership_grid, membership_via_conjugate, sample_subgradients, SubgradientQuery};
pub use sumrule::{decompose_subgradient, forward_sum_inclusion, smooth_shift_inclusion, SumDecomposition};
pub use vector::Vector;
