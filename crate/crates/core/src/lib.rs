//! Optimal privacy leakage for finite-alphabet source sets under worst-case
//! Hamming distortion.
//!
//! A *source set* is the convex hull of a list of probability vectors over an
//! alphabet of size `M`. A *mechanism* is an `M x M` row-stochastic matrix
//! `Q(j | i)`; it is `(P, D)`-valid when its expected Hamming distortion stays
//! below `D` for every distribution in the source set. This crate computes
//!
//! * the minimal ε for which some valid mechanism is ε-differentially private
//!   ([`dp`]), exactly for sources whose hull contains the uniform point or
//!   whose distributions share a common ordering, and as a lower/upper bound
//!   pair otherwise;
//! * the minimal worst-case mutual information over valid mechanisms ([`it`]);
//! * the mechanisms that achieve these values ([`mechanism`]);
//! * brute-force and bisection oracles used to validate the solvers ([`oracle`]).
//!
//! All leakage values are in nats. The crate is `no_std` and only needs
//! `alloc`; file formats and the command-line front end live in the `dpleak`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classify;
pub mod dp;
mod error;
pub mod it;
pub mod lp;
mod math;
pub mod mechanism;
pub mod oracle;
pub mod types;

pub use classify::{classify, find_folding_permutations, Classification, FoldedOracles};
pub use dp::{
    solve_class1, solve_class2, solve_class3_bounds, solve_dp, solve_lfp_k, BoundKind, Class3Solver, DpOutcome, DpSolution,
    Thresholds,
};
pub use error::{Error, Result};
pub use it::{it_class1, it_minmax, mutual_information, ItSolution};
pub use mechanism::{
    construct_optimal_mechanism, eps_dp, is_staircase, is_valid, symmetric_mechanism, ValidityReport,
};
pub use oracle::{bisection_cross_check, blahut_arimoto_rd, brute_force_dp, sublinearity_counterexample, BruteForce, SublinearityReport};
pub use types::{expected_distortion, make_source_set, Distribution, LeakageValue, Mechanism, Permutation, SourceSet};

/// Tolerance on probability sums and on row sums of mechanisms.
pub const SUM_TOL: f64 = 1e-9;

/// Tolerance on the range of individual probabilities.
pub const ENTRY_TOL: f64 = 1e-12;

/// Slack allowed when checking a distortion constraint.
pub const VALIDITY_TOL: f64 = 1e-9;
