//! Newton-type solvers for convex objectives whose Hessians change
//! multiplicatively slowly, with the estimators and oracles needed to verify
//! their global linear rates empirically.
//!
//! The crate is organized around:
//! - [`core`]: vectors, symmetric matrices, objective interfaces, quadratic
//!   models and solve traces;
//! - [`linalg`]: pseudo-inverse and conjugate-gradient solves plus certified
//!   constrained quadratic subproblem minimization;
//! - [`objectives`]: the test-problem zoo, counterexamples and LIBSVM
//!   ingestion;
//! - [`stability`]: empirical estimators and analytic bounds for the
//!   stability constants;
//! - [`solvers`]: the Newton family (exact, trust-region, approximate and
//!   proximal, backtracking, affine-invariant) plus baselines;
//! - [`oracle`]: independent brute-force verifiers used by the test suite;
//! - [`harness`]: experiment configuration, presets and report writers
//!   behind the `stable-newton` CLI.

pub mod core;
pub mod linalg;
pub mod objectives;
pub mod oracle;
pub mod stability;

pub use crate::core::{
    level_set_contains, weighted_norm_sq, CompositeObjective, ConditionClass, CoreError,
    IterRecord, LevelSetDomain, NormSpec, Objective, ProxTerm, QuadraticModel, SolveTrace,
    StabilityMeta, SymMatrix, TerminalStatus, Vector,
};
