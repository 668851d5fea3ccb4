//! Low-rank matrix recovery via the factorization `X = U Vᵀ`.
//!
//! The crate covers the full pipeline for recovering a rank-`r` matrix from
//! linear Gaussian measurements by running gradient descent directly on the
//! factors:
//!
//! * [`problem`] — the sensing instance: operator, ground truth, the smooth
//!   loss `f(X) = ½‖A(X − X⋆)‖²` and its derivatives, plus empirical
//!   restricted-convexity constants.
//! * [`factorized`] — the factored objective `g(U,V) = f(UVᵀ)` with an
//!   optional balancing regularizer, its gradient, Hessian bilinear form and
//!   matrix-free Hessian-vector product, and the balanced-lift / factor
//!   rescaling constructions.
//! * [`landscape`] — classification of candidate critical points as global
//!   minima or strict saddles, via a Lanczos minimum-eigenvalue solver and an
//!   explicit escape direction for rank-deficient points.
//! * [`solvers`] — gradient descent with backtracking line search and
//!   per-iteration trace recording.
//! * [`distributed`] — the penalty-consensus form of the same problem over a
//!   weighted connected network of agents.
//! * [`check`] — randomized verification suites (finite differences, adjoint
//!   identities, lift invariants) reused by the tests and the CLI.
//!
//! All randomness flows from explicit 64-bit seeds through one pinned
//! generator (see [`rng`]); identical seeds reproduce identical results on a
//! given platform.

pub mod check;
pub mod distributed;
pub mod eigen;
pub mod error;
pub mod factorized;
pub mod landscape;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod solvers;

/// Dense real matrix, the universal numeric carrier.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector (measurement space).
pub type Vector = nalgebra::DVector<f64>;

pub use error::Error;
pub use factorized::{BalancedLift, FactorDirection, FactorPair};
pub use landscape::{Classification, ClassifyThresholds, LandscapeReport};
pub use problem::{RscEstimate, SensingOperator, SensingProblem};
pub use solvers::{IterTrace, SolverConfig, StepMode, Termination, TraceRow};
