//! Telescoping Bregmanian proximal gradient (TEPROG) for composite convex
//! minimization.
//!
//! Minimizes `F = f + g` over a closed convex constraint set `C`, where `f`
//! is smooth and convex but its gradient need not be globally Lipschitz, and
//! `g` is convex and possibly nonsmooth. Instead of proximal steps over all
//! of `C`, each step `k` is taken over a member `S_k` of a nested
//! ("telescopic") family `S_1 ⊆ S_2 ⊆ …` with `∪ S_k = C`, on which the
//! gradient of `f` *is* Lipschitz. The proximal kernel is a Bregman
//! divergence, so non-Euclidean geometries (e.g. negative entropy on the
//! simplex) are supported.
//!
//! The crate is organized around the pipeline:
//!
//! * [`geometry`]: Bregman functions, divergences and strong-convexity
//!   parameters over constraint sets.
//! * [`telescope`]: telescopic schedules `S_k` with their `μ_k`, Lipschitz
//!   bounds and `τ_k` step-bound sequences.
//! * [`problems`]: concrete smooth/nonsmooth terms (ℓp residual + ℓ1,
//!   simplex power + max-of-linear) and a seeded instance generator.
//! * [`prox`]: the Bregman proximal map, as a per-coordinate closed form
//!   for the box/ℓ1/quadratic case and an entropic inner solver for the
//!   simplex case, both with an optimality-residual certificate.
//! * [`solver`]: the two outer loops (Lipschitz step size rule and
//!   backtracking) producing fully recorded traces.
//! * [`analysis`]: certification of traces against the non-asymptotic rate
//!   bound and the per-step inequalities, plus an empirical rate fit.
//! * [`baseline`]: an independent textbook proximal-gradient (ISTA)
//!   implementation used for cross-checking the `p = 2` reduction.

// Parameter guards use the `!(x > 0.0)` form on purpose: it rejects NaN,
// which `x <= 0.0` silently accepts.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod error;
pub mod extreal;
pub mod geometry;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod sampling;
pub mod solver;
pub mod telescope;

pub use error::Error;
pub use extreal::ExtReal;
pub use geometry::{BregmanGeometry, SetDescriptor, StrongConvexity};
pub use problems::{CompositeProblem, GeneratedInstance, NonsmoothTerm, SmoothTerm};
pub use prox::ProxSubproblem;
pub use solver::{RunTrace, SolverConfig, StepRule, TraceRecord};
pub use telescope::{ScheduleFamily, TelescopicSchedule};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
