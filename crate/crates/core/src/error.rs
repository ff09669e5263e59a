//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by geometries, schedules, proximal maps, solvers and
/// trace certification.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the domain required by the operation
    /// (e.g. the Bregman gradient evaluated on the boundary of the zone).
    #[error("domain error: {0}")]
    Domain(String),

    /// No certified strong convexity parameter is available for the
    /// requested (geometry, set) pair.
    #[error("no certified strong convexity parameter: {0}")]
    NotStronglyConvex(String),

    /// The smooth term has no Lipschitz-bound formula over the given set.
    #[error("no Lipschitz bound available: {0}")]
    NoBoundAvailable(String),

    /// A search (e.g. for the telescopic entry index) exhausted its cap.
    #[error("not found: {0}")]
    NotFound(String),

    /// A constructor or operation received an out-of-contract argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The inner proximal solver did not reach the residual tolerance
    /// within its iteration budget.
    #[error("inner prox solver exhausted {budget} iterations (residual {residual:.3e} > tol {tol:.3e})")]
    MaxInnerIterations {
        budget: usize,
        residual: f64,
        tol: f64,
    },

    /// The proximal map could not produce a certified minimizer.
    #[error("prox failure: {0}")]
    ProxFailure(String),

    /// An algorithm precondition was violated (bad initial point,
    /// inadmissible L1, failed step certificate, ...).
    #[error("precondition violation: {0}")]
    PreconditionViolation(String),

    /// Backtracking exceeded the configured cap of step-size doublings,
    /// which signals a broken Lipschitz bound or geometry configuration.
    #[error("backtracking exceeded {cap} trials at iteration {k}")]
    BacktrackOverflow { k: u64, cap: u32 },

    /// The reference solution handed to certification is not a
    /// near-minimizer of the trace being certified.
    #[error("reference infeasible: {0}")]
    ReferenceInfeasible(String),

    /// The rate-fit window contains too few usable (positive-gap) points.
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
}
