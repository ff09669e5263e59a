//! Trace certification: the non-asymptotic rate bound, the per-step
//! inequality suite, lemma-level sampled checks, and an advisory empirical
//! rate fit.

use rand::Rng;

use crate::geometry::SetDescriptor;
use crate::linalg::{dot, lp_dist, sub};
use crate::problems::CompositeProblem;
use crate::prox::{optimality_residual, ProxSubproblem};
use crate::sampling::sample_in;
use crate::solver::{RunTrace, StepRule};
use crate::telescope::{TauRule, TelescopicSchedule};
use crate::{Error, Result};

/// Right-hand side of the rate bound:
/// `τ_{k+1} · B(x_ref, x_{k0}) / ((k + 1 - k0) · μ_{k+1})`.
pub fn theorem_bound(k: u64, k0: u64, tau_next: f64, mu_next: f64, b0: f64) -> Result<f64> {
    if k < k0 || k0 < 1 {
        return Err(Error::InvalidParameter(format!(
            "bound needs k >= k0 >= 1, got k = {k}, k0 = {k0}"
        )));
    }
    if !(tau_next > 0.0) || !(mu_next > 0.0) || !(b0 >= 0.0) {
        return Err(Error::InvalidParameter(
            "bound needs tau > 0, mu > 0, B0 >= 0".into(),
        ));
    }
    Ok(tau_next * b0 / ((k + 1 - k0) as f64 * mu_next))
}

/// One certified index: the observed optimality gap against the bound.
#[derive(Clone, Debug)]
pub struct BoundEntry {
    pub k: u64,
    pub gap: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// The rate bound evaluated along a whole trace.
#[derive(Clone, Debug)]
pub struct CertifiedBound {
    pub k0: u64,
    pub b0: f64,
    pub f_ref: f64,
    pub entries: Vec<BoundEntry>,
    pub all_satisfied: bool,
}

/// Resolve which `τ_k` sequence applies to a finished run.
pub fn tau_rule_for(
    trace: &RunTrace,
    schedule: &TelescopicSchedule,
    problem: &CompositeProblem,
) -> Result<TauRule> {
    match trace.config.rule {
        StepRule::Lipschitz => Ok(TauRule::TraceL),
        StepRule::Backtracking { eta } => {
            if schedule.is_growing() {
                Ok(TauRule::EtaBound { eta })
            } else {
                let bound = schedule.lipschitz_bound_at(problem, 1)?;
                if trace.config.l1 > eta * bound {
                    Ok(TauRule::FixedL1 {
                        l1: trace.config.l1,
                    })
                } else {
                    Ok(TauRule::EtaBound { eta })
                }
            }
        }
    }
}

fn tau_at(
    rule: &TauRule,
    trace: &RunTrace,
    schedule: &TelescopicSchedule,
    problem: &CompositeProblem,
    k: u64,
) -> Result<f64> {
    match rule {
        TauRule::TraceL => trace
            .record_at(k)
            .map(|r| r.l)
            .ok_or_else(|| Error::NotFound(format!("no trace record at k = {k}"))),
        TauRule::EtaBound { eta } => Ok(eta * schedule.lipschitz_bound_at(problem, k)?),
        TauRule::FixedL1 { l1 } => Ok(*l1),
    }
}

/// Evaluate the rate bound at every `k ≥ k0` along the trace, where `k0`
/// is the first index whose telescopic set contains `x_ref` (at least 2
/// when `F(x₁) = ∞`) and `B0 = B(x_ref, x_{k0})` is taken at the trace's
/// own `k0`-th iterate.
pub fn certify_trace(
    trace: &RunTrace,
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    x_ref: &[f64],
    f_ref: f64,
) -> Result<CertifiedBound> {
    if !schedule.constraint().contains(x_ref, 1e-9) {
        return Err(Error::ReferenceInfeasible(
            "reference point lies outside the constraint set".into(),
        ));
    }
    let tol = 1e-8 * (1.0 + f_ref.abs());
    if f_ref > trace.best_f() + tol {
        return Err(Error::ReferenceInfeasible(format!(
            "reference value {f_ref} exceeds the best trace value {}",
            trace.best_f()
        )));
    }
    let f1_finite = trace.records[0].f.is_finite();
    let k0 = schedule.find_k0(x_ref, f1_finite)?;
    let last_k = trace.last().k;
    if k0 >= last_k {
        return Err(Error::NotFound(format!(
            "trace ends at k = {last_k}, before certification start k0 = {k0}"
        )));
    }
    let x_k0 = &trace
        .record_at(k0)
        .ok_or_else(|| Error::NotFound(format!("no trace record at k0 = {k0}")))?
        .x;
    let b0 = problem.geometry().bregman_value(x_ref, x_k0)?;
    let rule = tau_rule_for(trace, schedule, problem)?;

    let mut entries = Vec::new();
    let mut all = true;
    for k in k0..last_k {
        let next = trace
            .record_at(k + 1)
            .ok_or_else(|| Error::NotFound(format!("no trace record at k = {}", k + 1)))?;
        let gap = next.f.value_or_inf() - f_ref;
        let tau_next = tau_at(&rule, trace, schedule, problem, k + 1)?;
        let bound = theorem_bound(k, k0, tau_next, next.mu, b0)?;
        let satisfied = gap <= bound + tol;
        all &= satisfied;
        entries.push(BoundEntry {
            k,
            gap,
            bound,
            satisfied,
        });
    }
    Ok(CertifiedBound {
        k0,
        b0,
        f_ref,
        entries,
        all_satisfied: all,
    })
}

/// Per-step inequality results over a trace, one flag per recorded step.
#[derive(Clone, Debug)]
pub struct StepChecks {
    /// `F(x_k) ≤ Q(x_k, x_{k-1})`.
    pub certificate: Vec<(u64, bool)>,
    /// `F(x_{k-1}) - F(x_k) ≥ (L_k/μ_k) B(x_{k-1}, x_k)`.
    pub sufficient_decrease: Vec<(u64, bool)>,
    /// `L_k ≥ L_{k-1}`.
    pub l_nondecreasing: Vec<(u64, bool)>,
    /// `x_k ∈ S_k ∩ U`.
    pub feasibility: Vec<(u64, bool)>,
}

impl StepChecks {
    pub fn all_pass(&self) -> bool {
        self.certificate.iter().all(|(_, b)| *b)
            && self.sufficient_decrease.iter().all(|(_, b)| *b)
            && self.l_nondecreasing.iter().all(|(_, b)| *b)
            && self.feasibility.iter().all(|(_, b)| *b)
    }
}

/// Re-derive the per-step inequalities from the recorded iterates.
pub fn step_inequality_suite(
    trace: &RunTrace,
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
) -> Result<StepChecks> {
    let mut checks = StepChecks {
        certificate: Vec::new(),
        sufficient_decrease: Vec::new(),
        l_nondecreasing: Vec::new(),
        feasibility: Vec::new(),
    };
    for pair in trace.records.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let k = cur.k;
        let set = schedule.set_at(k);

        let feasible = set.contains(&cur.x, 1e-9) && problem.geometry().in_zone(&cur.x);
        checks.feasibility.push((k, feasible));
        checks.l_nondecreasing.push((k, cur.l >= prev.l));

        // A corrupted record may fall outside the surrogate's domain;
        // that is a failed check, not an evaluation error.
        let f_cur = cur.f.value_or_inf();
        let certificate_ok =
            ProxSubproblem::new(problem, set, prev.x.clone(), cur.l, cur.mu)
                .and_then(|sub| sub.surrogate_value(&cur.x))
                .map(|q| f_cur <= q.value_or_inf() + 1e-9 * (1.0 + f_cur.abs()))
                .unwrap_or(false);
        checks.certificate.push((k, certificate_ok));

        let decrease_ok = match (
            prev.f.finite(),
            problem.geometry().bregman_value(&prev.x, &cur.x),
        ) {
            (Some(f_prev), Ok(b)) => {
                f_prev - f_cur >= cur.l / cur.mu * b - 1e-9 * (1.0 + f_cur.abs())
            }
            // F(x₁) = ∞ makes the decrease inequality vacuous.
            (None, Ok(_)) => true,
            (_, Err(_)) => false,
        };
        checks.sufficient_decrease.push((k, decrease_ok));
    }
    Ok(checks)
}

/// `B(x_ref, x_{k+1}) ≤ B(x_ref, x_k)` for every consecutive pair with
/// `k ≥ k0`. Vacuously true on traces shorter than two records past `k0`.
pub fn bregman_monotonicity(
    trace: &RunTrace,
    problem: &CompositeProblem,
    x_ref: &[f64],
    k0: u64,
) -> Result<bool> {
    let geom = problem.geometry();
    let mut prev: Option<f64> = None;
    for rec in trace.records.iter().filter(|r| r.k >= k0) {
        let b = geom.bregman_value(x_ref, &rec.x)?;
        if let Some(p) = prev {
            if b > p + 1e-9 {
                return Ok(false);
            }
        }
        prev = Some(b);
    }
    Ok(true)
}

/// Sampled descent lemma: `f(x) ≤ f(y) + <f'(y), x-y> + ½L‖x-y‖²` over
/// random pairs in `set ∩ U`, with the ambient norm.
pub fn check_descent_lemma<R: Rng>(
    problem: &CompositeProblem,
    set: &SetDescriptor,
    l: f64,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let r = problem.geometry().norm_exponent();
    for _ in 0..samples {
        let x = sample_in(set, problem.geometry().dimension(), rng)?;
        let y = sample_in(set, problem.geometry().dimension(), rng)?;
        if !problem.geometry().in_zone(&y) {
            continue;
        }
        let fx = problem.smooth_value(&x)?;
        let fy = problem.smooth_value(&y)?;
        let gy = problem.smooth_gradient(&y)?;
        let d = lp_dist(&x, &y, r);
        let rhs = fy + dot(&gy, &sub(&x, &y)) + 0.5 * l * d * d;
        if fx > rhs + 1e-9 * (1.0 + fx.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sampled forward-backward inequality at a certified prox step `z` of
/// base `y`: `F(x) - F(z) ≥ (L/μ)(B(x,z) - B(x,y))` over random `x ∈ set`.
#[allow(clippy::too_many_arguments)]
pub fn check_fb_inequality<R: Rng>(
    problem: &CompositeProblem,
    set: &SetDescriptor,
    l: f64,
    mu: f64,
    y: &[f64],
    z: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let sub_problem = ProxSubproblem::new(problem, set.clone(), y.to_vec(), l, mu)?;
    let residual = optimality_residual(&sub_problem, z)?;
    if residual > 1e-8 {
        return Err(Error::PreconditionViolation(format!(
            "z is not a certified prox output (residual {residual:.3e})"
        )));
    }
    let fz = problem.objective_value(z).value_or_inf();
    let qz = sub_problem.surrogate_value(z)?.value_or_inf();
    if fz > qz + 1e-9 * (1.0 + fz.abs()) {
        return Err(Error::PreconditionViolation(
            "step certificate F(z) <= Q(z, y) fails".into(),
        ));
    }
    let geom = problem.geometry();
    for _ in 0..samples {
        let x = sample_in(set, geom.dimension(), rng)?;
        let fx = match problem.objective_value(&x).finite() {
            Some(v) => v,
            None => continue,
        };
        let rhs = l / mu * (geom.bregman_value(&x, z)? - geom.bregman_value(&x, y)?);
        if fx - fz < rhs - 1e-9 * (1.0 + fx.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least-squares slope of `log(gap)` against `log(k)` over the window;
/// advisory only (the theorem upper-bounds the gap, it does not pin its
/// decay order).
pub fn fit_empirical_rate(
    trace: &RunTrace,
    f_ref: f64,
    k_window: (u64, u64),
) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for rec in &trace.records {
        if rec.k < k_window.0 || rec.k > k_window.1 {
            continue;
        }
        if let Some(f) = rec.f.finite() {
            let gap = f - f_ref;
            if gap > 0.0 && gap.is_finite() {
                pts.push(((rec.k as f64).ln(), gap.ln()));
            }
        }
    }
    if pts.len() < 2 {
        return Err(Error::DegenerateWindow(format!(
            "only {} positive-gap points in [{}, {}]",
            pts.len(),
            k_window.0,
            k_window.1
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("window spans a single k".into()));
    }
    Ok(sxy / sxx)
}
