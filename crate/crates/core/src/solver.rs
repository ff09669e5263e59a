//! The two telescoping proximal-gradient outer loops: the Lipschitz step
//! size rule (step size from certified per-set bounds) and the backtracking
//! rule (smallest `η`-power blow-up whose surrogate majorizes the
//! objective at the prox output). Both record a full per-iteration trace.

use std::time::{Duration, Instant};

use crate::extreal::ExtReal;
use crate::linalg::lp_dist;
use crate::problems::CompositeProblem;
use crate::prox::ProxSubproblem;
use crate::telescope::TelescopicSchedule;
use crate::{Error, Result};

/// Step size rule selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Lipschitz,
    Backtracking { eta: f64 },
}

/// Outer-loop configuration.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub rule: StepRule,
    /// Initial step constant `L₁`.
    pub l1: f64,
    /// Number of recorded iterations, the initial point included.
    pub k_max: u64,
    /// Residual tolerance for the iterative prox path.
    pub inner_tol: f64,
    /// Iteration budget for the iterative prox path.
    pub inner_budget: usize,
    /// Optional early stop once the per-step objective decrease falls
    /// below this value. Off by default: certification quantifies over the
    /// whole horizon.
    pub stop_gap: Option<f64>,
    /// Cap on backtracking trials per step.
    pub backtrack_cap: u32,
}

impl SolverConfig {
    pub fn lipschitz(l1: f64, k_max: u64) -> Self {
        SolverConfig {
            rule: StepRule::Lipschitz,
            l1,
            k_max,
            inner_tol: 1e-8,
            inner_budget: 100_000,
            stop_gap: None,
            backtrack_cap: 64,
        }
    }

    pub fn backtracking(eta: f64, l1: f64, k_max: u64) -> Self {
        SolverConfig {
            rule: StepRule::Backtracking { eta },
            ..SolverConfig::lipschitz(l1, k_max)
        }
    }

    fn validate(&self) -> Result<()> {
        if let StepRule::Backtracking { eta } = self.rule {
            if !(eta > 1.0) {
                return Err(Error::InvalidParameter("eta must exceed 1".into()));
            }
        }
        if !(self.l1 > 0.0) {
            return Err(Error::InvalidParameter("L1 must be positive".into()));
        }
        if self.k_max < 1 {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// One recorded iteration.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub k: u64,
    pub x: Vec<f64>,
    pub f: ExtReal,
    pub l: f64,
    pub mu: f64,
    /// Backtracking trial count `i_k`; zero under the Lipschitz rule.
    pub backtracks: u32,
    pub step_norm: f64,
    pub wall: Duration,
}

/// A finished run: every iterate with its step constants, plus the
/// configuration that produced it.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub config: SolverConfig,
}

impl RunTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace is never empty")
    }

    pub fn record_at(&self, k: u64) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.k == k)
    }

    /// Smallest recorded objective value (ignoring an infinite `F(x₁)`).
    pub fn best_f(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.f.finite())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Default initial point: the origin when it is feasible and interior
/// (box schedules over the whole space), otherwise the problem's stored
/// zone witness (the barycenter for the simplex).
pub fn default_start(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
) -> Result<Vec<f64>> {
    let s1 = schedule.set_at(1);
    let origin = vec![0.0; problem.geometry().dimension()];
    if s1.contains(&origin, 0.0) && problem.geometry().in_zone(&origin) {
        return Ok(origin);
    }
    let w = problem.zone_witness().to_vec();
    if s1.contains(&w, 1e-12) {
        return Ok(w);
    }
    Err(Error::PreconditionViolation(
        "no default start available inside S₁ ∩ U".into(),
    ))
}

/// TEPROG with the Lipschitz step size rule: `L_k` is the running maximum
/// of the certified per-set bounds, and each iterate is the proximal point
/// over `S_k`.
pub fn run_lipschitz(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    config: &SolverConfig,
    x1: &[f64],
) -> Result<RunTrace> {
    config.validate()?;
    if config.rule != StepRule::Lipschitz {
        return Err(Error::PreconditionViolation(
            "config selects the backtracking rule".into(),
        ));
    }
    let bound1 = schedule.lipschitz_bound_at(problem, 1)?;
    if config.l1 < bound1 * (1.0 - 1e-12) {
        return Err(Error::PreconditionViolation(format!(
            "L1 = {} is below the certified bound {} on S1",
            config.l1, bound1
        )));
    }
    check_start(problem, schedule, x1)?;

    let mut trace = RunTrace {
        records: vec![initial_record(problem, schedule, config.l1, x1)],
        config: config.clone(),
    };
    let mut x = x1.to_vec();
    let mut l = config.l1;
    for k in 2..=config.k_max {
        let clock = Instant::now();
        l = l.max(schedule.lipschitz_bound_at(problem, k)?);
        let mu = schedule.mu_at(k);
        let set = schedule.set_at(k);
        let sub = ProxSubproblem::new(problem, set.clone(), x.clone(), l, mu)?;
        let z = sub.solve(config.inner_tol, config.inner_budget)?;
        let fz = finish_step(problem, schedule, &sub, &z, k)?;
        let step_norm = lp_dist(&z, &x, problem.geometry().norm_exponent());
        let f_prev = trace.last().f;
        trace.records.push(TraceRecord {
            k,
            x: z.clone(),
            f: fz,
            l,
            mu,
            backtracks: 0,
            step_norm,
            wall: clock.elapsed(),
        });
        x = z;
        if early_stop(config, f_prev, fz) {
            break;
        }
    }
    Ok(trace)
}

/// TEPROG with the backtracking step size rule: at step `k`, the smallest
/// `i_k ≥ 0` such that `L_k = η^{i_k} L_{k-1}` makes the surrogate
/// majorize the objective at the prox output.
pub fn run_backtracking(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    config: &SolverConfig,
    x1: &[f64],
) -> Result<RunTrace> {
    config.validate()?;
    let eta = match config.rule {
        StepRule::Backtracking { eta } => eta,
        StepRule::Lipschitz => {
            return Err(Error::PreconditionViolation(
                "config selects the Lipschitz rule".into(),
            ))
        }
    };
    if schedule.is_growing() {
        let bound1 = schedule.lipschitz_bound_at(problem, 1)?;
        if config.l1 > eta * bound1 * (1.0 + 1e-12) {
            return Err(Error::PreconditionViolation(format!(
                "growing schedule needs L1 <= eta * bound(S1) = {}",
                eta * bound1
            )));
        }
    }
    check_start(problem, schedule, x1)?;

    let mut trace = RunTrace {
        records: vec![initial_record(problem, schedule, config.l1, x1)],
        config: config.clone(),
    };
    let mut x = x1.to_vec();
    let mut l_prev = config.l1;
    for k in 2..=config.k_max {
        let clock = Instant::now();
        let mu = schedule.mu_at(k);
        let set = schedule.set_at(k);
        let mut accepted: Option<(Vec<f64>, ExtReal, f64, u32)> = None;
        for i in 0..=config.backtrack_cap {
            let l = l_prev * eta.powi(i as i32);
            let sub = ProxSubproblem::new(problem, set.clone(), x.clone(), l, mu)?;
            let z = sub.solve(config.inner_tol, config.inner_budget)?;
            let fz = problem.objective_value(&z);
            let qz = sub.surrogate_value(&z)?.value_or_inf();
            if fz.value_or_inf() <= qz + 1e-12 * (1.0 + qz.abs()) {
                finish_step(problem, schedule, &sub, &z, k)?;
                accepted = Some((z, fz, l, i));
                break;
            }
        }
        let (z, fz, l, i) = accepted.ok_or(Error::BacktrackOverflow {
            k,
            cap: config.backtrack_cap,
        })?;
        let step_norm = lp_dist(&z, &x, problem.geometry().norm_exponent());
        let f_prev = trace.last().f;
        trace.records.push(TraceRecord {
            k,
            x: z.clone(),
            f: fz,
            l,
            mu,
            backtracks: i,
            step_norm,
            wall: clock.elapsed(),
        });
        x = z;
        l_prev = l;
        if early_stop(config, f_prev, fz) {
            break;
        }
    }
    Ok(trace)
}

fn check_start(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    x1: &[f64],
) -> Result<()> {
    let s1 = schedule.set_at(1);
    if !s1.contains(x1, 1e-12) || !problem.geometry().in_zone(x1) {
        return Err(Error::PreconditionViolation(
            "initial point must lie in S₁ ∩ U".into(),
        ));
    }
    Ok(())
}

fn initial_record(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    l1: f64,
    x1: &[f64],
) -> TraceRecord {
    TraceRecord {
        k: 1,
        x: x1.to_vec(),
        f: problem.objective_value(x1),
        l: l1,
        mu: schedule.mu_at(1),
        backtracks: 0,
        step_norm: 0.0,
        wall: Duration::ZERO,
    }
}

/// Per-step invariants: the iterate stays in `S_k ∩ U`, its objective is
/// finite from the second iterate on, and the accepted step satisfies the
/// surrogate certificate `F(x_k) ≤ Q(x_k, x_{k-1})`.
fn finish_step(
    problem: &CompositeProblem,
    schedule: &TelescopicSchedule,
    sub: &ProxSubproblem,
    z: &[f64],
    k: u64,
) -> Result<ExtReal> {
    let set = schedule.set_at(k);
    if !set.contains(z, 1e-9) || !problem.geometry().in_zone(z) {
        return Err(Error::ProxFailure(format!(
            "iterate left S_k ∩ U at k = {k}"
        )));
    }
    let fz = problem.objective_value(z);
    if !fz.is_finite() {
        return Err(Error::ProxFailure(format!(
            "objective not finite at k = {k}"
        )));
    }
    let q = sub.surrogate_value(z)?.value_or_inf();
    let f = fz.value_or_inf();
    if f > q + 1e-9 * (1.0 + f.abs()) {
        return Err(Error::ProxFailure(format!(
            "step certificate F <= Q violated at k = {k}: F = {f}, Q = {q}"
        )));
    }
    Ok(fz)
}

fn early_stop(config: &SolverConfig, f_prev: ExtReal, f_now: ExtReal) -> bool {
    match (config.stop_gap, f_prev.finite(), f_now.finite()) {
        (Some(gap), Some(a), Some(b)) => a - b < gap,
        _ => false,
    }
}
