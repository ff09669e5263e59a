//! Telescopic schedules: the nested sets `S_k` with their strong-convexity
//! parameters `μ_k`, per-set Lipschitz bounds `L(f', S_k ∩ U)` and the
//! `τ_k` sequences used by the rate bound.

use crate::geometry::{BregmanGeometry, MuProvenance, SetDescriptor};
use crate::problems::{CompositeProblem, SmoothTerm};
use crate::{Error, Result};

/// Family of telescopic sequences.
#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleFamily {
    /// `S_k = [-k^σ, k^σ]ⁿ ∩ C`.
    PowerBox { sigma: f64 },
    /// `S_k = {‖x‖ ≤ √k} ∩ C` in the geometry's ambient norm.
    SqrtBall,
    /// `S_k = C` for all `k`.
    Constant,
}

/// Rule mapping `k ↦ μ_k`; nonincreasing by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum MuRule {
    Constant { mu: f64, provenance: MuProvenance },
    /// `μ_k = β / r_k` for radius schedules on entropy geometry, with `β`
    /// calibrated by the sampled-ratio estimator.
    BetaOverRadius { beta: f64, provenance: MuProvenance },
}

/// A telescopic schedule bound to a constraint set and geometry.
#[derive(Clone, Debug)]
pub struct TelescopicSchedule {
    family: ScheduleFamily,
    constraint: SetDescriptor,
    mu_rule: MuRule,
    norm_exponent: f64,
}

/// Default box exponent: Example-style schedules need `σ(p-2) < 1` for the
/// rate to vanish, with σ otherwise free.
pub fn default_sigma(p: f64) -> f64 {
    if p > 2.0 {
        (0.5 / (p - 2.0)).min(0.5)
    } else {
        0.5
    }
}

impl TelescopicSchedule {
    pub fn new(
        family: ScheduleFamily,
        constraint: SetDescriptor,
        geometry: &BregmanGeometry,
    ) -> Result<Self> {
        if let ScheduleFamily::PowerBox { sigma } = &family {
            if !(*sigma > 0.0) {
                return Err(Error::InvalidParameter("sigma must be positive".into()));
            }
        }
        let mu_rule = match &family {
            ScheduleFamily::Constant => {
                let sc = geometry.strong_convexity_parameter(&constraint)?;
                MuRule::Constant {
                    mu: sc.mu,
                    provenance: sc.provenance,
                }
            }
            ScheduleFamily::PowerBox { .. } => {
                // Only the Euclidean geometry pairs with box schedules: the
                // boxes leave the entropy domain.
                let sc = geometry.strong_convexity_parameter(&SetDescriptor::Box { radius: 1.0 })?;
                MuRule::Constant {
                    mu: sc.mu,
                    provenance: sc.provenance,
                }
            }
            ScheduleFamily::SqrtBall => {
                let beta = calibrate_beta(&constraint, geometry)?;
                MuRule::BetaOverRadius {
                    beta,
                    provenance: MuProvenance::Sampled {
                        pairs: 10_000,
                        safety: 0.9,
                    },
                }
            }
        };
        Ok(TelescopicSchedule {
            family,
            constraint,
            mu_rule,
            norm_exponent: geometry.norm_exponent(),
        })
    }

    pub fn family(&self) -> &ScheduleFamily {
        &self.family
    }

    pub fn constraint(&self) -> &SetDescriptor {
        &self.constraint
    }

    pub fn mu_rule(&self) -> &MuRule {
        &self.mu_rule
    }

    /// Whether the sets genuinely grow with `k`.
    pub fn is_growing(&self) -> bool {
        !matches!(self.family, ScheduleFamily::Constant)
    }

    /// The set `S_k`, `k ≥ 1`, evaluated lazily.
    pub fn set_at(&self, k: u64) -> SetDescriptor {
        assert!(k >= 1, "telescopic index starts at 1");
        match &self.family {
            ScheduleFamily::PowerBox { sigma } => SetDescriptor::Intersection(vec![
                SetDescriptor::Box {
                    radius: (k as f64).powf(*sigma),
                },
                self.constraint.clone(),
            ])
            .normalized(),
            ScheduleFamily::SqrtBall => SetDescriptor::Intersection(vec![
                SetDescriptor::Ball {
                    radius: (k as f64).sqrt(),
                    norm_exponent: self.norm_exponent,
                },
                self.constraint.clone(),
            ])
            .normalized(),
            ScheduleFamily::Constant => self.constraint.clone(),
        }
    }

    /// `μ_k`, a valid strong convexity parameter of `b` on `S_k`.
    pub fn mu_at(&self, k: u64) -> f64 {
        assert!(k >= 1);
        match &self.mu_rule {
            MuRule::Constant { mu, .. } => *mu,
            MuRule::BetaOverRadius { beta, .. } => beta / (k as f64).sqrt(),
        }
    }

    /// A certified upper bound on `L(f', S_k ∩ U)`.
    pub fn lipschitz_bound_at(&self, problem: &CompositeProblem, k: u64) -> Result<f64> {
        let set = self.set_at(k);
        lipschitz_bound_on(problem, &set)
    }

    /// Smallest `k` with `x_ref ∈ S_k`, raised to 2 when `F(x₁) = ∞`.
    pub fn find_k0(&self, x_ref: &[f64], f_of_x1_finite: bool) -> Result<u64> {
        if !self.constraint.contains(x_ref, 1e-12) {
            return Err(Error::NotFound(
                "reference point lies outside the constraint set".into(),
            ));
        }
        let floor = if f_of_x1_finite { 1 } else { 2 };
        let candidate = match &self.family {
            ScheduleFamily::Constant => 1,
            ScheduleFamily::PowerBox { sigma } => {
                let r = crate::linalg::lp_norm(x_ref, f64::INFINITY);
                smallest_k(|k| (k as f64).powf(*sigma) >= r)?
            }
            ScheduleFamily::SqrtBall => {
                let r = crate::linalg::lp_norm(x_ref, self.norm_exponent);
                smallest_k(|k| (k as f64).sqrt() >= r)?
            }
        };
        // Snap against the actual membership test around the analytic index.
        let mut k = candidate.max(1);
        while k > 1 && self.set_at(k - 1).contains(x_ref, 0.0) {
            k -= 1;
        }
        while !self.set_at(k).contains(x_ref, 0.0) {
            k += 1;
            if k > K0_CAP {
                return Err(Error::NotFound(format!(
                    "reference point not reached by the schedule within k <= {K0_CAP}"
                )));
            }
        }
        Ok(k.max(floor))
    }
}

const K0_CAP: u64 = 1 << 40;

/// Calibrate `β` for the `μ_k = β / r_k` rule by running the sampled-ratio
/// strong-convexity estimator on `C ∩ Ball(r)` across a spread of radii and
/// keeping the smallest `μ̂(r) · r`. Sample-based, hence flagged as such in
/// the provenance the schedule reports.
fn calibrate_beta(constraint: &SetDescriptor, geometry: &BregmanGeometry) -> Result<f64> {
    let mut beta = f64::INFINITY;
    for radius in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let set = SetDescriptor::Intersection(vec![
            constraint.clone(),
            SetDescriptor::Ball {
                radius,
                norm_exponent: geometry.norm_exponent(),
            },
        ]);
        let sc = geometry.strong_convexity_parameter(&set)?;
        beta = beta.min(sc.mu * radius);
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::NotStronglyConvex(
            "beta calibration produced a degenerate value".into(),
        ));
    }
    Ok(beta)
}

fn smallest_k(pred: impl Fn(u64) -> bool) -> Result<u64> {
    if pred(1) {
        return Ok(1);
    }
    let mut hi = 2u64;
    while !pred(hi) {
        hi = hi.saturating_mul(2);
        if hi > K0_CAP {
            return Err(Error::NotFound("telescopic index cap exceeded".into()));
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Certified Lipschitz bound of the smooth gradient over `set`, in the
/// problem's ambient norm.
pub fn lipschitz_bound_on(problem: &CompositeProblem, set: &SetDescriptor) -> Result<f64> {
    let geometry = problem.geometry();
    let n = geometry.dimension() as f64;
    let r = geometry.norm_exponent();
    match problem.smooth() {
        SmoothTerm::LpResidual { c, p, sigma_upper, .. } => {
            // ‖A‖_{r→p} ≤ σ_max(A) · n^{max(0, 1/2 - 1/r)}. The operator
            // norm enters squared: the gradient chains through both A and
            // Aᵀ, so L(f') ≤ L(h', AS - c) · ‖A‖².
            let inv_r = if r.is_infinite() { 0.0 } else { 1.0 / r };
            let op = sigma_upper * n.powf((0.5 - inv_r).max(0.0));
            if *p == 2.0 {
                // The exponent p - 2 = 0 kills the radius term; the
                // gradient Aᵀ(Ax - c) is globally Lipschitz.
                return Ok(op * op);
            }
            let rho = set.box_radius().ok_or_else(|| {
                Error::NoBoundAvailable(format!(
                    "lp residual with p > 2 needs a bounded box enclosure, set {set:?} has none"
                ))
            })?;
            let cp = crate::linalg::lp_norm(c, *p);
            Ok((p - 1.0)
                * 2f64.powf(p - 2.0)
                * op
                * op
                * (op * n.powf(inv_r) * rho + cp).powf(p - 2.0))
        }
        SmoothTerm::SimplexPower => {
            let p = geometry.norm_exponent();
            let m = set.norm_radius(p, geometry.dimension()).ok_or_else(|| {
                Error::NoBoundAvailable(format!(
                    "simplex power needs a bounded enclosing ball, set {set:?} has none"
                ))
            })?;
            let q = crate::linalg::dual_exponent(p);
            let ones_q = if q.is_infinite() { 1.0 } else { n.powf(1.0 / q) };
            Ok(4.0 * 2f64.sqrt() * ones_q * m.sqrt())
        }
    }
}

/// How `τ_k` (the nondecreasing majorant of `L_k` in the rate bound) is
/// resolved for a finished run.
#[derive(Clone, Debug, PartialEq)]
pub enum TauRule {
    /// Lipschitz step size rule: `τ_k = L_k` from the trace itself.
    TraceL,
    /// Backtracking with a growing schedule (or an admissible `L₁` on a
    /// constant one): `τ_k = η · L(f', S_k ∩ U)`.
    EtaBound { eta: f64 },
    /// Backtracking on a constant schedule started above `η`-times the
    /// bound: the step size freezes, so `τ_k = L₁`.
    FixedL1 { l1: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BregmanGeometry;
    use crate::linalg::{lp_dist, lp_norm, Matrix};
    use crate::problems::{generate_instance, CompositeProblem, NonsmoothTerm, SmoothTerm};
    use crate::sampling::sample_in;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad(dim: usize, r: f64) -> BregmanGeometry {
        BregmanGeometry::half_squared_euclidean(dim, r).unwrap()
    }

    #[test]
    fn power_box_set_examples() {
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.5 },
            SetDescriptor::WholeSpace,
            &quad(2, 2.0),
        )
        .unwrap();
        assert_eq!(sched.set_at(9), SetDescriptor::Box { radius: 3.0 });
        let c = SetDescriptor::Box { radius: 10.0 };
        let constant =
            TelescopicSchedule::new(ScheduleFamily::Constant, c.clone(), &quad(2, 2.0)).unwrap();
        assert_eq!(constant.set_at(1), c);
        assert_eq!(constant.set_at(77), c);
    }

    #[test]
    fn sqrt_ball_set_example() {
        let ent = BregmanGeometry::negative_entropy(3, 2.0).unwrap();
        let sched =
            TelescopicSchedule::new(ScheduleFamily::SqrtBall, SetDescriptor::Prism, &ent).unwrap();
        let s4 = sched.set_at(4);
        match &s4 {
            SetDescriptor::Intersection(parts) => {
                assert!(parts.contains(&SetDescriptor::Ball {
                    radius: 2.0,
                    norm_exponent: 2.0
                }));
                assert!(parts.contains(&SetDescriptor::Prism));
            }
            other => panic!("unexpected set {other:?}"),
        }
    }

    #[test]
    fn sets_are_nested_and_exhaust_the_constraint() {
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.3 },
            SetDescriptor::WholeSpace,
            &quad(4, 2.0),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..40 {
            let inner = sched.set_at(k);
            let outer = sched.set_at(k + 1);
            for _ in 0..50 {
                let x = sample_in(&inner, 4, &mut rng).unwrap();
                assert!(outer.contains(&x, 1e-12), "nesting failed at k={k}");
            }
        }
        // exhaustion proxy
        for _ in 0..100 {
            let x = sample_in(&SetDescriptor::Box { radius: 50.0 }, 4, &mut rng).unwrap();
            let k0 = sched.find_k0(&x, true).unwrap();
            assert!(sched.set_at(k0).contains(&x, 1e-12));
        }
    }

    #[test]
    fn mu_is_nonincreasing() {
        let ent = BregmanGeometry::negative_entropy(3, 2.0).unwrap();
        let sched =
            TelescopicSchedule::new(ScheduleFamily::SqrtBall, SetDescriptor::Prism, &ent).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let mu = sched.mu_at(k);
            assert!(mu > 0.0 && mu <= prev);
            prev = mu;
        }
    }

    #[test]
    fn lp_bound_examples() {
        // p = 2: the radius term vanishes and the bound is the operator norm.
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let prob = CompositeProblem::new(
            SmoothTerm::lp_residual(a, vec![1.0], 2.0).unwrap(),
            NonsmoothTerm::scaled_l1(1.0).unwrap(),
            SetDescriptor::WholeSpace,
            quad(1, 2.0),
        )
        .unwrap();
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.5 },
            SetDescriptor::WholeSpace,
            &quad(1, 2.0),
        )
        .unwrap();
        let b = sched.lipschitz_bound_at(&prob, 100).unwrap();
        assert!((b - 1.0).abs() < 1e-6, "p=2 bound should be ~||A||^2, got {b}");

        // p = 3 with ||A|| = 1, n = 1, r = 2, rho_k = 2, ||c||_3 = 1:
        // 2 * 2 * 1 * (1*1*2 + 1)^1 = 12.
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let prob3 = CompositeProblem::new(
            SmoothTerm::lp_residual(a, vec![1.0], 3.0).unwrap(),
            NonsmoothTerm::scaled_l1(1.0).unwrap(),
            SetDescriptor::WholeSpace,
            quad(1, 2.0),
        )
        .unwrap();
        let b3 = sched.lipschitz_bound_at(&prob3, 4).unwrap(); // rho = 4^0.5 = 2
        assert!((b3 - 12.0).abs() < 1e-5, "printed-formula value 12, got {b3}");
    }

    #[test]
    fn simplex_power_bound_is_four_root_two() {
        let ent = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        let prob = CompositeProblem::new(
            SmoothTerm::SimplexPower,
            NonsmoothTerm::max_linear(vec![vec![0.3, 0.3, 0.3]]).unwrap(),
            SetDescriptor::Simplex,
            ent.clone(),
        )
        .unwrap();
        let sched =
            TelescopicSchedule::new(ScheduleFamily::Constant, SetDescriptor::Simplex, &ent).unwrap();
        let b = sched.lipschitz_bound_at(&prob, 1).unwrap();
        assert!((b - 4.0 * 2f64.sqrt()).abs() < 1e-12, "got {b}");
    }

    #[test]
    fn no_bound_for_unbounded_simplex_power() {
        let ent = BregmanGeometry::negative_entropy(3, 2.0).unwrap();
        let prob = CompositeProblem::new(
            SmoothTerm::SimplexPower,
            NonsmoothTerm::max_linear(vec![vec![0.3, 0.3, 0.3]]).unwrap(),
            SetDescriptor::Prism,
            ent.clone(),
        )
        .unwrap();
        let sched =
            TelescopicSchedule::new(ScheduleFamily::Constant, SetDescriptor::Prism, &ent);
        // Constant schedule on the unbounded prism cannot even certify mu.
        assert!(sched.is_err());
        assert!(matches!(
            lipschitz_bound_on(&prob, &SetDescriptor::Prism),
            Err(Error::NoBoundAvailable(_))
        ));
    }

    #[test]
    fn default_sigma_respects_the_rate_window() {
        assert_eq!(default_sigma(2.0), 0.5);
        assert_eq!(default_sigma(3.0), 0.5);
        assert_eq!(default_sigma(4.0), 0.25);
        // sigma (p - 2) < 1 must hold for p > 2
        for p in [2.5, 3.0, 5.0, 9.0] {
            assert!(default_sigma(p) * (p - 2.0) < 1.0);
        }
    }

    #[test]
    fn find_k0_examples() {
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.5 },
            SetDescriptor::WholeSpace,
            &quad(2, 2.0),
        )
        .unwrap();
        let x = [3.0, 0.0];
        assert_eq!(sched.find_k0(&x, true).unwrap(), 9);

        let constant = TelescopicSchedule::new(
            ScheduleFamily::Constant,
            SetDescriptor::WholeSpace,
            &quad(2, 2.0),
        )
        .unwrap();
        assert_eq!(constant.find_k0(&x, true).unwrap(), 1);
        assert_eq!(constant.find_k0(&x, false).unwrap(), 2);
    }

    #[test]
    fn rate_precondition_tau_over_k_mu_vanishes() {
        // For the lp problem with sigma (p-2) < 1, tau_k/(k mu_k) -> 0.
        let inst = generate_instance(1, 4, 6, 3.0, 0.1, 0.5).unwrap();
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.3 },
            SetDescriptor::WholeSpace,
            inst.problem.geometry(),
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for k in [10u64, 100, 1_000, 10_000, 100_000, 1_000_000] {
            let tau = sched.lipschitz_bound_at(&inst.problem, k).unwrap();
            let ratio = tau / (k as f64 * sched.mu_at(k));
            assert!(ratio < prev, "ratio must decrease, k={k}");
            prev = ratio;
        }
        assert!(prev < 1e-2, "ratio should be tiny by k=1e6, got {prev}");
    }

    #[test]
    fn bounds_are_monotone_and_empirically_valid() {
        let inst = generate_instance(3, 5, 8, 3.0, 0.1, 0.4).unwrap();
        let sched = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.4 },
            SetDescriptor::WholeSpace,
            inst.problem.geometry(),
        )
        .unwrap();
        let mut prev = 0.0;
        for k in 1..50 {
            let b = sched.lipschitz_bound_at(&inst.problem, k).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        // Empirical validity on sampled pairs in S_k.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = inst.problem.geometry().norm_exponent();
        let dual = crate::linalg::dual_exponent(r);
        for k in [1u64, 16, 64] {
            let set = sched.set_at(k);
            let bound = sched.lipschitz_bound_at(&inst.problem, k).unwrap();
            for _ in 0..333 {
                let x = sample_in(&set, 5, &mut rng).unwrap();
                let y = sample_in(&set, 5, &mut rng).unwrap();
                let gx = inst.problem.smooth_gradient(&x).unwrap();
                let gy = inst.problem.smooth_gradient(&y).unwrap();
                let lhs = lp_norm(&crate::linalg::sub(&gx, &gy), dual);
                assert!(
                    lhs <= bound * lp_dist(&x, &y, r) + 1e-9,
                    "Lipschitz bound violated at k={k}"
                );
            }
        }
    }
}
