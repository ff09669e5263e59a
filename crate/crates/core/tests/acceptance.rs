//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Reference solutions come from long high-accuracy runs cached
//! under the cargo target tmpdir; everything else is recomputed.

use std::path::PathBuf;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use teprog::analysis::{
    bregman_monotonicity, certify_trace, check_descent_lemma, check_fb_inequality,
    fit_empirical_rate, step_inequality_suite,
};
use teprog::baseline::ista_iterates;
use teprog::geometry::{BregmanGeometry, SetDescriptor};
use teprog::linalg::{dual_exponent, lp_dist, lp_norm, sub};
use teprog::problems::{generate_instance, CompositeProblem, NonsmoothTerm, SmoothTerm};
use teprog::prox::{box_l1_prox, ProxSubproblem};
use teprog::solver::{run_backtracking, run_lipschitz, RunTrace, SolverConfig};
use teprog::telescope::{lipschitz_bound_on, ScheduleFamily, TelescopicSchedule};
use teprog::ExtReal;

const ORACLE_SEED: u64 = 1;
const ORACLE_KMAX: u64 = 10_000;
const REFERENCE_KMAX: u64 = 1_000_000;

struct OracleSetup {
    problem: CompositeProblem,
    schedule: TelescopicSchedule,
    trace: RunTrace,
    x_ref: Vec<f64>,
    f_ref: f64,
}

#[derive(Serialize, Deserialize)]
struct ReferenceCache {
    tag: String,
    x_ref: Vec<f64>,
    f_ref: f64,
}

static ORACLE: OnceLock<OracleSetup> = OnceLock::new();

/// The seeded p=3 instance with the power-box schedule (n=20, m=30,
/// lambda=0.1, sigma=0.3) and its 1e4-iteration Lipschitz-rule trace.
fn oracle() -> &'static OracleSetup {
    ORACLE.get_or_init(|| {
        let inst = generate_instance(ORACLE_SEED, 20, 30, 3.0, 0.1, 0.2).unwrap();
        let schedule = TelescopicSchedule::new(
            ScheduleFamily::PowerBox { sigma: 0.3 },
            SetDescriptor::WholeSpace,
            inst.problem.geometry(),
        )
        .unwrap();
        let l1 = schedule.lipschitz_bound_at(&inst.problem, 1).unwrap();
        let x1 = vec![0.0; 20];
        let trace = run_lipschitz(
            &inst.problem,
            &schedule,
            &SolverConfig::lipschitz(l1, ORACLE_KMAX),
            &x1,
        )
        .unwrap();

        let tag = format!("lp-n20-m30-p3-seed{ORACLE_SEED}-kref{REFERENCE_KMAX}");
        let cache_path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("teprog-reference.json");
        let cached: Option<ReferenceCache> = std::fs::read_to_string(&cache_path)
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .filter(|c: &ReferenceCache| c.tag == tag);
        let (x_ref, f_ref) = match cached {
            Some(c) => (c.x_ref, c.f_ref),
            None => {
                let long = run_lipschitz(
                    &inst.problem,
                    &schedule,
                    &SolverConfig::lipschitz(l1, REFERENCE_KMAX),
                    &x1,
                )
                .unwrap();
                let x_ref = long.last().x.clone();
                let f_ref = long.last().f.finite().unwrap();
                let _ = std::fs::write(
                    &cache_path,
                    serde_json::to_string(&ReferenceCache {
                        tag,
                        x_ref: x_ref.clone(),
                        f_ref,
                    })
                    .unwrap(),
                );
                (x_ref, f_ref)
            }
        };
        OracleSetup {
            problem: inst.problem,
            schedule,
            trace,
            x_ref,
            f_ref,
        }
    })
}

struct IstaSetup {
    problem: CompositeProblem,
    schedule: TelescopicSchedule,
    l: f64,
    trace: RunTrace,
}

static ISTA: OnceLock<IstaSetup> = OnceLock::new();

/// The p=2 instance on a constant whole-space schedule: the classical
/// ℓ2–ℓ1 setting the solver must reduce to.
fn ista_setup() -> &'static IstaSetup {
    ISTA.get_or_init(|| {
        let inst = generate_instance(2, 20, 30, 2.0, 0.1, 0.25).unwrap();
        let schedule = TelescopicSchedule::new(
            ScheduleFamily::Constant,
            SetDescriptor::WholeSpace,
            inst.problem.geometry(),
        )
        .unwrap();
        let l = schedule.lipschitz_bound_at(&inst.problem, 1).unwrap();
        let trace = run_lipschitz(
            &inst.problem,
            &schedule,
            &SolverConfig::lipschitz(l, 500),
            &[0.0; 20],
        )
        .unwrap();
        IstaSetup {
            problem: inst.problem,
            schedule,
            l,
            trace,
        }
    })
}

struct SimplexSetup {
    problem: CompositeProblem,
    schedule: TelescopicSchedule,
    trace: RunTrace,
    f_grid: f64,
}

static SIMPLEX: OnceLock<SimplexSetup> = OnceLock::new();

/// The entropy/simplex benchmark: single max-linear row (0.3, 0.3, 0.3),
/// constant schedule, mu = 1, L = 4*sqrt(2), started off-center.
fn simplex_setup() -> &'static SimplexSetup {
    SIMPLEX.get_or_init(|| {
        let geometry = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        let problem = CompositeProblem::new(
            SmoothTerm::SimplexPower,
            NonsmoothTerm::max_linear(vec![vec![0.3, 0.3, 0.3]]).unwrap(),
            SetDescriptor::Simplex,
            geometry,
        )
        .unwrap();
        let schedule =
            TelescopicSchedule::new(ScheduleFamily::Constant, SetDescriptor::Simplex, problem.geometry())
                .unwrap();
        let l1 = schedule.lipschitz_bound_at(&problem, 1).unwrap();
        assert!((l1 - 4.0 * 2f64.sqrt()).abs() < 1e-12, "L must be 4*sqrt(2)");
        assert_eq!(schedule.mu_at(1), 1.0, "mu must be 1 on the simplex");
        let trace = run_lipschitz(
            &problem,
            &schedule,
            &SolverConfig::lipschitz(l1, 2_000),
            &[0.7, 0.2, 0.1],
        )
        .unwrap();

        // Barycentric grid minimum of F at resolution 1e-3.
        let res = 1000usize;
        let mut f_grid = f64::INFINITY;
        for i in 0..=res {
            for j in 0..=(res - i) {
                let w = [
                    i as f64 / res as f64,
                    j as f64 / res as f64,
                    (res - i - j) as f64 / res as f64,
                ];
                if let Some(v) = problem.objective_value(&w).finite() {
                    f_grid = f_grid.min(v);
                }
            }
        }
        SimplexSetup {
            problem,
            schedule,
            trace,
            f_grid,
        }
    })
}

/// Empirical lower estimate of the Lipschitz constant on a set: the
/// largest sampled gradient-difference ratio. Never exceeds the true
/// constant, so it is an admissible backtracking L1.
fn sampled_lipschitz_lower(problem: &CompositeProblem, set: &SetDescriptor) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let r = problem.geometry().norm_exponent();
    let dual = dual_exponent(r);
    let n = problem.geometry().dimension();
    let mut best: f64 = 1e-6;
    for _ in 0..500 {
        let x = teprog::sampling::sample_in(set, n, &mut rng).unwrap();
        let y = teprog::sampling::sample_in(set, n, &mut rng).unwrap();
        let d = lp_dist(&x, &y, r);
        if d < 1e-9 {
            continue;
        }
        let gx = problem.smooth_gradient(&x).unwrap();
        let gy = problem.smooth_gradient(&y).unwrap();
        best = best.max(lp_norm(&sub(&gx, &gy), dual) / d);
    }
    best
}

#[test]
fn criterion_1_theorem_bound_certification() {
    let setup = oracle();
    let cert = certify_trace(
        &setup.trace,
        &setup.problem,
        &setup.schedule,
        &setup.x_ref,
        setup.f_ref,
    )
    .unwrap();
    let failures: Vec<u64> = cert
        .entries
        .iter()
        .filter(|e| !e.satisfied)
        .map(|e| e.k)
        .collect();
    assert!(
        cert.all_satisfied,
        "theorem bound violated at k in {failures:?}"
    );
    assert!(!cert.entries.is_empty());

    // The bound must also certify the other acceptance instances.
    let i = ista_setup();
    let ista_long = run_lipschitz(
        &i.problem,
        &i.schedule,
        &SolverConfig::lipschitz(i.l, 20_000),
        &[0.0; 20],
    )
    .unwrap();
    let ista_cert = certify_trace(
        &i.trace,
        &i.problem,
        &i.schedule,
        &ista_long.last().x,
        ista_long.last().f.finite().unwrap(),
    )
    .unwrap();
    assert!(ista_cert.all_satisfied, "bound violated on the p=2 instance");

    let s = simplex_setup();
    let s_last = s.trace.last();
    let s_cert = certify_trace(
        &s.trace,
        &s.problem,
        &s.schedule,
        &s_last.x,
        s_last.f.finite().unwrap(),
    )
    .unwrap();
    assert!(s_cert.all_satisfied, "bound violated on the simplex instance");

    println!(
        "ACCEPTANCE 1 theorem-bound certification (k0 = {}, {} indices; +p2, +simplex): PASS",
        cert.k0,
        cert.entries.len()
    );
}

#[test]
fn criterion_2_ista_reduction() {
    let setup = ista_setup();
    let (a, c, lambda) = match (setup.problem.smooth(), setup.problem.nonsmooth()) {
        (SmoothTerm::LpResidual { a, c, .. }, NonsmoothTerm::ScaledL1 { lambda }) => {
            (a, c, *lambda)
        }
        _ => unreachable!(),
    };
    let reference = ista_iterates(a, c, lambda, 1.0 / setup.l, &[0.0; 20], 500);
    let mut max_dev: f64 = 0.0;
    for rec in &setup.trace.records {
        let re = &reference[(rec.k - 1) as usize];
        max_dev = max_dev.max(lp_dist(&rec.x, re, f64::INFINITY));
    }
    assert!(
        max_dev <= 1e-10,
        "TEPROG deviates from the soft-threshold baseline by {max_dev}"
    );
    println!("ACCEPTANCE 2 ISTA reduction (max deviation {max_dev:.3e}): PASS");
}

#[test]
fn criterion_3_prox_closed_form_against_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let l1_term = |lambda: f64| NonsmoothTerm::scaled_l1(lambda).unwrap();
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..1000 {
        let rho: f64 = rng.gen_range(0.5..5.0);
        let phi: f64 = rng.gen_range(-4.0..4.0);
        let xp: f64 = rng.gen_range(-rho..rho);
        let c: f64 = rng.gen_range(0.1..8.0);
        let lambda: f64 = rng.gen_range(0.0..3.0);
        let z = box_l1_prox(&[phi], &[xp], c, lambda, rho).unwrap()[0];

        // dense-grid oracle, 1e6 points
        let h = |t: f64| phi * t + 0.5 * c * (t - xp) * (t - xp) + lambda * t.abs();
        let pts = 1_000_000usize;
        let mut best_t = -rho;
        let mut best_v = f64::INFINITY;
        for i in 0..=pts {
            let t = -rho + 2.0 * rho * (i as f64) / (pts as f64);
            let v = h(t);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
        let gap = (z - best_t).abs();
        worst_gap = worst_gap.max(gap / rho);
        assert!(gap <= 1e-5 * rho, "grid mismatch: {z} vs {best_t} (rho {rho})");

        // stationarity residual of the closed form
        let d = c * (xp - z) - phi;
        let res = l1_term(lambda)
            .subdifferential_distance(&[z], &SetDescriptor::Box { radius: rho }, &[d], 2.0)
            .unwrap();
        worst_residual = worst_residual.max(res);
        assert!(res <= 1e-10, "residual {res} at closed-form output");
    }
    println!(
        "ACCEPTANCE 3 closed-form prox vs grid (worst gap {worst_gap:.2e}·rho, worst residual {worst_residual:.2e}): PASS"
    );
}

#[test]
fn criterion_4_simplex_entropy_benchmark() {
    let setup = simplex_setup();
    let last = setup.trace.last();
    let f_final = last.f.finite().unwrap();
    let gap = (f_final - setup.f_grid).abs();
    assert!(
        gap <= 2e-3,
        "final objective {f_final} vs grid minimum {} (gap {gap})",
        setup.f_grid
    );
    let min_coord = last.x.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min_coord > 0.0, "interiority violated: {:?}", last.x);
    println!(
        "ACCEPTANCE 4 simplex/entropy benchmark (gap {gap:.2e}, min coord {min_coord:.2e}): PASS"
    );
}

#[test]
fn criterion_5_per_step_inequalities_with_falsifiability() {
    // (a)-(e) on every acceptance trace.
    let cases: Vec<(&str, &CompositeProblem, &TelescopicSchedule, &RunTrace, Vec<f64>)> = {
        let o = oracle();
        let i = ista_setup();
        let s = simplex_setup();
        let ista_ref = {
            let long = run_lipschitz(
                &i.problem,
                &i.schedule,
                &SolverConfig::lipschitz(i.l, 20_000),
                &[0.0; 20],
            )
            .unwrap();
            long.last().x.clone()
        };
        let simplex_ref = s.trace.last().x.clone();
        vec![
            ("oracle-p3", &o.problem, &o.schedule, &o.trace, o.x_ref.clone()),
            ("ista-p2", &i.problem, &i.schedule, &i.trace, ista_ref),
            ("simplex", &s.problem, &s.schedule, &s.trace, simplex_ref),
        ]
    };
    for (name, problem, schedule, trace, x_ref) in &cases {
        let checks = step_inequality_suite(trace, problem, schedule).unwrap();
        assert!(checks.all_pass(), "{name}: step inequalities failed");
        let f1_finite = trace.records[0].f.is_finite();
        let k0 = schedule.find_k0(x_ref, f1_finite).unwrap();
        assert!(
            bregman_monotonicity(trace, problem, x_ref, k0).unwrap(),
            "{name}: Bregman monotonicity failed"
        );
    }

    // Falsifiability: each checker must reject a constructed negative.
    let o = oracle();
    let mut corrupt = o.trace.clone();
    corrupt.records[40].x[0] += 0.75;
    let bad = step_inequality_suite(&corrupt, &o.problem, &o.schedule).unwrap();
    assert!(!bad.all_pass(), "perturbed iterate must fail the suite");

    let mut decreasing_l = o.trace.clone();
    decreasing_l.records[60].l *= 0.25;
    let bad_l = step_inequality_suite(&decreasing_l, &o.problem, &o.schedule).unwrap();
    assert!(!bad_l.l_nondecreasing.iter().all(|(_, b)| *b));

    let mut inflated_f = o.trace.clone();
    inflated_f.records[30].f =
        ExtReal::Finite(inflated_f.records[30].f.finite().unwrap() + 5.0);
    let bad_f = step_inequality_suite(&inflated_f, &o.problem, &o.schedule).unwrap();
    assert!(
        !bad_f.certificate.iter().all(|(_, b)| *b)
            || !bad_f.sufficient_decrease.iter().all(|(_, b)| *b)
    );

    let mut escaped = o.trace.clone();
    escaped.records[10].x = vec![1e6; 20];
    let bad_feas = step_inequality_suite(&escaped, &o.problem, &o.schedule).unwrap();
    assert!(!bad_feas.feasibility.iter().all(|(_, b)| *b));

    // monotonicity is falsifiable with a non-minimizer reference on a
    // moving trace
    assert!(
        !bregman_monotonicity(&o.trace, &o.problem, &[0.0; 20], 1).unwrap(),
        "monotonicity must fail for x_ref = x1 on a moving trace"
    );
    println!("ACCEPTANCE 5 per-step inequality suite incl. falsifiability: PASS");
}

#[test]
fn criterion_6_backtracking_bounds() {
    // Growing schedule with admissible L1: L_k <= eta * bound(k) for all k.
    let o = oracle();
    let eta = 2.0;
    let l1 = sampled_lipschitz_lower(&o.problem, &o.schedule.set_at(1));
    let config = SolverConfig::backtracking(eta, l1, ORACLE_KMAX);
    let trace = run_backtracking(&o.problem, &o.schedule, &config, &[0.0; 20]).unwrap();
    for rec in &trace.records {
        let bound = o.schedule.lipschitz_bound_at(&o.problem, rec.k).unwrap();
        assert!(
            rec.l <= eta * bound * (1.0 + 1e-12),
            "L_{} = {} exceeds eta * bound = {}",
            rec.k,
            rec.l,
            eta * bound
        );
    }

    // Constant schedule with L1 above eta * bound: L never moves.
    let i = ista_setup();
    let big_l1 = 2.5 * i.l;
    let config = SolverConfig::backtracking(eta, big_l1, ORACLE_KMAX);
    let frozen = run_backtracking(&i.problem, &i.schedule, &config, &[0.0; 20]).unwrap();
    for rec in &frozen.records {
        assert_eq!(rec.l, big_l1, "L must stay at L1 for every k");
        assert_eq!(rec.backtracks, 0);
    }
    println!("ACCEPTANCE 6 backtracking step-size bounds: PASS");
}

#[test]
fn criterion_7_descent_and_fb_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let o = oracle();
    let i = ista_setup();
    let s = simplex_setup();
    let enclosing_box = |y: &[f64]| SetDescriptor::Box {
        radius: 2.0_f64.max(1.5 * lp_norm(y, f64::INFINITY)),
    };
    let y_oracle = o.trace.record_at(64).unwrap().x.clone();
    let y_ista = i.trace.record_at(100).unwrap().x.clone();
    let cases: Vec<(&str, &CompositeProblem, SetDescriptor, Vec<f64>)> = vec![
        ("oracle-p3", &o.problem, enclosing_box(&y_oracle), y_oracle.clone()),
        ("ista-p2", &i.problem, enclosing_box(&y_ista), y_ista.clone()),
        (
            "simplex",
            &s.problem,
            SetDescriptor::Simplex,
            s.trace.record_at(5).unwrap().x.clone(),
        ),
    ];
    for (name, problem, set, y) in cases {
        let l = lipschitz_bound_on(problem, &set).unwrap();
        assert!(
            check_descent_lemma(problem, &set, l, 1000, &mut rng).unwrap(),
            "{name}: descent lemma violated at the certified bound"
        );
        let mu = problem
            .geometry()
            .strong_convexity_parameter(&set)
            .unwrap()
            .mu;
        let sub = ProxSubproblem::new(problem, set.clone(), y.clone(), l, mu).unwrap();
        let z = sub.solve(1e-9, 200_000).unwrap();
        assert!(
            check_fb_inequality(problem, &set, l, mu, &y, &z, 1000, &mut rng).unwrap(),
            "{name}: forward-backward inequality violated"
        );
    }
    println!("ACCEPTANCE 7 descent lemma and FB inequality sampling (3 instances x 1000): PASS");
}

#[test]
fn criterion_8_gradient_and_convexity_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let o = oracle();
    let i = ista_setup();
    let s = simplex_setup();
    let cases: Vec<(&str, &CompositeProblem, SetDescriptor)> = vec![
        ("oracle-p3", &o.problem, SetDescriptor::Box { radius: 2.0 }),
        ("ista-p2", &i.problem, SetDescriptor::Box { radius: 2.0 }),
        ("simplex", &s.problem, SetDescriptor::Simplex),
    ];
    for (name, problem, set) in cases {
        let n = problem.geometry().dimension();
        // finite-difference gradient check
        for _ in 0..50 {
            let x = teprog::sampling::sample_in(&set, n, &mut rng).unwrap();
            let g = problem.smooth_gradient(&x).unwrap();
            for j in 0..n {
                let h = 1e-6 * (1.0 + lp_norm(&x, 2.0));
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[j] += h;
                lo[j] -= h;
                let fd = (problem.smooth_value(&hi).unwrap() - problem.smooth_value(&lo).unwrap())
                    / (2.0 * h);
                assert!(
                    (g[j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "{name}: gradient component {j} mismatches FD ({} vs {fd})",
                    g[j]
                );
            }
        }
        // midpoint convexity of f, g, b and F
        for _ in 0..1000 {
            let x = teprog::sampling::sample_in(&set, n, &mut rng).unwrap();
            let y = teprog::sampling::sample_in(&set, n, &mut rng).unwrap();
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let checks: [(&str, f64, f64, f64); 4] = [
                (
                    "f",
                    problem.smooth_value(&mid).unwrap(),
                    problem.smooth_value(&x).unwrap(),
                    problem.smooth_value(&y).unwrap(),
                ),
                (
                    "g",
                    problem.nonsmooth().value(&mid),
                    problem.nonsmooth().value(&x),
                    problem.nonsmooth().value(&y),
                ),
                (
                    "b",
                    problem.geometry().value(&mid).unwrap(),
                    problem.geometry().value(&x).unwrap(),
                    problem.geometry().value(&y).unwrap(),
                ),
                (
                    "F",
                    problem.objective_value(&mid).value_or_inf(),
                    problem.objective_value(&x).value_or_inf(),
                    problem.objective_value(&y).value_or_inf(),
                ),
            ];
            for (what, m, a, b) in checks {
                assert!(
                    m <= 0.5 * a + 0.5 * b + 1e-12 * (1.0 + a.abs() + b.abs()),
                    "{name}: midpoint convexity of {what} violated"
                );
            }
        }
    }
    println!("ACCEPTANCE 8 gradient FD and midpoint convexity checks: PASS");
}

#[test]
fn criterion_9_rate_diagnostic_advisory() {
    let o = oracle();
    match fit_empirical_rate(&o.trace, o.f_ref, (100, 10_000)) {
        Ok(slope) => {
            if slope <= -0.6 {
                println!("ACCEPTANCE 9 rate diagnostic (slope {slope:.3} <= -0.6): PASS");
            } else {
                println!(
                    "ACCEPTANCE 9 rate diagnostic (slope {slope:.3} > -0.6): WARN (advisory only)"
                );
            }
        }
        Err(e) => {
            // Gaps underflowed to the reference precision: the run
            // converged faster than the fit window.
            println!("ACCEPTANCE 9 rate diagnostic: WARN (degenerate window: {e})");
        }
    }
}
