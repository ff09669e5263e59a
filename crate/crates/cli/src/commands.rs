//! Subcommand implementations. Each returns `Ok(())` for exit code 0 or a
//! `CliError` carrying the documented exit code: 1 certification failure,
//! 2 input/contract error, 3 solver failure, 4 consistency error.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use teprog::analysis::{certify_trace, step_inequality_suite};
use teprog::baseline::ista_iterates;
use teprog::geometry::{GeometryKind, MuProvenance};
use teprog::linalg::lp_dist;
use teprog::problems::{generate_instance, NonsmoothTerm, SmoothTerm};
use teprog::solver::{
    default_start, run_backtracking, run_lipschitz, RunTrace, SolverConfig, StepRule,
};
use teprog::telescope::{MuRule, ScheduleFamily};

use crate::schema::{
    self, write_json, LoadedProblem, MatrixSource, MetaSection, ProblemFile, ReferenceFile,
    RuleName, ScheduleSection, SolverSection, BLOB_THRESHOLD,
};
use crate::trace_io::{read_trace, write_trace, TraceHeader, TraceRow, TRACE_FORMAT};
use crate::CliError;

pub struct SolveArgs {
    pub problem: PathBuf,
    pub rule: Option<RuleName>,
    pub eta: Option<f64>,
    pub l1: Option<f64>,
    pub kmax: Option<u64>,
    pub out: PathBuf,
    pub ref_out: Option<PathBuf>,
}

/// Resolve the effective solver settings (file section plus CLI overrides)
/// into a core config and a starting point.
fn resolve_config(
    loaded: &LoadedProblem,
    rule: Option<RuleName>,
    eta: Option<f64>,
    l1: Option<f64>,
    kmax: Option<u64>,
) -> Result<(SolverConfig, Vec<f64>), CliError> {
    let section: &SolverSection = &loaded.file.solver;
    let rule = rule.unwrap_or(section.rule);
    let eta = eta.or(section.eta).unwrap_or(2.0);
    let k_max = kmax.unwrap_or(section.k_max);
    let l1 = match l1.or(section.l1) {
        Some(v) => v,
        None => match loaded.schedule.lipschitz_bound_at(&loaded.problem, 1) {
            Ok(bound) => bound,
            // Backtracking on a constant schedule accepts any positive L1
            // even when no bound formula exists.
            Err(_) if rule == RuleName::Backtracking && !loaded.schedule.is_growing() => 1.0,
            Err(e) => return Err(CliError::from_core_input(e)),
        },
    };
    let mut config = match rule {
        RuleName::Lipschitz => SolverConfig::lipschitz(l1, k_max),
        RuleName::Backtracking => SolverConfig::backtracking(eta, l1, k_max),
    };
    config.inner_tol = section.inner_tol;
    config.stop_gap = section.stop_gap;
    let x1 = match &section.x1 {
        Some(x) => x.clone(),
        None => default_start(&loaded.problem, &loaded.schedule)
            .map_err(CliError::from_core_input)?,
    };
    Ok((config, x1))
}

fn run_with_config(
    loaded: &LoadedProblem,
    config: &SolverConfig,
    x1: &[f64],
) -> Result<RunTrace, CliError> {
    match config.rule {
        StepRule::Lipschitz => run_lipschitz(&loaded.problem, &loaded.schedule, config, x1),
        StepRule::Backtracking { .. } => {
            run_backtracking(&loaded.problem, &loaded.schedule, config, x1)
        }
    }
    .map_err(CliError::from_core_solver)
}

fn header_for(loaded: &LoadedProblem, config: &SolverConfig, x1: &[f64]) -> TraceHeader {
    let (rule, eta) = match config.rule {
        StepRule::Lipschitz => ("lipschitz".to_string(), None),
        StepRule::Backtracking { eta } => ("backtracking".to_string(), Some(eta)),
    };
    let mu_provenance = match loaded.schedule.mu_rule() {
        MuRule::Constant { provenance, .. } | MuRule::BetaOverRadius { provenance, .. } => {
            match provenance {
                MuProvenance::Analytic => "analytic".to_string(),
                MuProvenance::Sampled { pairs, safety } => {
                    format!("sampled(pairs={pairs},safety={safety})")
                }
            }
        }
    };
    let geometry = match loaded.problem.geometry().kind() {
        GeometryKind::HalfSquaredEuclidean => "half_squared_euclidean",
        GeometryKind::NegativeEntropy => "negative_entropy",
    };
    let rng = match loaded.file.meta.as_ref().and_then(|m| m.seed) {
        Some(seed) => format!("chacha8:instance-seed={seed}"),
        None => "chacha8:internal".to_string(),
    };
    TraceHeader {
        format: TRACE_FORMAT.to_string(),
        instance_hash: loaded.hash.clone(),
        schedule: format!("{:?}", loaded.schedule.family()),
        geometry: geometry.to_string(),
        norm_exponent: loaded.problem.geometry().norm_exponent(),
        mu_provenance,
        rng,
        rule,
        eta,
        l1: config.l1,
        k_max: config.k_max,
        inner_tol: config.inner_tol,
        x1: x1.to_vec(),
        started_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

pub fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let loaded = schema::load_problem(&args.problem)?;
    let (config, x1) = resolve_config(&loaded, args.rule, args.eta, args.l1, args.kmax)?;
    let trace = run_with_config(&loaded, &config, &x1)?;
    let header = header_for(&loaded, &config, &x1);
    write_trace(&args.out, &header, &trace)?;
    if let Some(ref_path) = &args.ref_out {
        let last = trace.last();
        let f_ref = last.f.finite().ok_or_else(|| {
            CliError::solver("final objective not finite; cannot emit reference".into())
        })?;
        write_json(
            ref_path,
            &ReferenceFile {
                instance_hash: loaded.hash.clone(),
                x_ref: last.x.clone(),
                f_ref,
            },
        )?;
    }
    println!(
        "solved {} iterations, final F = {}",
        trace.last().k,
        trace.last().f
    );
    Ok(())
}

pub struct CertifyArgs {
    pub trace: PathBuf,
    pub problem: PathBuf,
    pub reference: PathBuf,
    pub report: PathBuf,
}

pub fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    let loaded = schema::load_problem(&args.problem)?;
    let stored = read_trace(&args.trace)?;
    let reference = schema::read_reference(&args.reference)?;

    if stored.header.instance_hash != loaded.hash {
        return Err(CliError::consistency(format!(
            "trace was produced for instance {}, problem file hashes to {}",
            stored.header.instance_hash, loaded.hash
        )));
    }
    if reference.instance_hash != loaded.hash {
        return Err(CliError::consistency(format!(
            "reference belongs to instance {}, problem file hashes to {}",
            reference.instance_hash, loaded.hash
        )));
    }

    // Re-run deterministically from the recorded configuration, then hold
    // the stored rows against the recomputed records.
    let rule = match stored.header.rule.as_str() {
        "lipschitz" => RuleName::Lipschitz,
        "backtracking" => RuleName::Backtracking,
        other => return Err(CliError::input(format!("unknown rule {other} in trace"))),
    };
    let (config, _) = resolve_config(
        &loaded,
        Some(rule),
        stored.header.eta,
        Some(stored.header.l1),
        Some(stored.header.k_max),
    )?;
    let mut config = config;
    config.inner_tol = stored.header.inner_tol;
    let x1 = stored.header.x1.clone();
    let rerun = run_with_config(&loaded, &config, &x1)?;

    if stored.rows.len() != rerun.records.len() {
        return Err(CliError::certification(format!(
            "trace has {} rows, deterministic re-run produced {}",
            stored.rows.len(),
            rerun.records.len()
        )));
    }
    for (row, rec) in stored.rows.iter().zip(&rerun.records) {
        if let Some(k) = row_mismatch(row, rec) {
            return Err(CliError::certification(format!(
                "trace row k = {k} disagrees with the deterministic re-run"
            )));
        }
    }

    // Checks over the recomputed (iterate-bearing) trace.
    let cert = certify_trace(
        &rerun,
        &loaded.problem,
        &loaded.schedule,
        &reference.x_ref,
        reference.f_ref,
    )
    .map_err(|e| CliError::certification(format!("certification aborted: {e}")))?;
    let steps = step_inequality_suite(&rerun, &loaded.problem, &loaded.schedule)
        .map_err(|e| CliError::certification(format!("step checks aborted: {e}")))?;

    // Per-k Bregman monotonicity toward the reference, from k0 on.
    let geom = loaded.problem.geometry();
    let mut monotone: Vec<(u64, bool)> = Vec::new();
    let mut prev_b: Option<f64> = None;
    for rec in rerun.records.iter().filter(|r| r.k >= cert.k0) {
        let b = geom
            .bregman_value(&reference.x_ref, &rec.x)
            .map_err(|e| CliError::certification(format!("monotonicity aborted: {e}")))?;
        if let Some(p) = prev_b {
            monotone.push((rec.k, b <= p + 1e-9));
        }
        prev_b = Some(b);
    }

    let report = render_report(&loaded.hash, &cert, &steps, &monotone);
    std::fs::write(&args.report, &report)
        .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;

    let mut failures: Vec<String> = Vec::new();
    if !cert.all_satisfied {
        let k = cert.entries.iter().find(|e| !e.satisfied).map(|e| e.k + 1);
        failures.push(format!("theorem bound (first at k = {k:?})"));
    }
    for (name, flags) in [
        ("certificate", &steps.certificate),
        ("sufficient decrease", &steps.sufficient_decrease),
        ("L monotone", &steps.l_nondecreasing),
        ("feasibility", &steps.feasibility),
    ] {
        if let Some((k, _)) = flags.iter().find(|(_, ok)| !ok) {
            failures.push(format!("{name} (first at k = {k})"));
        }
    }
    if let Some((k, _)) = monotone.iter().find(|(_, ok)| !ok) {
        failures.push(format!("Bregman monotonicity (first at k = {k})"));
    }
    if failures.is_empty() {
        println!("certification PASS ({} indices)", rerun.records.len());
        Ok(())
    } else {
        Err(CliError::certification(format!(
            "failed checks: {}",
            failures.join("; ")
        )))
    }
}

fn row_mismatch(row: &TraceRow, rec: &teprog::solver::TraceRecord) -> Option<u64> {
    let close = |a: f64, b: f64| {
        (a == b) || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
    };
    let ok = row.k == rec.k
        && close(row.f, rec.f.value_or_inf())
        && close(row.l, rec.l)
        && close(row.mu, rec.mu)
        && row.i_k == rec.backtracks
        && close(row.step_norm, rec.step_norm);
    if ok {
        None
    } else {
        Some(row.k)
    }
}

fn render_report(
    hash: &str,
    cert: &teprog::analysis::CertifiedBound,
    steps: &teprog::analysis::StepChecks,
    monotone: &[(u64, bool)],
) -> String {
    let mut out = String::new();
    out.push_str("# teprog certification report\n");
    out.push_str(&format!("# instance: {hash}\n"));
    out.push_str(&format!(
        "# k0: {}, B0: {}, f_ref: {}\n",
        cert.k0, cert.b0, cert.f_ref
    ));
    out.push_str("k,theorem_bound,monotone,decrease,certificate,feasible,l_monotone\n");
    let lookup = |flags: &[(u64, bool)], k: u64| -> &'static str {
        match flags.iter().find(|(kk, _)| *kk == k) {
            Some((_, true)) => "pass",
            Some((_, false)) => "fail",
            None => "n/a",
        }
    };
    let bound_flags: Vec<(u64, bool)> =
        cert.entries.iter().map(|e| (e.k + 1, e.satisfied)).collect();
    let mut ks: Vec<u64> = steps.certificate.iter().map(|(k, _)| *k).collect();
    ks.sort_unstable();
    for k in ks {
        out.push_str(&format!(
            "{k},{},{},{},{},{},{}\n",
            lookup(&bound_flags, k),
            lookup(monotone, k),
            lookup(&steps.sufficient_decrease, k),
            lookup(&steps.certificate, k),
            lookup(&steps.feasibility, k),
            lookup(&steps.l_nondecreasing, k),
        ));
    }
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    out.push_str(&format!(
        "# summary: theorem_bound={} monotone={} decrease={} certificate={} feasible={} l_monotone={}\n",
        verdict(cert.all_satisfied),
        verdict(monotone.iter().all(|(_, b)| *b)),
        verdict(steps.sufficient_decrease.iter().all(|(_, b)| *b)),
        verdict(steps.certificate.iter().all(|(_, b)| *b)),
        verdict(steps.feasibility.iter().all(|(_, b)| *b)),
        verdict(steps.l_nondecreasing.iter().all(|(_, b)| *b)),
    ));
    out
}

pub struct CompareArgs {
    pub problem: PathBuf,
    pub kmax: Option<u64>,
    pub out: PathBuf,
}

pub fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let loaded = schema::load_problem(&args.problem)?;
    let p = match loaded.problem.smooth() {
        SmoothTerm::LpResidual { p, .. } => *p,
        _ => {
            return Err(CliError::input(
                "compare needs an lp residual smooth term".into(),
            ))
        }
    };
    if p != 2.0 {
        return Err(CliError::input(format!(
            "compare requires p = 2 (classical proximal gradient), problem has p = {p}"
        )));
    }
    if loaded.problem.geometry().kind() != GeometryKind::HalfSquaredEuclidean {
        return Err(CliError::input("compare requires the quadratic geometry".into()));
    }
    if !matches!(loaded.schedule.family(), ScheduleFamily::Constant) {
        return Err(CliError::input("compare requires a constant schedule".into()));
    }

    let k_max = args.kmax.unwrap_or(loaded.file.solver.k_max);
    if k_max == 0 {
        std::fs::write(&args.out, "k,f_teprog,f_baseline\n")
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.out.display())))?;
        println!("empty comparison (0 iterations requested)");
        return Ok(());
    }

    let l = loaded
        .schedule
        .lipschitz_bound_at(&loaded.problem, 1)
        .map_err(CliError::from_core_input)?;
    let config = SolverConfig::lipschitz(l, k_max);
    let x1 = default_start(&loaded.problem, &loaded.schedule).map_err(CliError::from_core_input)?;
    let (a, c, lambda) = match (loaded.problem.smooth(), loaded.problem.nonsmooth()) {
        (SmoothTerm::LpResidual { a, c, .. }, NonsmoothTerm::ScaledL1 { lambda }) => {
            (a.clone(), c.clone(), *lambda)
        }
        _ => {
            return Err(CliError::input(
                "compare requires the scaled l1 nonsmooth term".into(),
            ))
        }
    };

    // The two solves share only immutable data; run them on two threads
    // when the thread budget allows.
    let threads = thread_budget();
    let (trace, reference) = if threads >= 2 {
        std::thread::scope(|scope| {
            let t = scope.spawn(|| run_with_config(&loaded, &config, &x1));
            let b = scope.spawn(|| ista_iterates(&a, &c, lambda, 1.0 / l, &x1, k_max as usize));
            (t.join().expect("solver thread panicked"), b.join().expect("baseline thread panicked"))
        })
    } else {
        (
            run_with_config(&loaded, &config, &x1),
            ista_iterates(&a, &c, lambda, 1.0 / l, &x1, k_max as usize),
        )
    };
    let trace = trace?;

    let mut out = String::from("k,f_teprog,f_baseline\n");
    let mut max_dev: f64 = 0.0;
    for rec in &trace.records {
        let xb = &reference[(rec.k - 1) as usize];
        max_dev = max_dev.max(lp_dist(&rec.x, xb, f64::INFINITY));
        let fb = loaded.problem.objective_value(xb);
        out.push_str(&format!("{},{},{}\n", rec.k, rec.f, fb));
    }
    std::fs::write(&args.out, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.out.display())))?;
    println!("max iterate deviation: {max_dev:e}");
    Ok(())
}

/// Parallelism cap: TEPROG_THREADS when set, machine parallelism otherwise.
fn thread_budget() -> usize {
    match std::env::var("TEPROG_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

pub struct GenArgs {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub lambda: f64,
    pub density: f64,
    pub sigma: Option<f64>,
    pub schedule: ScheduleSection,
    pub kmax: u64,
    pub out: PathBuf,
}

pub fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let inst = generate_instance(args.seed, args.n, args.m, args.p, args.lambda, args.density)
        .map_err(CliError::from_core_input)?;
    let (a, c) = match inst.problem.smooth() {
        SmoothTerm::LpResidual { a, c, .. } => (a, c),
        _ => unreachable!(),
    };
    let matrix = if a.rows() * a.cols() >= BLOB_THRESHOLD {
        let blob_path = args.out.with_extension("bin");
        schema::write_matrix_blob(&blob_path, a)?;
        let name = blob_path
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::input("bad blob path".into()))?;
        MatrixSource::Blob(schema::BlobSpec {
            path: name.to_string(),
        })
    } else {
        MatrixSource::Rows((0..a.rows()).map(|i| a.row(i).to_vec()).collect())
    };
    let schedule = match (&args.schedule, args.sigma) {
        (ScheduleSection::PowerBox(_), sigma) => {
            ScheduleSection::PowerBox(schema::PowerBoxSpec {
                sigma: sigma.unwrap_or_else(|| teprog::telescope::default_sigma(args.p)),
            })
        }
        (other, _) => other.clone(),
    };
    let file = ProblemFile {
        geometry: schema::GeometrySection::HalfSquaredEuclidean(schema::EuclideanSpec {
            dimension: args.n,
            norm_exponent: 2.0,
        }),
        smooth: schema::SmoothSection::LpResidual(schema::LpResidualSpec {
            p: args.p,
            matrix,
            offset: c.clone(),
        }),
        nonsmooth: schema::NonsmoothSection::ScaledL1(schema::ScaledL1Spec {
            lambda: args.lambda,
        }),
        constraint: schema::ConstraintSection::WholeSpace,
        schedule,
        solver: SolverSection {
            rule: RuleName::Lipschitz,
            eta: None,
            l1: None,
            k_max: args.kmax,
            inner_tol: 1e-8,
            stop_gap: None,
            x1: None,
        },
        meta: Some(MetaSection {
            seed: Some(inst.seed),
            density: Some(inst.density),
            noise_scale: Some(inst.noise_scale),
        }),
    };
    write_json(&args.out, &file)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
