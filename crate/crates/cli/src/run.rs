//! Command dispatch: problem resolution, solver runs, artifact emission, and
//! exit-code policy (0 success, 2 when a requested run did not converge or a
//! verify check failed; usage and IO errors surface as `Err` and exit 1).

use std::fs;
use std::path::PathBuf;

use dare_core::afpi::{afpi_solve, fpi_solve, op_f, CoefficientTriple};
use dare_core::analysis::{
    classify_solution, estimate_rates, estimate_rates_with_bound, rate_bound_from_solution,
};
use dare_core::matrix::loewner_geq;
use dare_core::problems::{example1, example2, random_psd_problem, scalar_problem, Example1Params};
use dare_core::stein::{stein_apply, stein_solve, SteinProblem, SteinSign};
use dare_core::{CMatrix, DareProblem, Error as CoreError, HermitianMatrix, SolveReport};
use dare_core::C64;

use crate::config::{Command, ProblemSource, RunConfig};
use crate::output::{write_json, write_residual_csv};
use crate::schema::{
    load_problem, save_problem, ClassificationSummary, ProblemSummary, RateSummary, RunSummary,
    SolutionFile, SummaryFile, VerifyCheck, VerifyFile,
};

struct ResolvedProblem {
    problem: DareProblem,
    summary: ProblemSummary,
}

fn resolve_problem(config: &RunConfig) -> anyhow::Result<ResolvedProblem> {
    let (problem, source, seed, example1_b) = match &config.source {
        ProblemSource::Example1 { epsilon, g, a, c, b } => {
            let params = Example1Params {
                epsilon: *epsilon,
                g: *g,
                a: *a,
                c: *c,
                b: b.map(|(re, im)| C64::new(re, im)),
                seed: config.seed,
            };
            let inst = example1(&params).map_err(|e| anyhow::anyhow!("example1: {e}"))?;
            (
                inst.problem,
                "example1".to_string(),
                Some(config.seed),
                Some([inst.b.re, inst.b.im]),
            )
        }
        ProblemSource::Example2 => (example2(), "example2".to_string(), None, None),
        ProblemSource::Scalar { a_re, a_im, g, h } => (
            scalar_problem(C64::new(*a_re, *a_im), *g, *h)
                .map_err(|e| anyhow::anyhow!("scalar problem: {e}"))?,
            "scalar".to_string(),
            None,
            None,
        ),
        ProblemSource::Random { n, cap } => (
            random_psd_problem(*n, config.seed, *cap)
                .map_err(|e| anyhow::anyhow!("random problem: {e}"))?,
            "random".to_string(),
            Some(config.seed),
            None,
        ),
        ProblemSource::File { path } => (
            load_problem(path)?,
            format!("file:{}", path.display()),
            None,
            None,
        ),
    };
    let summary = ProblemSummary {
        source,
        n: problem.dim(),
        seed,
        example1_b,
        g_psd: problem.is_g_psd(),
        h_psd: problem.is_h_psd(),
    };
    Ok(ResolvedProblem { problem, summary })
}

fn solve_one(p: &DareProblem, order: usize, config: &RunConfig) -> Result<SolveReport, CoreError> {
    let stop = config.stopping_rule(order)?;
    if order == 1 {
        fpi_solve(p, &stop)
    } else {
        afpi_solve(p, order, &stop)
    }
}

fn run_summary(
    p: &DareProblem,
    order: usize,
    outcome: &Result<SolveReport, CoreError>,
    timings: bool,
    elapsed_ms: f64,
) -> RunSummary {
    match outcome {
        Ok(report) => {
            let rate = if report.converged {
                rate_bound_from_solution(p, &report.solution)
                    .ok()
                    .and_then(|bound| {
                        estimate_rates_with_bound(&report.residual_history, None, bound).ok()
                    })
                    .or_else(|| estimate_rates(&report.residual_history, None).ok())
            } else {
                estimate_rates(&report.residual_history, None).ok()
            }
            .map(|r| RateSummary {
                r_linear_rate: r.r_linear_rate,
                r_superlinear_order: r.r_superlinear_order,
                predicted_bound: (r.predicted_bound > 0.0).then_some(r.predicted_bound),
                bound_satisfied: (r.predicted_bound > 0.0).then_some(r.bound_satisfied),
            });
            let classification = classify_solution(
                p,
                &report.solution,
                report.monotone_violations == 0 && p.is_psd_certified(),
            )
            .ok()
            .map(|c| ClassificationSummary {
                is_solution: c.is_solution,
                minimality_evidence: format!("{:?}", c.minimality_evidence),
                stabilizing: c.stabilizing.to_string(),
            });
            RunSummary {
                order,
                converged: report.converged,
                iterations: report.iterations,
                final_residual: report.residual_history.last().copied(),
                closed_loop_spectral_radius: Some(report.closed_loop_spectrum.spectral_radius),
                stability: Some(report.stability.to_string()),
                monotone_violations: Some(report.monotone_violations),
                rate,
                classification,
                elapsed_ms: timings.then_some(elapsed_ms),
                error: None,
            }
        }
        Err(e) => RunSummary {
            order,
            converged: false,
            iterations: 0,
            final_residual: None,
            closed_loop_spectral_radius: None,
            stability: None,
            monotone_violations: None,
            rate: None,
            classification: None,
            elapsed_ms: timings.then_some(elapsed_ms),
            error: Some(e.to_string()),
        },
    }
}

/// Executes the configured command. Returns the process exit code.
pub fn run(config: &RunConfig) -> anyhow::Result<i32> {
    if config.orders.is_empty() {
        anyhow::bail!("at least one order is required");
    }
    if let Some(&bad) = config.orders.iter().find(|o| **o == 0) {
        anyhow::bail!("orders must be at least 1, got {bad}");
    }
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        anyhow::anyhow!(
            "cannot create output directory {}: {e}",
            config.output_dir.display()
        )
    })?;

    let resolved = resolve_problem(config)?;
    match config.command {
        Command::Solve | Command::CompareOrders => solve_like(config, resolved),
        Command::Bench => bench(config, resolved),
        Command::Verify => verify(config, resolved),
    }
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.output_dir.join(name)
}

fn solve_like(config: &RunConfig, resolved: ResolvedProblem) -> anyhow::Result<i32> {
    let p = &resolved.problem;
    if config.formats.json {
        save_problem(&out_path(config, "problem.json"), p)?;
    }

    let mut runs = Vec::new();
    let mut all_converged = true;
    for &order in &config.orders {
        let started = std::time::Instant::now();
        let outcome = solve_one(p, order, config);
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

        match &outcome {
            Ok(report) => {
                println!(
                    "order {order}: converged={} iterations={} residual={:.3e}",
                    report.converged,
                    report.iterations,
                    report.residual_history.last().copied().unwrap_or(f64::NAN)
                );
                if config.formats.csv {
                    write_residual_csv(
                        &out_path(config, &format!("residuals_r{order}.csv")),
                        report,
                        config.timings,
                    )?;
                }
                if config.command == Command::Solve && config.formats.json {
                    write_json(
                        &out_path(config, &format!("solution_r{order}.json")),
                        &SolutionFile::new(order, report),
                    )?;
                }
                all_converged &= report.converged;
            }
            Err(e) => {
                println!("order {order}: solver error: {e}");
                all_converged = false;
            }
        }
        runs.push(run_summary(p, order, &outcome, config.timings, elapsed_ms));
    }

    if config.formats.json {
        let summary = SummaryFile {
            command: config.command.name().to_string(),
            problem: resolved.summary,
            tol: config.tol.unwrap_or(1e-12),
            runs,
        };
        summary
            .validate()
            .map_err(|e| anyhow::anyhow!("summary failed self-validation: {e}"))?;
        write_json(&out_path(config, "summary.json"), &summary)?;
    }
    Ok(if all_converged { 0 } else { 2 })
}

fn bench(config: &RunConfig, resolved: ResolvedProblem) -> anyhow::Result<i32> {
    let p = &resolved.problem;
    if config.formats.json {
        save_problem(&out_path(config, "problem.json"), p)?;
    }
    let reps = config.reps.max(1);

    let mut csv = String::from("order,converged,iterations,final_residual,elapsed_ms_mean\n");
    let mut runs = Vec::new();
    let mut all_converged = true;
    for &order in &config.orders {
        let mut last_outcome = None;
        let mut total_ms = 0.0;
        for _ in 0..reps {
            let started = std::time::Instant::now();
            let outcome = solve_one(p, order, config);
            total_ms += started.elapsed().as_secs_f64() * 1e3;
            last_outcome = Some(outcome);
        }
        let outcome = last_outcome.expect("reps >= 1");
        let mean_ms = total_ms / reps as f64;
        let shown_ms = if config.timings { mean_ms } else { 0.0 };
        match &outcome {
            Ok(report) => {
                let final_residual = report.residual_history.last().copied().unwrap_or(f64::NAN);
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    order, report.converged, report.iterations, final_residual, shown_ms
                ));
                println!(
                    "order {order}: converged={} iterations={} mean_ms={:.2}",
                    report.converged, report.iterations, mean_ms
                );
                all_converged &= report.converged;
            }
            Err(e) => {
                csv.push_str(&format!("{order},false,0,,{shown_ms}\n"));
                println!("order {order}: solver error: {e}");
                all_converged = false;
            }
        }
        runs.push(run_summary(p, order, &outcome, config.timings, mean_ms));
    }

    if config.formats.csv {
        fs::write(out_path(config, "bench.csv"), csv)?;
    }
    if config.formats.json {
        let summary = SummaryFile {
            command: config.command.name().to_string(),
            problem: resolved.summary,
            tol: config.tol.unwrap_or(1e-12),
            runs,
        };
        summary
            .validate()
            .map_err(|e| anyhow::anyhow!("summary failed self-validation: {e}"))?;
        write_json(&out_path(config, "summary.json"), &summary)?;
    }
    Ok(if all_converged { 0 } else { 2 })
}

struct Checker {
    checks: Vec<VerifyCheck>,
}

impl Checker {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(VerifyCheck {
            name: name.to_string(),
            status: if passed { "pass" } else { "fail" }.to_string(),
            detail,
        });
    }

    fn skip(&mut self, name: &str, detail: String) {
        self.checks.push(VerifyCheck {
            name: name.to_string(),
            status: "skipped".to_string(),
            detail,
        });
    }
}

fn verify(config: &RunConfig, resolved: ResolvedProblem) -> anyhow::Result<i32> {
    let p = &resolved.problem;
    let psd = p.is_psd_certified();
    let mut checker = Checker { checks: Vec::new() };

    // the two Riccati evaluation routes agree
    {
        let mut worst = 0.0f64;
        for seed in 0..5u64 {
            let x = dare_core::problems::random_psd_matrix(p.dim(), 1000 + seed);
            match (p.apply(&x), p.apply_woodbury(&x)) {
                (Ok(direct), Ok(wood)) => {
                    let dev =
                        (direct.matrix() - wood.matrix()).norm() / direct.norm_fro().max(1.0);
                    worst = worst.max(dev);
                }
                _ => worst = f64::INFINITY,
            }
        }
        checker.record(
            "riccati-two-route-agreement",
            worst <= 1e-12,
            format!("max relative deviation {worst:.3e} (tolerance 1e-12)"),
        );
    }

    // order preservation on seeded pairs
    if psd {
        let mut ok = true;
        for seed in 0..5u64 {
            let y = dare_core::problems::random_psd_matrix(p.dim(), 2000 + seed);
            let x = y
                .add(&dare_core::problems::random_psd_matrix(p.dim(), 3000 + seed))
                .unwrap();
            match (p.apply(&x), p.apply(&y)) {
                (Ok(rx), Ok(ry)) => ok &= loewner_geq(&rx, &ry, 1e-10).unwrap_or(false),
                _ => ok = false,
            }
        }
        checker.record(
            "riccati-order-preservation",
            ok,
            "R(X) >= R(Y) for 5 seeded pairs X >= Y".to_string(),
        );
    } else {
        checker.skip(
            "riccati-order-preservation",
            "coefficients are not certified positive semidefinite".to_string(),
        );
    }

    // semigroup identities
    {
        let x1 = CoefficientTriple::from_problem(p);
        let assoc = (|| -> dare_core::Result<f64> {
            let left = op_f(&op_f(&x1, &x1)?, &x1)?;
            let right = op_f(&x1, &op_f(&x1, &x1)?)?;
            let rel = |l: &CMatrix, r: &CMatrix| (l - r).norm() / r.norm().max(1.0);
            Ok(rel(left.a(), right.a())
                .max(rel(left.g().matrix(), right.g().matrix()))
                .max(rel(left.h().matrix(), right.h().matrix())))
        })();
        match assoc {
            Ok(dev) => checker.record(
                "semigroup-associativity",
                dev <= 1e-10,
                format!("relative deviation {dev:.3e} (tolerance 1e-10)"),
            ),
            Err(e) => checker.record("semigroup-associativity", false, e.to_string()),
        }

        match dare_core::afpi::discrete_flow_check(p, 2, 3) {
            Ok(dev) => checker.record(
                "discrete-flow-identity",
                dev <= 1e-10,
                format!("relative deviation {dev:.3e} for indices (2, 3)"),
            ),
            Err(e) => checker.record("discrete-flow-identity", false, e.to_string()),
        }
    }

    // doubling matches plain iteration powers
    {
        let check = (|| -> dare_core::Result<f64> {
            let mut plain = vec![p.h().clone()];
            for _ in 1..8 {
                let next = p.apply(plain.last().expect("nonempty"))?;
                plain.push(next);
            }
            let mut worst = 0.0f64;
            for k in 1..=3usize {
                let stop = dare_core::StoppingRule::new(f64::MIN_POSITIVE, k, usize::MAX / 2)?;
                let report = afpi_solve(p, 2, &stop)?;
                let target = &plain[(1 << k) - 1];
                let dev = (report.solution.matrix() - target.matrix()).norm()
                    / target.norm_fro().max(1.0);
                worst = worst.max(dev);
            }
            Ok(worst)
        })();
        match check {
            Ok(dev) => checker.record(
                "doubling-power-equivalence",
                dev <= 1e-10,
                format!("max relative deviation {dev:.3e} for k <= 3"),
            ),
            Err(e) => checker.record("doubling-power-equivalence", false, e.to_string()),
        }
    }

    // plain iteration diagnostics
    let fpi_outcome = solve_one(p, 1, config);
    match &fpi_outcome {
        Ok(report) => {
            if psd {
                checker.record(
                    "fpi-monotonicity",
                    report.monotone_violations == 0,
                    format!("{} violations in {} iterations", report.monotone_violations, report.iterations),
                );
            } else {
                checker.skip(
                    "fpi-monotonicity",
                    "monotonicity is only guaranteed for positive semidefinite data".to_string(),
                );
            }
            if report.converged {
                let t = p.closed_loop(&report.solution).unwrap();
                let pencil = p.pencil_check(&report.solution, &t).unwrap_or(f64::NAN);
                checker.record(
                    "pencil-residual-at-limit",
                    pencil <= 1e-8,
                    format!("pencil residual {pencil:.3e} (tolerance 1e-8)"),
                );
            } else {
                checker.skip(
                    "pencil-residual-at-limit",
                    "plain iteration did not converge".to_string(),
                );
            }
        }
        Err(e) => checker.record("fpi-run", false, format!("solver error: {e}")),
    }

    // certificate brackets the iterates from above
    if psd {
        match p.existence_certificate() {
            Ok(Some(x_c)) => {
                let cap = HermitianMatrix::scaled_identity(p.dim(), x_c);
                let mut ok = true;
                let mut x = p.h().clone();
                for _ in 0..10 {
                    ok &= loewner_geq(&cap, &x, 1e-9).unwrap_or(false);
                    match p.apply(&x) {
                        Ok(next) => x = next,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                checker.record(
                    "certificate-brackets-iterates",
                    ok,
                    format!("x_c = {x_c:.6} dominates the first 10 iterates"),
                );
            }
            Ok(None) => checker.skip(
                "certificate-brackets-iterates",
                "no existence certificate for this problem".to_string(),
            ),
            Err(e) => checker.record("certificate-brackets-iterates", false, e.to_string()),
        }
    } else {
        checker.skip(
            "certificate-brackets-iterates",
            "coefficients are not certified positive semidefinite".to_string(),
        );
    }

    // stein round trip on the problem's coefficient matrix when it is stable
    {
        let rho = dare_core::spectrum(p.a(), dare_core::DEFAULT_CLUSTER_TOL)
            .map(|s| s.spectral_radius)
            .unwrap_or(f64::NAN);
        if rho < 1.0 {
            let q = HermitianMatrix::identity(p.dim());
            let outcome = SteinProblem::new(p.a().clone(), q.clone(), SteinSign::Minus)
                .and_then(|sp| stein_solve(&sp))
                .and_then(|x| stein_apply(p.a(), &x));
            match outcome {
                Ok(recovered) => {
                    let dev =
                        (recovered.matrix() - q.matrix()).norm() / q.norm_fro().max(1.0);
                    checker.record(
                        "stein-solve-roundtrip",
                        dev <= 1e-10,
                        format!("relative recovery error {dev:.3e}"),
                    );
                }
                Err(e) => checker.record("stein-solve-roundtrip", false, e.to_string()),
            }
        } else {
            checker.skip(
                "stein-solve-roundtrip",
                format!("coefficient matrix has spectral radius {rho:.3} >= 1"),
            );
        }
    }

    let mut failed = 0;
    for check in &checker.checks {
        println!("{:7} {} ({})", check.status, check.name, check.detail);
        if check.status == "fail" {
            failed += 1;
        }
    }
    if config.formats.json {
        write_json(
            &out_path(config, "verify.json"),
            &VerifyFile {
                problem: resolved.summary,
                checks: checker.checks,
            },
        )?;
    }
    Ok(if failed == 0 { 0 } else { 2 })
}
