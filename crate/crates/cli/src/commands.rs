//! Subcommand implementations.

use std::time::Instant;

use anyhow::Result;
use clap::ValueEnum;
use serde_json::json;
use trajopt::feedback::{monte_carlo_stabilize, neighboring_gains, perturbation_study};
use trajopt::problems::{BenchmarkName, BenchmarkSpec};
use trajopt::solvers::{
    backward_pass_with, solve, AdaptiveState, BackwardKind, Method, QuuInversion, Regularization, SolveReport, SolveStatus,
    SolverConfig,
};
use trajopt::{linearize, rollout, Problem, Trajectory};

use crate::args::{FeedbackArgs, PerturbationArgs, SolveArgs, SuiteArgs, SuiteName};
use crate::config::{self, RunConfig};
use crate::output::{resolve_out_dir, Cell, RunDir, Table};
use crate::{Outcome, UsageError};

const SCHEMA_VERSION: u32 = 1;

fn iterations_table(report: &SolveReport) -> Table {
    let mut t = Table::new(
        SCHEMA_VERSION,
        [
            "iter",
            "J",
            "alpha",
            "dJ_pred",
            "dJ_actual",
            "J_plus_dJ_pred",
            "min_quu_eig",
            "reg_shift",
            "backtracks",
        ],
    );
    t.push(vec![
        0usize.into(),
        report.initial_cost.into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    let mut previous = report.initial_cost;
    for r in &report.iterations {
        t.push(vec![
            r.iter.into(),
            r.cost.into(),
            r.alpha.into(),
            r.predicted.into(),
            r.actual.into(),
            (previous + r.predicted).into(),
            r.quu_min_eig.into(),
            r.max_shift.into(),
            r.backtracks.into(),
        ]);
        previous = r.cost;
    }
    t
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let n = traj.states[0].len();
    let m = traj.controls.first().map_or(0, |u| u.len());
    let header = std::iter::once("t".to_string())
        .chain((0..n).map(|i| format!("x{i}")))
        .chain((0..m).map(|i| format!("u{i}")));
    let mut t = Table::new(SCHEMA_VERSION, header);
    for (k, x) in traj.states.iter().enumerate() {
        let mut row: Vec<Cell> = vec![k.into()];
        row.extend(x.iter().map(|v| Cell::Num(*v)));
        match traj.controls.get(k) {
            Some(u) => row.extend(u.iter().map(|v| Cell::Num(*v))),
            None => row.extend((0..m).map(|_| Cell::Empty)),
        }
        t.push(row);
    }
    t
}

/// Smallest `Q_uu` eigenvalue per step of an unregularized first backward
/// pass of each kind at `nominal`.
fn quu_profile_table(problem: &Problem, nominal: &Trajectory) -> Result<Table> {
    let kinds = [BackwardKind::Ilqr, BackwardKind::Ddp, BackwardKind::Sn];
    let mut t = Table::new(SCHEMA_VERSION, ["t", "ilqr", "ddp", "sn"]);
    let model = linearize(problem, nominal)?;
    let profiles: Vec<Option<Vec<f64>>> = kinds
        .iter()
        .map(|&kind| {
            backward_pass_with(&model, kind, &Regularization::None, 0.0, QuuInversion::AllowIndefinite)
                .ok()
                .map(|g| g.quu_min_eig)
        })
        .collect();
    for step in 0..problem.horizon() {
        let mut row: Vec<Cell> = vec![step.into()];
        row.extend(profiles.iter().map(|p| p.as_ref().map(|v| v[step]).into()));
        t.push(row);
    }
    Ok(t)
}

fn status_outcome(status: SolveStatus) -> Outcome {
    match status {
        SolveStatus::Converged | SolveStatus::MaxIters => Outcome::Success,
        SolveStatus::Stalled | SolveStatus::Diverged => Outcome::Failure,
    }
}

fn solver_base(file: &RunConfig) -> SolverConfig {
    file.solver.clone().unwrap_or_default()
}

pub fn run_solve(args: &SolveArgs) -> Result<Outcome> {
    let file = config::load(args.common.config.as_deref())?;
    let spec = config::resolve_spec(&file, args.problem)?;
    let mut base = solver_base(&file);
    if let Some(m) = args.method {
        base.method = m;
    }
    let solver = config::apply_flags(base, &args.solver, args.common.seed)?;
    let problem = config::build(&spec)?;
    let init = config::initial_controls(&spec, &problem, args.start_point, &args.common)?;

    let run = format!("solve-{}-{}", spec.name, solver.method);
    let mut dir = RunDir::create(resolve_out_dir(args.common.out.as_deref(), &run))?;
    let config_json = json!({
        "problem": spec,
        "solver": solver,
        "start_point": args.start_point,
        "u_scale": args.common.u_scale.unwrap_or(1.0),
    });

    let outcome = match solve(&problem, &init, &solver) {
        Ok(report) => {
            dir.write_table("iterations.csv", &iterations_table(&report))?;
            let nominal = rollout(&problem, &init)?;
            dir.write_table("quu_profile.csv", &quu_profile_table(&problem, &nominal)?)?;
            dir.write_table("trajectory.csv", &trajectory_table(&report.trajectory))?;
            println!(
                "{} {}: {} after {} iterations, J = {}",
                spec.name,
                solver.method,
                report.status.as_str(),
                report.iteration_count(),
                report.final_cost()
            );
            if let Some(e) = &report.failure {
                eprintln!("solver stopped: {e}");
            }
            let outcome = status_outcome(report.status);
            let path = dir.finish("solve", report.status.as_str(), Some(solver.seed), config_json)?;
            println!("wrote {}", path.display());
            outcome
        }
        Err(e) => {
            eprintln!("solve failed: {e}");
            dir.finish("solve", "error", Some(solver.seed), config_json)?;
            Outcome::Failure
        }
    };
    Ok(outcome)
}

fn default_regularization(name: BenchmarkName, method: Method) -> Regularization {
    match (name, method) {
        (BenchmarkName::Tp4, Method::Ilqr) => Regularization::lm_shift(),
        (_, Method::Ilqr) => Regularization::None,
        _ => Regularization::adaptive_shift(),
    }
}

fn suite_specs(suite: SuiteName) -> Vec<(&'static str, BenchmarkSpec)> {
    let small = ("tp3-small", BenchmarkSpec::tp3(100, 50, 20, 1.0 / 20.0));
    let large = ("tp3-large", BenchmarkSpec::tp3(100, 50, 100, 1.0 / 200.0));
    let tp4 = ("tp4", BenchmarkSpec::tp4(100, 10, 100));
    match suite {
        SuiteName::Tp3Small => vec![small],
        SuiteName::Tp3Large => vec![large],
        SuiteName::Tp4 => vec![tp4],
        SuiteName::All => vec![small, large, tp4],
    }
}

pub fn run_suite(args: &SuiteArgs) -> Result<Outcome> {
    if args.methods.is_empty() {
        return Err(UsageError("--methods needs at least one method".into()).into());
    }
    let file = config::load(args.common.config.as_deref())?;
    let mut table = Table::new(
        SCHEMA_VERSION,
        [
            "suite",
            "problem",
            "start_point",
            "method",
            "regularization",
            "status",
            "iterations",
            "final_J",
            "wall_time_s",
        ],
    );
    let mut members = Vec::new();
    for (label, spec) in suite_specs(args.suite) {
        let problem = config::build(&spec)?;
        for &method in &args.methods {
            let mut base = solver_base(&file);
            base.method = method;
            if args.solver.reg_scheme.is_none() {
                base.regularization = default_regularization(spec.name, method);
            }
            let solver = config::apply_flags(base, &args.solver, args.common.seed)?;
            for point in 1..=5u8 {
                let init = config::initial_controls(&spec, &problem, Some(point), &args.common)?;
                let clock = Instant::now();
                let result = solve(&problem, &init, &solver);
                let elapsed = clock.elapsed().as_secs_f64();
                let (status, iterations, cost) = match &result {
                    Ok(r) => (r.status.as_str(), Cell::from(r.iteration_count()), Cell::from(r.final_cost())),
                    Err(e) => {
                        eprintln!("{label} point {point} {method}: {e}");
                        ("error", Cell::Empty, Cell::Empty)
                    }
                };
                println!("{label} point {point} {method}: {status}");
                table.push(vec![
                    label.into(),
                    spec.name.as_str().into(),
                    Cell::Int(point as i64),
                    method.as_str().into(),
                    solver.regularization.name().into(),
                    status.into(),
                    iterations,
                    cost,
                    elapsed.into(),
                ]);
            }
            members.push(json!({ "suite": label, "problem": spec, "solver": solver }));
        }
    }
    let run = format!("suite-{}", suite_label(args.suite));
    let mut dir = RunDir::create(resolve_out_dir(args.common.out.as_deref(), &run))?;
    dir.write_table("suite.csv", &table)?;
    let path = dir.finish("suite", "completed", args.common.seed, json!({ "members": members }))?;
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

fn suite_label(suite: SuiteName) -> String {
    suite
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

/// Tight tolerances used to drive a solution to stationarity before
/// extracting feedback.
fn polish_config(base: &SolverConfig) -> SolverConfig {
    SolverConfig {
        method: Method::Ddp,
        cost_tol: 1e-15,
        reduction_tol: 1e-20,
        allow_indefinite: false,
        regularization: Regularization::adaptive_shift(),
        ..base.clone()
    }
}

pub fn run_feedback(args: &FeedbackArgs) -> Result<Outcome> {
    if args.trials == 0 || args.envelope_trials == 0 {
        return Err(UsageError("trial counts must be positive".into()).into());
    }
    if let Some(s) = args.sigmas.iter().chain([&args.envelope_sigma]).find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(UsageError(format!("noise level {s} must be finite and non-negative")).into());
    }
    let file = config::load(args.common.config.as_deref())?;
    let spec = config::resolve_spec(&file, Some(args.problem))?;
    let mut base = solver_base(&file);
    base.method = args.method;
    let solver = config::apply_flags(base, &args.solver, args.common.seed)?;
    let problem = config::build(&spec)?;
    let init = config::initial_controls(&spec, &problem, None, &args.common)?;

    let run = format!("feedback-{}", spec.name);
    let mut dir = RunDir::create(resolve_out_dir(args.common.out.as_deref(), &run))?;
    let polish = polish_config(&solver);
    let config_json = json!({
        "problem": spec,
        "solver": solver,
        "polish": polish,
        "u_scale": args.common.u_scale.unwrap_or(1.0),
        "sigmas": args.sigmas,
        "trials": args.trials,
        "envelope_sigma": args.envelope_sigma,
        "envelope_trials": args.envelope_trials,
        "noise_seed": args.noise_seed,
    });

    let first = solve(&problem, &init, &solver)?;
    let polished = solve(&problem, &first.trajectory.controls, &polish)?;
    println!(
        "{} {}: J = {}; polished {} after {} iterations, J = {}",
        spec.name,
        solver.method,
        first.final_cost(),
        polished.status.as_str(),
        polished.iteration_count(),
        polished.final_cost()
    );
    dir.write_table("trajectory.csv", &trajectory_table(&polished.trajectory))?;
    let policy = match neighboring_gains(&problem, &polished.trajectory) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("feedback extraction failed: {e}");
            dir.finish("feedback", "not_stationary", Some(args.noise_seed), config_json)?;
            return Ok(Outcome::Failure);
        }
    };

    let mut rates = Table::new(
        SCHEMA_VERSION,
        ["sigma", "trials", "successes", "diverged", "success_rate"],
    );
    for &sigma in &args.sigmas {
        let r = monte_carlo_stabilize(&problem, &policy, sigma, args.trials, args.noise_seed)?;
        println!("sigma {sigma}: success rate {}", r.success_rate);
        rates.push(vec![
            sigma.into(),
            r.trials.into(),
            r.successes.into(),
            r.diverged.into(),
            r.success_rate.into(),
        ]);
    }
    dir.write_table("success_vs_sigma.csv", &rates)?;

    let study = monte_carlo_stabilize(
        &problem,
        &policy,
        args.envelope_sigma,
        args.envelope_trials,
        args.noise_seed,
    )?;
    let lower = study.lower_envelope();
    let upper = study.upper_envelope();
    let mut envelopes = Table::new(
        SCHEMA_VERSION,
        ["t", "coordinate", "mean", "std", "lower", "upper", "nominal"],
    );
    for (t, mean) in study.mean.iter().enumerate() {
        for i in 0..mean.len() {
            envelopes.push(vec![
                t.into(),
                i.into(),
                mean[i].into(),
                study.std_dev[t][i].into(),
                lower[t][i].into(),
                upper[t][i].into(),
                policy.nominal.states[t][i].into(),
            ]);
        }
    }
    dir.write_table("envelopes.csv", &envelopes)?;
    let path = dir.finish("feedback", "completed", Some(args.noise_seed), config_json)?;
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

fn backward_kind(method: Method) -> BackwardKind {
    match method {
        Method::Ilqr => BackwardKind::Ilqr,
        Method::Ddp | Method::Hybrid => BackwardKind::Ddp,
        Method::Sn | Method::Mixed => BackwardKind::Sn,
    }
}

pub fn run_perturbation(args: &PerturbationArgs) -> Result<Outcome> {
    if args.alphas.is_empty() {
        return Err(UsageError("--alphas needs at least one value".into()).into());
    }
    if let Some(a) = args.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(UsageError(format!("step length {a} is outside (0, 1]")).into());
    }
    let file = config::load(args.common.config.as_deref())?;
    let spec = config::resolve_spec(&file, Some(args.problem))?;
    let mut base = solver_base(&file);
    base.method = args.method;
    let solver = config::apply_flags(base, &args.solver, args.common.seed)?;
    let problem = config::build(&spec)?;
    let init = config::initial_controls(&spec, &problem, None, &args.common)?;

    let run = format!("perturbation-{}", spec.name);
    let mut dir = RunDir::create(resolve_out_dir(args.common.out.as_deref(), &run))?;
    let config_json = json!({
        "problem": spec,
        "solver": solver,
        "u_scale": args.common.u_scale.unwrap_or(1.0),
        "alphas": args.alphas,
    });

    let nominal = rollout(&problem, &init)?;
    let model = linearize(&problem, &nominal)?;
    let inversion = if solver.allow_indefinite || solver.regularization == Regularization::None {
        QuuInversion::AllowIndefinite
    } else {
        QuuInversion::PositiveDefinite
    };
    let start_rho = AdaptiveState::new(&solver.regularization).rho;
    let schedule = match backward_pass_with(
        &model,
        backward_kind(args.method),
        &solver.regularization,
        start_rho,
        inversion,
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("backward pass failed: {e}");
            dir.finish("perturbation", "error", Some(solver.seed), config_json)?;
            return Ok(Outcome::Failure);
        }
    };
    let study = perturbation_study(&problem, &nominal, &schedule, &args.alphas)?;
    let mut table = Table::new(
        SCHEMA_VERSION,
        [
            "alpha",
            "step",
            "true_norm",
            "linear_error",
            "quadratic_error",
            "recursive_error",
            "truncated",
        ],
    );
    for row in &study.rows {
        let truncated = study.truncated.contains(&row.alpha);
        table.push(vec![
            row.alpha.into(),
            row.step.into(),
            row.true_norm.into(),
            row.linear_error.into(),
            row.quadratic_error.into(),
            row.recursive_error.into(),
            Cell::Int(truncated as i64),
        ]);
    }
    dir.write_table("perturbation.csv", &table)?;
    for &a in &args.alphas {
        println!("alpha {a}: max recursive error {}", study.max_recursive_error(a));
    }
    let path = dir.finish("perturbation", "completed", Some(solver.seed), config_json)?;
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}
