//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::error::Error;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use trajopt::feedback::{monte_carlo_stabilize, neighboring_gains, perturbation_study, FeedbackPolicy};
use trajopt::oracle::dense_gauss_newton_step;
use trajopt::problems::{build_benchmark, fd, random_controls, starting_controls, BenchmarkName, BenchmarkSpec};
use trajopt::solvers::{
    backward_pass_with, expected_reduction, forward_linearized, forward_nonlinear, solve, BackwardKind, Method,
    QuuInversion, Regularization, SolveReport, SolveStatus, SolverConfig,
};
use trajopt::{linearize, rollout, DynamicsCurvature, Problem, Trajectory};

type Check = Result<(bool, String), Box<dyn Error>>;

const TP3_REFERENCE_COST: f64 = 58.32139;

/// Seeded random initial controls for the cooling and indefiniteness runs.
const PENDULUM_SEED: u64 = 0;
const PENDULUM_U_SCALE: f64 = 1.0;
const CARTPOLE_SEED: u64 = 1;
const CARTPOLE_U_SCALE: f64 = 10.0;
const COOLING_BUDGET: usize = 60;

fn benchmark(name: BenchmarkName) -> Result<Problem, Box<dyn Error>> {
    Ok(build_benchmark(&BenchmarkSpec::builtin(name))?)
}

fn seeded_controls(problem: &Problem, scale: f64, seed: u64) -> Vec<DVector<f64>> {
    random_controls(problem.horizon(), problem.control_dim(), scale, seed)
}

fn unregularized(method: Method) -> SolverConfig {
    SolverConfig::new(method)
        .with_regularization(Regularization::None)
        .allowing_indefinite()
        .with_max_iters(COOLING_BUDGET)
}

fn min_alpha(report: &SolveReport) -> f64 {
    report.iterations.iter().map(|r| r.alpha).fold(f64::INFINITY, f64::min)
}

/// Half-width of the random nominals for the descent and derivative checks.
/// The bilinear and trigonometric benchmarks leave the region of O(1) states
/// (and, for TP-4, convex stage costs) at larger control magnitudes.
fn nominal_scale(name: BenchmarkName) -> f64 {
    match name {
        BenchmarkName::Tp3 => 0.1,
        BenchmarkName::Tp4 => 0.5,
        _ => 1.0,
    }
}

fn min_symmetric_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Whether the cost Hessians along `nominal` satisfy the convexity the
/// descent guarantee assumes: `c_uu ≻ 0`, `[c_xx c_xu; c_ux c_uu] ⪰ 0` and
/// terminal `C_xx ⪰ 0`.
fn convex_along(problem: &Problem, nominal: &Trajectory) -> bool {
    let cost = problem.cost();
    let n = problem.state_dim();
    let m = problem.control_dim();
    let tol = 1e-10;
    let stages = (0..problem.horizon()).all(|t| {
        let d = cost.stage_derivatives(&nominal.states[t], &nominal.controls[t], t);
        let mut h = DMatrix::zeros(n + m, n + m);
        h.view_mut((0, 0), (n, n)).copy_from(&d.c_xx);
        h.view_mut((0, n), (n, m)).copy_from(&d.c_xu);
        h.view_mut((n, 0), (m, n)).copy_from(&d.c_xu.transpose());
        h.view_mut((n, n), (m, m)).copy_from(&d.c_uu);
        min_symmetric_eig(&d.c_uu) > 0.0 && min_symmetric_eig(&h) >= -tol * h.amax().max(1.0)
    });
    let terminal = cost.terminal_derivatives(nominal.final_state()).c_xx;
    stages && min_symmetric_eig(&terminal) >= -tol * terminal.amax().max(1.0)
}

fn tp3_large() -> BenchmarkSpec {
    BenchmarkSpec::tp3(100, 50, 100, 1.0 / 200.0)
}

fn criterion_1() -> Check {
    let spec = BenchmarkSpec::builtin(BenchmarkName::Tp3);
    let problem = build_benchmark(&spec)?;
    let init = starting_controls(spec.name, 1, problem.horizon(), problem.control_dim())?;
    let clock = Instant::now();
    let report = solve(&problem, &init, &SolverConfig::new(Method::Ilqr))?;
    let cost = report.final_cost();
    let iters = report.iteration_count();
    let pass = report.converged() && (cost - TP3_REFERENCE_COST).abs() <= 1e-3 && iters <= 10;
    Ok((
        pass,
        format!("J = {cost:.6} after {iters} iterations ({:.2} s)", clock.elapsed().as_secs_f64()),
    ))
}

fn criterion_2() -> Check {
    let spec = BenchmarkSpec::builtin(BenchmarkName::Tp4);
    let problem = build_benchmark(&spec)?;
    let config = SolverConfig::new(Method::Ilqr).with_regularization(Regularization::lm_shift());
    let clock = Instant::now();
    let mut counts = Vec::new();
    let mut pass = true;
    for point in 1..=5 {
        let init = starting_controls(spec.name, point, problem.horizon(), problem.control_dim())?;
        let report = solve(&problem, &init, &config)?;
        pass &= report.converged() && report.iteration_count() <= 8;
        counts.push(report.iteration_count());
    }
    Ok((pass, format!("iterations {counts:?} ({:.2} s)", clock.elapsed().as_secs_f64())))
}

fn criterion_3() -> Check {
    let spec = tp3_large();
    let problem = build_benchmark(&spec)?;
    let config = SolverConfig::new(Method::Ilqr);
    let clock = Instant::now();
    let mut counts = Vec::new();
    let mut all_converged = true;
    for point in 1..=5 {
        let init = starting_controls(spec.name, point, problem.horizon(), problem.control_dim())?;
        let report = solve(&problem, &init, &config)?;
        all_converged &= report.converged();
        counts.push(report.iteration_count());
    }
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let pass = all_converged && (mean - 8.4).abs() <= 3.0;
    Ok((
        pass,
        format!("iterations {counts:?}, mean {mean:.1} ({:.2} s)", clock.elapsed().as_secs_f64()),
    ))
}

fn criterion_4() -> Check {
    let instances = 128;
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let (problem, controls) = common::random_instance(seed);
        let nominal = rollout(&problem, &controls)?;
        let model = linearize(&problem, &nominal)?;
        let schedule = backward_pass_with(
            &model,
            BackwardKind::Ilqr,
            &Regularization::None,
            0.0,
            QuuInversion::PositiveDefinite,
        )?;
        let (next, _) = forward_linearized(&problem, &nominal, &model, &schedule, 1.0)?;
        let du = common::control_step(&nominal, &next);
        let oracle = dense_gauss_newton_step(&problem, &nominal)?;
        worst = worst.max((du - oracle.stacked_controls()).amax());
    }
    Ok((worst <= 1e-8, format!("{instances} instances, max |Δ| = {worst:.2e}")))
}

fn criterion_5() -> Check {
    let problem = benchmark(BenchmarkName::LqrTest)?;
    let nominal = rollout(&problem, &seeded_controls(&problem, 1.0, 0))?;
    let model = linearize(&problem, &nominal)?;
    let mut worst: f64 = 0.0;
    let mut sums = Vec::new();
    for kind in [BackwardKind::Ilqr, BackwardKind::Ddp, BackwardKind::Sn] {
        let schedule = backward_pass_with(&model, kind, &Regularization::None, 0.0, QuuInversion::PositiveDefinite)?;
        sums.push(schedule.reduction_sum);
        for alpha in [0.25, 0.5, 1.0] {
            let actual = forward_nonlinear(&problem, &nominal, &schedule, alpha)?.cost - nominal.cost;
            let predicted = expected_reduction(&schedule, alpha);
            worst = worst.max((actual - predicted).abs() / predicted.abs());
        }
    }
    let spread = sums.iter().fold(0.0f64, |a, s| a.max((s - sums[0]).abs())) / sums[0].abs();
    Ok((
        worst <= 1e-8 && spread <= 1e-8,
        format!("max relative error {worst:.2e}, reduction sums agree to {spread:.2e}"),
    ))
}

fn criterion_6() -> Check {
    let mut violations = Vec::new();
    let mut checked = 0;
    for name in BenchmarkName::ALL {
        let problem = benchmark(name)?;
        for seed in 0..20 {
            let nominal = rollout(&problem, &seeded_controls(&problem, nominal_scale(name), seed))?;
            let model = linearize(&problem, &nominal)?;
            checked += 1;
            if !convex_along(&problem, &nominal) {
                violations.push(format!("{name}/{seed}: cost not convex along nominal"));
                continue;
            }
            match backward_pass_with(&model, BackwardKind::Ilqr, &Regularization::None, 0.0, QuuInversion::PositiveDefinite) {
                Ok(schedule) => {
                    let predicted = expected_reduction(&schedule, 1.0);
                    let stationary = schedule.k.iter().all(|k| k.amax() <= 1e-12);
                    if schedule.min_quu_eig() <= 0.0 || !(predicted < 0.0 || stationary) {
                        violations.push(format!("{name}/{seed}"));
                    }
                }
                Err(e) => violations.push(format!("{name}/{seed}: {e}")),
            }
        }
    }
    Ok((
        violations.is_empty(),
        format!("{checked} nominals, {} violations {violations:?}", violations.len()),
    ))
}

fn first_pass_min_eigs(problem: &Problem, nominal: &Trajectory, kind: BackwardKind) -> Result<Vec<f64>, Box<dyn Error>> {
    let model = linearize(problem, nominal)?;
    Ok(backward_pass_with(&model, kind, &Regularization::None, 0.0, QuuInversion::AllowIndefinite)?.quu_min_eig)
}

fn criterion_7() -> Check {
    let problem = benchmark(BenchmarkName::Cartpole)?;
    let nominal = rollout(&problem, &seeded_controls(&problem, CARTPOLE_U_SCALE, CARTPOLE_SEED))?;
    let ddp = first_pass_min_eigs(&problem, &nominal, BackwardKind::Ddp)?;
    let ilqr = first_pass_min_eigs(&problem, &nominal, BackwardKind::Ilqr)?;
    let negative = ddp.iter().filter(|e| **e < 0.0).count();
    let ddp_min = ddp.iter().copied().fold(f64::INFINITY, f64::min);
    let ilqr_min = ilqr.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        negative > 0 && ilqr_min > 0.0,
        format!(
            "seed {CARTPOLE_SEED}: DDP has {negative} indefinite steps (min {ddp_min:.3e}), iLQR min {ilqr_min:.3e}"
        ),
    ))
}

struct CoolingRuns {
    ilqr: SolveReport,
    ddp: SolveReport,
    hybrid: SolveReport,
}

fn cooling_runs(name: BenchmarkName, scale: f64, seed: u64) -> Result<CoolingRuns, Box<dyn Error>> {
    let problem = benchmark(name)?;
    let init = seeded_controls(&problem, scale, seed);
    Ok(CoolingRuns {
        ilqr: solve(&problem, &init, &unregularized(Method::Ilqr))?,
        ddp: solve(&problem, &init, &unregularized(Method::Ddp))?,
        hybrid: solve(&problem, &init, &unregularized(Method::Hybrid))?,
    })
}

fn criterion_8(pendulum: &CoolingRuns, cartpole: &CoolingRuns) -> Check {
    let (p_ilqr, p_ddp) = (min_alpha(&pendulum.ilqr), min_alpha(&pendulum.ddp));
    let (c_ilqr, c_ddp) = (min_alpha(&cartpole.ilqr), min_alpha(&cartpole.ddp));
    let pass = p_ddp < 1.0 && p_ilqr == 1.0 && c_ddp < 1.0 && c_ilqr >= 0.1;
    Ok((
        pass,
        format!(
            "min α pendulum (seed {PENDULUM_SEED}): DDP {p_ddp:.3e}, iLQR {p_ilqr}; \
             cart-pole (seed {CARTPOLE_SEED}): DDP {c_ddp:.3e}, iLQR {c_ilqr}"
        ),
    ))
}

fn criterion_9(pendulum: &CoolingRuns, cartpole: &CoolingRuns) -> Check {
    let p = (pendulum.hybrid.final_cost(), pendulum.ddp.final_cost());
    let c = (cartpole.hybrid.final_cost(), cartpole.ddp.final_cost());
    Ok((
        p.0 <= p.1 && c.0 <= c.1,
        format!(
            "final J (hybrid vs DDP) pendulum {:.6e} vs {:.6e}, cart-pole {:.6e} vs {:.6e}",
            p.0, p.1, c.0, c.1
        ),
    ))
}

/// DDP driven to tight stationarity from zero controls.
fn converged_pendulum() -> Result<(Problem, Trajectory), Box<dyn Error>> {
    let problem = benchmark(BenchmarkName::Pendulum)?;
    let init = vec![DVector::zeros(problem.control_dim()); problem.horizon()];
    let config = SolverConfig {
        reduction_tol: 1e-20,
        cost_tol: 1e-300,
        ..unregularized(Method::Ddp).with_max_iters(100)
    };
    let report = solve(&problem, &init, &config)?;
    if report.status == SolveStatus::Stalled || report.status == SolveStatus::Diverged {
        return Err(format!("pendulum solve ended {}", report.status.as_str()).into());
    }
    Ok((problem, report.trajectory))
}

fn criterion_10(problem: &Problem, policy: &FeedbackPolicy) -> Check {
    let model = linearize(problem, &policy.nominal)?;
    let schedule = backward_pass_with(&model, BackwardKind::Ddp, &Regularization::None, 0.0, QuuInversion::AllowIndefinite)?;
    let gap = policy
        .gains
        .iter()
        .zip(&schedule.gains)
        .map(|(k, k_ddp)| (k + k_ddp).amax())
        .fold(0.0, f64::max);
    let stationarity = policy.max_stationarity();
    Ok((
        gap <= 1e-9 && stationarity <= 1e-6,
        format!("max |K − K_DDP| = {gap:.2e}, max ‖Q_u‖∞ = {stationarity:.2e}"),
    ))
}

fn criterion_11(problem: &Problem, policy: &FeedbackPolicy) -> Check {
    let clock = Instant::now();
    let noisy = monte_carlo_stabilize(problem, policy, 0.01, 1000, 0)?;
    let clean = monte_carlo_stabilize(problem, policy, 0.0, 1000, 0)?;
    Ok((
        noisy.success_rate >= 0.95 && clean.success_rate == 1.0,
        format!(
            "success rate {} at σ = 0.01, {} at σ = 0 ({:.2} s)",
            noisy.success_rate,
            clean.success_rate,
            clock.elapsed().as_secs_f64()
        ),
    ))
}

fn criterion_12() -> Check {
    let problem = benchmark(BenchmarkName::Pendulum)?;
    let nominal = rollout(&problem, &seeded_controls(&problem, PENDULUM_U_SCALE, PENDULUM_SEED))?;
    let model = linearize(&problem, &nominal)?;
    let schedule = backward_pass_with(&model, BackwardKind::Sn, &Regularization::None, 0.0, QuuInversion::AllowIndefinite)?;
    let alphas = [1.0, 0.1, 0.05, 0.01];
    let study = perturbation_study(&problem, &nominal, &schedule, &alphas)?;
    let first = |a: f64| study.rows_for(a).next().map_or(f64::NAN, |r| r.recursive_error);
    let ratio = first(0.1) / first(0.01);
    let maxima: Vec<f64> = alphas.iter().map(|&a| study.max_recursive_error(a)).collect();
    let monotone = maxima.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ratio >= 50.0 && monotone && study.truncated.is_empty(),
        format!(
            "step-1 ratio {ratio:.1}, max errors {}",
            maxima.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn relative_gap(analytic: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (analytic - reference).amax() / reference.amax().max(1.0)
}

/// Worst first- and second-order relative gaps of the dynamics and stage
/// cost derivatives at step `t` of `nominal`.
fn derivative_gaps(problem: &Problem, nominal: &Trajectory, t: usize) -> Result<(f64, f64), Box<dyn Error>> {
    let n = problem.state_dim();
    let m = problem.control_dim();
    let x = &nominal.states[t];
    let u = &nominal.controls[t];
    let z = DVector::from_iterator(n + m, x.iter().chain(u.iter()).copied());
    let dynamics = problem.dynamics();
    let map = |z: &DVector<f64>| dynamics.step(&z.rows(0, n).into(), &z.rows(n, m).into());
    let jac = fd::jacobian(map, &z)?;
    let (fx, fu) = dynamics.jacobians(x, u);
    let mut first = relative_gap(&fx, &jac.columns(0, n).into()).max(relative_gap(&fu, &jac.columns(n, m).into()));

    let reference = DynamicsCurvature::from_joint_hessians(&fd::hessians(map, &z)?, n, m);
    let curvature = dynamics.curvature(x, u);
    let mut second: f64 = 0.0;
    for i in 0..n {
        second = second
            .max(relative_gap(&curvature.xx.slice(i), &reference.xx.slice(i)))
            .max(relative_gap(&curvature.xu.slice(i), &reference.xu.slice(i)))
            .max(relative_gap(&curvature.uu.slice(i), &reference.uu.slice(i)));
    }

    let cost = problem.cost();
    let stage = |z: &DVector<f64>| cost.stage(&z.rows(0, n).into(), &z.rows(n, m).into(), t);
    let grad = fd::gradient(stage, &z)?;
    let hess = fd::hessian(stage, &z)?;
    let d = cost.stage_derivatives(x, u, t);
    let analytic_grad = DMatrix::from_iterator(n + m, 1, d.c_x.iter().chain(d.c_u.iter()).copied());
    first = first.max(relative_gap(&analytic_grad, &DMatrix::from_column_slice(n + m, 1, grad.as_slice())));
    let mut analytic_hess = DMatrix::zeros(n + m, n + m);
    analytic_hess.view_mut((0, 0), (n, n)).copy_from(&d.c_xx);
    analytic_hess.view_mut((0, n), (n, m)).copy_from(&d.c_xu);
    analytic_hess.view_mut((n, 0), (m, n)).copy_from(&d.c_xu.transpose());
    analytic_hess.view_mut((n, n), (m, m)).copy_from(&d.c_uu);
    second = second.max(relative_gap(&analytic_hess, &hess));
    Ok((first, second))
}

fn criterion_13() -> Check {
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for name in [BenchmarkName::Tp3, BenchmarkName::Tp4] {
        let problem = benchmark(name)?;
        for seed in 0..10 {
            let nominal = rollout(&problem, &seeded_controls(&problem, nominal_scale(name), seed))?;
            let t = seed as usize % problem.horizon();
            let (f, s) = derivative_gaps(&problem, &nominal, t)?;
            first = first.max(f);
            second = second.max(s);
        }
    }
    Ok((
        first <= 1e-5 && second <= 1e-3,
        format!("max relative gap {first:.2e} (first order), {second:.2e} (second order)"),
    ))
}

fn report(id: u32, title: &str, check: Check) -> bool {
    let (pass, detail) = check.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("criterion {id:>2} {}: {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    let mut results = vec![
        report(1, "TP-3 reference cost", criterion_1()),
        report(2, "TP-4 iteration counts", criterion_2()),
        report(3, "TP-3 large mean iterations", criterion_3()),
        report(4, "iLQR step equals dense Gauss-Newton step", criterion_4()),
        report(5, "expected reduction exact on LQR", criterion_5()),
        report(6, "iLQR descent guarantee", criterion_6()),
        report(7, "DDP indefiniteness on cart-pole", criterion_7()),
    ];

    let cooling = cooling_runs(BenchmarkName::Pendulum, PENDULUM_U_SCALE, PENDULUM_SEED).and_then(|p| {
        cooling_runs(BenchmarkName::Cartpole, CARTPOLE_U_SCALE, CARTPOLE_SEED).map(|c| (p, c))
    });
    match &cooling {
        Ok((p, c)) => {
            results.push(report(8, "DDP cooling", criterion_8(p, c)));
            results.push(report(9, "hybrid improves on DDP", criterion_9(p, c)));
        }
        Err(e) => {
            results.push(report(8, "DDP cooling", Err(e.to_string().into())));
            results.push(report(9, "hybrid improves on DDP", Err(e.to_string().into())));
        }
    }

    let policy = converged_pendulum()
        .and_then(|(problem, optimum)| Ok((neighboring_gains(&problem, &optimum)?, problem)));
    match &policy {
        Ok((policy, problem)) => {
            results.push(report(10, "neighboring-extremal gains equal DDP gains", criterion_10(problem, policy)));
            results.push(report(11, "noise stabilization", criterion_11(problem, policy)));
        }
        Err(e) => {
            results.push(report(10, "neighboring-extremal gains equal DDP gains", Err(e.to_string().into())));
            results.push(report(11, "noise stabilization", Err(e.to_string().into())));
        }
    }

    results.push(report(12, "perturbation model order", criterion_12()));
    results.push(report(13, "analytic derivatives match finite differences", criterion_13()));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
