use nalgebra::DVector;
use rand_distr::Normal;
use trajopt::feedback::{monte_carlo_stabilize, neighboring_gains, noisy_rollout, trial_rng, FeedbackPolicy};
use trajopt::problems::{build_benchmark, BenchmarkSpec};
use trajopt::solvers::{backward_pass_with, solve, BackwardKind, Method, QuuInversion, Regularization, SolverConfig};
use trajopt::{linearize, Problem};

fn lqr_policy() -> (Problem, FeedbackPolicy) {
    let problem = build_benchmark(&BenchmarkSpec::lqr_test()).unwrap();
    let init = vec![DVector::zeros(problem.control_dim()); problem.horizon()];
    let report = solve(&problem, &init, &SolverConfig::new(Method::Sn)).unwrap();
    let policy = neighboring_gains(&problem, &report.trajectory).unwrap();
    (problem, policy)
}

#[test]
fn neighboring_gains_are_the_negated_ddp_gains() {
    let (problem, policy) = lqr_policy();
    let model = linearize(&problem, &policy.nominal).unwrap();
    let schedule =
        backward_pass_with(&model, BackwardKind::Ddp, &Regularization::None, 0.0, QuuInversion::PositiveDefinite)
            .unwrap();
    for (k, k_ddp) in policy.gains.iter().zip(&schedule.gains) {
        assert!((k + k_ddp).amax() < 1e-9);
    }
    assert!(policy.max_stationarity() < 1e-9);
}

#[test]
fn monte_carlo_is_reproducible_per_seed() {
    let (problem, policy) = lqr_policy();
    let a = monte_carlo_stabilize(&problem, &policy, 0.05, 200, 11).unwrap();
    let b = monte_carlo_stabilize(&problem, &policy, 0.05, 200, 11).unwrap();
    let c = monte_carlo_stabilize(&problem, &policy, 0.05, 200, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.mean, c.mean);
}

#[test]
fn streamed_statistics_match_a_two_pass_computation() {
    let (problem, policy) = lqr_policy();
    let (sigma, trials, seed) = (0.05, 64, 3);
    let study = monte_carlo_stabilize(&problem, &policy, sigma, trials, seed).unwrap();
    let noise = Normal::new(0.0, sigma).unwrap();
    let paths: Vec<Vec<DVector<f64>>> = (0..trials)
        .filter_map(|trial| noisy_rollout(&problem, &policy, &noise, &mut trial_rng(seed, trial)))
        .collect();
    assert_eq!(paths.len(), trials - study.diverged);
    let count = paths.len() as f64;
    for t in 0..=problem.horizon() {
        let mean = paths.iter().map(|p| &p[t]).sum::<DVector<f64>>() / count;
        let var = paths.iter().map(|p| (&p[t] - &mean).map(|v| v * v)).sum::<DVector<f64>>() / (count - 1.0);
        assert!((&mean - &study.mean[t]).amax() < 1e-12);
        assert!((var.map(f64::sqrt) - &study.std_dev[t]).amax() < 1e-12);
    }
    let target = problem.target().unwrap();
    let successes = paths.iter().filter(|p| (&p[problem.horizon()] - target).norm() < 0.1).count();
    assert_eq!(successes, study.successes);
}

#[test]
fn zero_noise_reproduces_the_nominal() {
    let (problem, policy) = lqr_policy();
    let study = monte_carlo_stabilize(&problem, &policy, 0.0, 5, 0).unwrap();
    for (mean, nominal) in study.mean.iter().zip(&policy.nominal.states) {
        assert!((mean - nominal).amax() < 1e-12);
    }
    assert!(study.std_dev.iter().all(|s| s.amax() < 1e-12));
}
