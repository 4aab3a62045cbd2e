//! Backtracking line search on the ratio of actual to predicted cost change.

use super::backward::{expected_reduction, GainSchedule};
use super::config::SolverConfig;
use super::forward::{forward, ForwardKind};
use crate::model::{LocalModel, Problem, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step, or the last one tried when nothing was accepted.
    pub alpha: f64,
    /// `None` when no step down to `alpha_min` was acceptable.
    pub trajectory: Option<Trajectory>,
    pub predicted: f64,
    pub actual: f64,
    /// Rejected candidates before the accepted one.
    pub backtracks: usize,
}

impl LineSearchOutcome {
    pub fn accepted(&self) -> bool {
        self.trajectory.is_some()
    }
}

/// Acceptance test: `actual / predicted ≥ threshold`, or `actual ≤ 0` when
/// nothing is predicted.
pub fn acceptable(actual: f64, predicted: f64, threshold: f64) -> bool {
    if !actual.is_finite() {
        return false;
    }
    if predicted == 0.0 {
        return actual <= 0.0;
    }
    actual / predicted >= threshold
}

pub fn line_search(
    problem: &Problem,
    nominal: &Trajectory,
    model: &LocalModel,
    schedule: &GainSchedule,
    kind: ForwardKind,
    config: &SolverConfig,
) -> LineSearchOutcome {
    let mut alpha = config.alpha0;
    let mut backtracks = 0;
    let mut predicted = 0.0;
    let mut actual = f64::NAN;
    while alpha >= config.alpha_min {
        predicted = expected_reduction(schedule, alpha);
        if let Ok(candidate) = forward(kind, problem, nominal, model, schedule, alpha) {
            actual = candidate.cost - nominal.cost;
            if acceptable(actual, predicted, config.accept_threshold) {
                return LineSearchOutcome {
                    alpha,
                    trajectory: Some(candidate),
                    predicted,
                    actual,
                    backtracks,
                };
            }
        } else {
            actual = f64::NAN;
        }
        backtracks += 1;
        alpha *= config.backtrack_factor;
    }
    LineSearchOutcome {
        alpha: alpha / config.backtrack_factor,
        trajectory: None,
        predicted,
        actual,
        backtracks,
    }
}
