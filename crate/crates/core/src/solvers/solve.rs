//! Outer iteration: rollout, linearize, backward pass, line search.

use nalgebra::DVector;

use super::backward::{backward_pass_with, BackwardKind, GainSchedule, QuuInversion};
use super::config::{Method, Regularization, SolverConfig};
use super::forward::ForwardKind;
use super::line_search::line_search;
use super::regularize::AdaptiveState;
use crate::error::{Error, Result};
use crate::model::{linearize_with, rollout, DerivativeOrder, Problem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Stalled,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Stalled => "stalled",
            SolveStatus::Diverged => "diverged",
        }
    }
}

/// One accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iter: usize,
    /// Cost after the step.
    pub cost: f64,
    pub alpha: f64,
    pub predicted: f64,
    pub actual: f64,
    /// Backward pass that produced the step (differs from the configured
    /// method for hybrid and mixed).
    pub backward: BackwardKind,
    /// Minimum over steps of the smallest unshifted `Q_uu` eigenvalue.
    pub quu_min_eig: f64,
    /// Per-step smallest unshifted `Q_uu` eigenvalue.
    pub quu_profile: Vec<f64>,
    /// Largest shift added to `Q_uu` in the accepted backward pass.
    pub max_shift: f64,
    /// Adaptive multiplier after the iteration.
    pub rho: f64,
    pub backtracks: usize,
    /// Backward passes repeated because of failures.
    pub backward_retries: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub initial_cost: f64,
    pub iterations: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub trajectory: Trajectory,
    /// Last successful backward pass.
    pub schedule: Option<GainSchedule>,
    /// Iteration after which hybrid switched to iLQR.
    pub switched_at: Option<usize>,
    /// Reason for a stalled or diverged status.
    pub failure: Option<Error>,
}

impl SolveReport {
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    pub fn final_cost(&self) -> f64 {
        self.trajectory.cost
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn passes(method: Method, switched: bool) -> (BackwardKind, ForwardKind) {
    match method {
        Method::Ilqr => (BackwardKind::Ilqr, ForwardKind::Nonlinear),
        Method::Ddp => (BackwardKind::Ddp, ForwardKind::Nonlinear),
        Method::Sn => (BackwardKind::Sn, ForwardKind::Linearized),
        Method::Mixed => (BackwardKind::Sn, ForwardKind::Nonlinear),
        Method::Hybrid if switched => (BackwardKind::Ilqr, ForwardKind::Nonlinear),
        Method::Hybrid => (BackwardKind::Ddp, ForwardKind::Nonlinear),
    }
}

pub fn solve(problem: &Problem, init_controls: &[DVector<f64>], config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    problem.check_controls(init_controls)?;
    let mut trajectory = rollout(problem, init_controls)?;
    let initial_cost = trajectory.cost;
    let adaptive = matches!(config.regularization, Regularization::AdaptiveShift { .. });
    let mut reg_state = AdaptiveState::new(&config.regularization);
    let mut iterations = Vec::new();
    let mut schedule = None;
    let mut switched_at = None;
    let mut failure = None;
    let mut status = SolveStatus::MaxIters;
    let inversion = if config.allow_indefinite {
        QuuInversion::AllowIndefinite
    } else {
        QuuInversion::PositiveDefinite
    };

    'outer: for iter in 1..=config.max_iters {
        let (backward, forward) = passes(config.method, switched_at.is_some());
        let order = if backward.needs_curvature() {
            DerivativeOrder::Second
        } else {
            DerivativeOrder::First
        };
        let model = match linearize_with(problem, &trajectory, order) {
            Ok(m) => m,
            Err(e) => {
                status = SolveStatus::Diverged;
                failure = Some(e);
                break;
            }
        };

        let mut retries = 0;
        let (gains, search) = loop {
            let gains = match backward_pass_with(&model, backward, &config.regularization, reg_state.rho, inversion) {
                Ok(g) => g,
                Err(e @ Error::NotPositiveDefinite { .. }) => {
                    if adaptive && reg_state.rho < config.rho_max {
                        reg_state.increase(&config.regularization);
                        retries += 1;
                        continue;
                    }
                    status = SolveStatus::Stalled;
                    failure = Some(e);
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
            if 0.5 * gains.reduction_sum.abs() <= config.reduction_tol {
                schedule = Some(gains);
                status = SolveStatus::Converged;
                break 'outer;
            }
            let search = line_search(problem, &trajectory, &model, &gains, forward, config);
            if search.accepted() {
                break (gains, search);
            }
            if adaptive && reg_state.rho < config.rho_max {
                reg_state.increase(&config.regularization);
                retries += 1;
                continue;
            }
            schedule = Some(gains);
            status = SolveStatus::Stalled;
            break 'outer;
        };

        let candidate = search.trajectory.expect("accepted");
        let previous_cost = trajectory.cost;
        trajectory = candidate;
        if adaptive {
            reg_state.decrease(&config.regularization);
        }
        iterations.push(IterationRecord {
            iter,
            cost: trajectory.cost,
            alpha: search.alpha,
            predicted: search.predicted,
            actual: search.actual,
            backward,
            quu_min_eig: gains.min_quu_eig(),
            quu_profile: gains.quu_min_eig.clone(),
            max_shift: gains.max_shift(),
            rho: reg_state.rho,
            backtracks: search.backtracks,
            backward_retries: retries,
        });
        schedule = Some(gains);

        if config.method == Method::Hybrid
            && switched_at.is_none()
            && search.alpha < config.alpha_switch
        {
            switched_at = Some(iter);
        }
        if search.actual.abs() <= config.cost_tol * previous_cost.abs().max(1.0) {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SolveReport {
        method: config.method,
        initial_cost,
        iterations,
        status,
        trajectory,
        schedule,
        switched_at,
        failure,
    })
}
