//! Accuracy of local models for the state deviation produced by a step.
//!
//! For a step length `α` the nonlinear closed loop
//! `u_t = ū_t + αk_t + K_t(x_t − x̄_t)` defines true deviations
//! `δx_t = x_t − x̄_t`, `δu_t = u_t − ū_t`. Each step's true increment
//! `f(x̄_t + δx_t, ū_t + δu_t) − f(x̄_t, ū_t)` is compared against
//!
//! - the first-order model `f_x δx_t + f_u δu_t` evaluated at the true deviations,
//! - the second-order model adding `½ f_zz(δz_t, δz_t)`,
//! - the deviation `δx̂_{t+1}` of the purely linear recursion
//!   `δû_t = αk_t + K_t δx̂_t`, `δx̂_{t+1} = f_x δx̂_t + f_u δû_t`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{linearize, Problem, Trajectory};
use crate::solvers::GainSchedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationRow {
    pub alpha: f64,
    /// Step index `t + 1` of the predicted state.
    pub step: usize,
    /// `‖δx_{t+1}‖₂` of the true closed loop.
    pub true_norm: f64,
    pub linear_error: f64,
    pub quadratic_error: f64,
    pub recursive_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationStudy {
    pub rows: Vec<PerturbationRow>,
    /// Step lengths whose true rollout became non-finite; their rows stop at
    /// the last finite step.
    pub truncated: Vec<f64>,
}

impl PerturbationStudy {
    pub fn rows_for(&self, alpha: f64) -> impl Iterator<Item = &PerturbationRow> {
        self.rows.iter().filter(move |r| r.alpha == alpha)
    }

    /// Largest recursive-model error over the steps for `alpha`.
    pub fn max_recursive_error(&self, alpha: f64) -> f64 {
        self.rows_for(alpha).map(|r| r.recursive_error).fold(0.0, f64::max)
    }
}

pub fn perturbation_study(
    problem: &Problem,
    nominal: &Trajectory,
    schedule: &GainSchedule,
    alphas: &[f64],
) -> Result<PerturbationStudy> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidConfig(format!("step length {a} is outside (0, 1]")));
    }
    if schedule.horizon() != nominal.horizon() {
        return Err(Error::Dimension(format!(
            "schedule has {} steps, nominal has {}",
            schedule.horizon(),
            nominal.horizon()
        )));
    }
    let model = linearize(problem, nominal)?;
    let dynamics = problem.dynamics();
    let mut rows = Vec::new();
    let mut truncated = Vec::new();

    for &alpha in alphas {
        let mut dx = DVector::zeros(problem.state_dim());
        let mut dx_hat = dx.clone();
        for (t, step) in model.steps.iter().enumerate() {
            let x_bar = &nominal.states[t];
            let u_bar = &nominal.controls[t];
            let du = &schedule.k[t] * alpha + &schedule.gains[t] * &dx;
            let du_hat = &schedule.k[t] * alpha + &schedule.gains[t] * &dx_hat;

            let truth = dynamics.step(&(x_bar + &dx), &(u_bar + &du)) - dynamics.step(x_bar, u_bar);
            if truth.iter().any(|v| !v.is_finite()) {
                truncated.push(alpha);
                break;
            }
            let linear = &step.f_x * &dx + &step.f_u * &du;
            let curvature = step
                .curvature
                .as_ref()
                .expect("linearize returns dynamics curvature");
            let second = curvature.xx.bilinear(&dx, &dx)
                + curvature.xu.bilinear(&dx, &du) * 2.0
                + curvature.uu.bilinear(&du, &du);
            let quadratic = &linear + second * 0.5;
            dx_hat = &step.f_x * &dx_hat + &step.f_u * du_hat;

            rows.push(PerturbationRow {
                alpha,
                step: t + 1,
                true_norm: truth.norm(),
                linear_error: (&linear - &truth).norm(),
                quadratic_error: (&quadratic - &truth).norm(),
                recursive_error: (&dx_hat - &truth).norm(),
            });
            dx = truth;
        }
    }
    Ok(PerturbationStudy { rows, truncated })
}
