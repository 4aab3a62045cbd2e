//! Forward passes that turn a gain schedule into a candidate trajectory.

use nalgebra::DVector;

use super::backward::GainSchedule;
use crate::error::{Error, Result};
use crate::model::{LocalModel, Problem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForwardKind {
    /// Closed loop on the true dynamics: `u = ū + αk + K(x − x̄)`.
    Nonlinear,
    /// Deviations propagated through the local linear model, then the
    /// resulting controls rolled out on the true dynamics.
    Linearized,
}

fn check_schedule(nominal: &Trajectory, schedule: &GainSchedule) -> Result<()> {
    if schedule.horizon() != nominal.horizon() {
        return Err(Error::Dimension(format!(
            "schedule has {} steps but nominal has {}",
            schedule.horizon(),
            nominal.horizon()
        )));
    }
    Ok(())
}

pub fn forward_nonlinear(
    problem: &Problem,
    nominal: &Trajectory,
    schedule: &GainSchedule,
    alpha: f64,
) -> Result<Trajectory> {
    check_schedule(nominal, schedule)?;
    let dynamics = problem.dynamics();
    let horizon = nominal.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    states.push(problem.x0().clone());
    for t in 0..horizon {
        let dx = &states[t] - &nominal.states[t];
        let u = &nominal.controls[t] + &schedule.k[t] * alpha + &schedule.gains[t] * dx;
        let next = dynamics.step(&states[t], &u);
        if next.iter().any(|v| !v.is_finite()) || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t + 1 });
        }
        controls.push(u);
        states.push(next);
    }
    let cost = problem.total_cost(&states, &controls);
    if !cost.is_finite() {
        return Err(Error::Divergence { step: horizon });
    }
    Ok(Trajectory {
        states,
        controls,
        cost,
    })
}

/// Controls from the linear deviation model `δx̂' = f_x δx̂ + f_u δu`,
/// `δu = αk + K δx̂`, with the true rollout of those controls.
pub fn forward_linearized(
    problem: &Problem,
    nominal: &Trajectory,
    model: &LocalModel,
    schedule: &GainSchedule,
    alpha: f64,
) -> Result<(Vec<DVector<f64>>, Trajectory)> {
    check_schedule(nominal, schedule)?;
    if model.horizon() != nominal.horizon() {
        return Err(Error::Dimension("model and nominal horizons differ".into()));
    }
    let controls = linearized_controls(nominal, model, schedule, alpha);
    let trajectory = crate::model::rollout(problem, &controls)?;
    Ok((controls, trajectory))
}

pub(crate) fn linearized_controls(
    nominal: &Trajectory,
    model: &LocalModel,
    schedule: &GainSchedule,
    alpha: f64,
) -> Vec<DVector<f64>> {
    let mut dx = DVector::zeros(model.state_dim());
    let mut controls = Vec::with_capacity(nominal.horizon());
    for (t, step) in model.steps.iter().enumerate() {
        let du = &schedule.k[t] * alpha + &schedule.gains[t] * &dx;
        dx = &step.f_x * &dx + &step.f_u * &du;
        controls.push(&nominal.controls[t] + du);
    }
    controls
}

pub fn forward(
    kind: ForwardKind,
    problem: &Problem,
    nominal: &Trajectory,
    model: &LocalModel,
    schedule: &GainSchedule,
    alpha: f64,
) -> Result<Trajectory> {
    match kind {
        ForwardKind::Nonlinear => forward_nonlinear(problem, nominal, schedule, alpha),
        ForwardKind::Linearized => {
            forward_linearized(problem, nominal, model, schedule, alpha).map(|(_, t)| t)
        }
    }
}
