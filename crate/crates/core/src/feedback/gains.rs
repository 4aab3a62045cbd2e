//! Optimal linear feedback about a stationary trajectory.
//!
//! The second variation of the cost about an optimum is an LQR problem whose
//! weights are Hamiltonian second derivatives `c_·· + λ_{t+1} ⊗ f_··`. Its
//! Riccati recursion yields `δu_t = −K_t δx_t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{linearize, LocalModel, Problem, Trajectory};

/// Largest admissible `‖c_u + f_uᵀλ_{t+1}‖∞` at the input trajectory.
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    pub nominal: Trajectory,
    /// `K_t` with `δu_t = −K_t δx_t`.
    pub gains: Vec<DMatrix<f64>>,
    /// Costates `λ_0..=λ_T`.
    pub costate: Vec<DVector<f64>>,
    /// `‖H_u‖∞` per step, which vanishes at an optimum.
    pub stationarity: Vec<f64>,
}

impl FeedbackPolicy {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    pub fn max_stationarity(&self) -> f64 {
        self.stationarity.iter().copied().fold(0.0, f64::max)
    }

    /// Control applied at step `t` in state `x`.
    pub fn control(&self, t: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.nominal.controls[t] - &self.gains[t] * (x - &self.nominal.states[t])
    }
}

pub fn neighboring_gains(problem: &Problem, optimal: &Trajectory) -> Result<FeedbackPolicy> {
    neighboring_gains_with_tol(problem, optimal, DEFAULT_STATIONARITY_TOL)
}

pub fn neighboring_gains_with_tol(
    problem: &Problem,
    optimal: &Trajectory,
    tolerance: f64,
) -> Result<FeedbackPolicy> {
    let model = linearize(problem, optimal)?;
    let costate = adjoint(&model);
    let stationarity: Vec<f64> = model
        .steps
        .iter()
        .enumerate()
        .map(|(t, step)| (&step.cost.c_u + step.f_u.transpose() * &costate[t + 1]).amax())
        .collect();
    let residual = stationarity.iter().copied().fold(0.0, f64::max);
    if !(residual <= tolerance) {
        return Err(Error::NotStationary {
            residual,
            tolerance,
        });
    }
    let gains = riccati(&model, &costate)?;
    Ok(FeedbackPolicy {
        nominal: optimal.clone(),
        gains,
        costate,
        stationarity,
    })
}

/// `λ_T = C_Tx`, `λ_t = c_x + f_xᵀλ_{t+1}`.
fn adjoint(model: &LocalModel) -> Vec<DVector<f64>> {
    let horizon = model.horizon();
    let mut costate = vec![DVector::zeros(model.state_dim()); horizon + 1];
    costate[horizon] = model.terminal.c_x.clone();
    for t in (0..horizon).rev() {
        let step = &model.steps[t];
        costate[t] = &step.cost.c_x + step.f_x.transpose() * &costate[t + 1];
    }
    costate
}

fn riccati(model: &LocalModel, costate: &[DVector<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let horizon = model.horizon();
    let mut s = model.terminal.c_xx.clone();
    let mut gains = vec![DMatrix::zeros(0, 0); horizon];
    for t in (0..horizon).rev() {
        let step = &model.steps[t];
        let curvature = step
            .curvature
            .as_ref()
            .expect("linearize returns dynamics curvature");
        let lam = &costate[t + 1];
        let h_xx = &step.cost.c_xx + curvature.xx.contract(lam);
        let h_ux = step.cost.c_xu.transpose() + curvature.xu.contract(lam).transpose();
        let h_uu = &step.cost.c_uu + curvature.uu.contract(lam);

        let s_fx = &s * &step.f_x;
        let m = h_uu + step.f_u.transpose() * &s * &step.f_u;
        let n = step.f_u.transpose() * &s_fx + h_ux;
        let k = m
            .clone()
            .lu()
            .solve(&n)
            .filter(|k| k.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularGain { step: t })?;
        let next = h_xx + step.f_x.transpose() * s_fx - n.transpose() * &k;
        s = (&next + next.transpose()) * 0.5;
        gains[t] = k;
    }
    Ok(gains)
}
