//! Riccati-style backward pass shared by iLQR, DDP and stagewise Newton.
//!
//! With `S'`, `v'` the value Hessian and gradient at `t+1`:
//!
//! ```text
//! Q_x  = c_x  + f_xᵀ v'
//! Q_u  = c_u  + f_uᵀ v'
//! Q_xx = c_xx + f_xᵀ S' f_x + μ ⊗ f_xx
//! Q_uu = c_uu + f_uᵀ S' f_u + μ ⊗ f_uu
//! Q_ux = c_uxᵀ + f_uᵀ S' f_x + μ ⊗ f_ux
//! k = −Q_uu⁻¹ Q_u,   K = −Q_uu⁻¹ Q_ux
//! v = Q_x + Q_xu k,  S = Q_xx + Q_xu K
//! ```
//!
//! iLQR drops the tensor terms, DDP contracts them with `μ = v'`, and
//! stagewise Newton with `μ = λ'` where `λ_t = c_x + f_xᵀ λ_{t+1}`,
//! `λ_T = C_Tx`.

use nalgebra::{DMatrix, DVector};

use super::config::Regularization;
use super::regularize::{min_eigenvalue, regularize_quu};
use crate::error::{Error, Result};
use crate::model::{symmetric_part, LocalModel, StepModel};

/// How the (possibly shifted) `Q_uu` is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum QuuInversion {
    /// Cholesky; failure means `Q_uu` is not positive definite.
    #[default]
    PositiveDefinite,
    /// LU when Cholesky fails, so indefinite but nonsingular `Q_uu` is
    /// inverted as is. Reproduces plain unregularized DDP.
    AllowIndefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackwardKind {
    Ilqr,
    Ddp,
    Sn,
}

impl BackwardKind {
    pub fn needs_curvature(self) -> bool {
        !matches!(self, BackwardKind::Ilqr)
    }
}

/// Output of one backward pass. Value terms are indexed `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub k: Vec<DVector<f64>>,
    pub gains: Vec<DMatrix<f64>>,
    pub s: Vec<DMatrix<f64>>,
    pub v: Vec<DVector<f64>>,
    /// Costate recursion (stagewise Newton only).
    pub lambda: Option<Vec<DVector<f64>>>,
    /// Smallest eigenvalue of the unshifted `Q_uu` per step.
    pub quu_min_eig: Vec<f64>,
    /// Shift added to `Q_uu` per step.
    pub reg_applied: Vec<f64>,
    /// `Σ_t Q_uᵀ Q_uu⁻¹ Q_u` with the factorized (shifted) `Q_uu`.
    pub reduction_sum: f64,
}

impl GainSchedule {
    pub fn horizon(&self) -> usize {
        self.k.len()
    }

    pub fn min_quu_eig(&self) -> f64 {
        self.quu_min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_shift(&self) -> f64 {
        self.reg_applied.iter().copied().fold(0.0, f64::max)
    }
}

/// `−(α − α²/2)·reduction_sum`
pub fn expected_reduction(schedule: &GainSchedule, alpha: f64) -> f64 {
    -(alpha - 0.5 * alpha * alpha) * schedule.reduction_sum
}

/// Q-function blocks at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct QTerms {
    pub q_x: DVector<f64>,
    pub q_u: DVector<f64>,
    pub q_xx: DMatrix<f64>,
    pub q_uu: DMatrix<f64>,
    /// m×n
    pub q_ux: DMatrix<f64>,
}

/// Assemble the Q-blocks of one step. `mu` selects the multiplier the
/// dynamics curvature is contracted with; `None` omits the tensor terms.
pub fn q_terms(
    step: &StepModel,
    s_next: &DMatrix<f64>,
    v_next: &DVector<f64>,
    mu: Option<&DVector<f64>>,
) -> QTerms {
    let c = &step.cost;
    let fx_t_s = step.f_x.transpose() * s_next;
    let fu_t_s = step.f_u.transpose() * s_next;
    let mut q_xx = &c.c_xx + &fx_t_s * &step.f_x;
    let mut q_uu = &c.c_uu + &fu_t_s * &step.f_u;
    let mut q_ux = c.c_xu.transpose() + &fu_t_s * &step.f_x;
    if let Some(mu) = mu {
        let curvature = step
            .curvature
            .as_ref()
            .expect("second-order model required for tensor terms");
        q_xx += curvature.xx.contract(mu);
        q_uu += curvature.uu.contract(mu);
        q_ux += curvature.xu.contract(mu).transpose();
    }
    QTerms {
        q_x: &c.c_x + step.f_x.tr_mul(v_next),
        q_u: &c.c_u + step.f_u.tr_mul(v_next),
        q_xx: symmetric_part(&q_xx),
        q_uu: symmetric_part(&q_uu),
        q_ux,
    }
}

/// `λ_T = C_Tx`, `λ_t = c_x + f_xᵀ λ_{t+1}`.
pub fn costate_recursion(model: &LocalModel) -> Vec<DVector<f64>> {
    let horizon = model.horizon();
    let mut lambda = vec![DVector::zeros(model.state_dim()); horizon + 1];
    lambda[horizon] = model.terminal.c_x.clone();
    for t in (0..horizon).rev() {
        let step = &model.steps[t];
        lambda[t] = &step.cost.c_x + step.f_x.tr_mul(&lambda[t + 1]);
    }
    lambda
}

/// Run the backward pass. `rho` is the adaptive shift multiplier and is
/// only used by [`Regularization::AdaptiveShift`].
pub fn backward_pass(
    model: &LocalModel,
    kind: BackwardKind,
    regularization: &Regularization,
    rho: f64,
) -> Result<GainSchedule> {
    backward_pass_with(model, kind, regularization, rho, QuuInversion::PositiveDefinite)
}

/// Solve `Q_uu [k K] = −[Q_u Q_ux]`.
fn solve_gains(
    quu: DMatrix<f64>,
    q_u: &DVector<f64>,
    q_ux: &DMatrix<f64>,
    inversion: QuuInversion,
    step: usize,
    min_eig: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let fallback = quu.clone();
    if let Some(chol) = quu.cholesky() {
        return Ok((-chol.solve(q_u), -chol.solve(q_ux)));
    }
    if inversion == QuuInversion::AllowIndefinite {
        let lu = fallback.lu();
        if let (Some(k), Some(gains)) = (lu.solve(q_u), lu.solve(q_ux)) {
            if k.iter().chain(gains.iter()).all(|v| v.is_finite()) {
                return Ok((-k, -gains));
            }
        }
    }
    Err(Error::NotPositiveDefinite { step, min_eig })
}

pub fn backward_pass_with(
    model: &LocalModel,
    kind: BackwardKind,
    regularization: &Regularization,
    rho: f64,
    inversion: QuuInversion,
) -> Result<GainSchedule> {
    if kind.needs_curvature() && !model.has_curvature() {
        return Err(Error::InvalidConfig(format!(
            "{kind:?} backward pass needs second-order dynamics derivatives"
        )));
    }
    let horizon = model.horizon();
    let n = model.state_dim();
    let m = model.control_dim();
    let lambda = match kind {
        BackwardKind::Sn => Some(costate_recursion(model)),
        _ => None,
    };

    let mut s = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut v = vec![DVector::zeros(n); horizon + 1];
    let mut k = vec![DVector::zeros(m); horizon];
    let mut gains = vec![DMatrix::zeros(m, n); horizon];
    let mut quu_min_eig = vec![0.0; horizon];
    let mut reg_applied = vec![0.0; horizon];
    let mut reduction_sum = 0.0;

    s[horizon] = model.terminal.c_xx.clone();
    v[horizon] = model.terminal.c_x.clone();

    for t in (0..horizon).rev() {
        let mu = match kind {
            BackwardKind::Ilqr => None,
            BackwardKind::Ddp => Some(&v[t + 1]),
            BackwardKind::Sn => lambda.as_ref().map(|l| &l[t + 1]),
        };
        let q = q_terms(&model.steps[t], &s[t + 1], &v[t + 1], mu);
        let min_eig = min_eigenvalue(&q.q_uu);
        quu_min_eig[t] = min_eig;
        let (quu_reg, shift) = regularize_quu(&q.q_uu, regularization, rho);
        reg_applied[t] = shift;
        let (kt, kk) = solve_gains(quu_reg, &q.q_u, &q.q_ux, inversion, t, min_eig)?;
        reduction_sum -= q.q_u.dot(&kt);
        let q_xu = q.q_ux.transpose();
        v[t] = &q.q_x + &q_xu * &kt;
        s[t] = symmetric_part(&(&q.q_xx + &q_xu * &kk));
        k[t] = kt;
        gains[t] = kk;
    }

    Ok(GainSchedule {
        k,
        gains,
        s,
        v,
        lambda,
        quu_min_eig,
        reg_applied,
        reduction_sum,
    })
}
