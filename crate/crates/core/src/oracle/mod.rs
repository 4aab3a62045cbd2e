//! Dense reference solutions of the per-iteration QP over the whole horizon.
//!
//! Two QPs are available: the Gauss-Newton QP with the cost Hessian only,
//! and the Newton QP whose Hessian adds dynamics curvature contracted with
//! supplied multipliers. Both are solved through a symmetric indefinite
//! factorization of the KKT matrix, and can be re-solved by state
//! elimination as an independent check. Problems are limited to
//! [`MAX_VARIABLES`] primal variables.

mod kkt;
mod ldl;

pub use kkt::{DenseKKT, KktSolution, Layout, MAX_VARIABLES};
pub use ldl::{Inertia, Ldlt};

use nalgebra::DVector;

use crate::error::Result;
use crate::model::{Problem, Trajectory};

/// A QP step unpacked per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    /// `δx_t` for `t = 0..=T`, with `δx_0 = 0`.
    pub dx: Vec<DVector<f64>>,
    pub du: Vec<DVector<f64>>,
    /// Multiplier of `x_{t+1} = f(x_t, u_t)`, indexed by `t`.
    pub multipliers: Vec<DVector<f64>>,
    /// Inertia of the KKT matrix.
    pub inertia: Inertia,
    /// KKT residual of the returned solution (∞-norm).
    pub residual: f64,
    /// First-order change of the cost along the step.
    pub directional_derivative: f64,
}

impl OracleStep {
    fn unpack(kkt: &DenseKKT, sol: &KktSolution) -> OracleStep {
        let layout = kkt.layout;
        let n = layout.state_dim;
        let m = layout.control_dim;
        let mut dx = vec![DVector::zeros(n)];
        let mut du = Vec::with_capacity(layout.horizon);
        let mut multipliers = Vec::with_capacity(layout.horizon);
        for t in 0..layout.horizon {
            du.push(sol.dz.rows(layout.control(t), m).into_owned());
            dx.push(sol.dz.rows(layout.state(t + 1), n).into_owned());
            multipliers.push(sol.multipliers.rows(layout.constraint(t), n).into_owned());
        }
        OracleStep {
            dx,
            du,
            multipliers,
            inertia: sol.inertia,
            residual: sol.residual,
            directional_derivative: kkt.directional_derivative(&sol.dz),
        }
    }

    /// Whether the KKT inertia certifies a strict local minimizer of the QP,
    /// i.e. a reduced Hessian that is positive definite.
    pub fn is_minimizer(&self) -> bool {
        let constraints = self.multipliers.iter().map(|l| l.len()).sum::<usize>();
        let variables = self.du.iter().map(|u| u.len()).sum::<usize>() + constraints;
        self.inertia.zero == 0
            && self.inertia.negative == constraints
            && self.inertia.positive == variables
    }

    /// Stacked `(δu_0, …, δu_{T−1})`.
    pub fn stacked_controls(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.du.iter().map(|u| u.len()).sum(),
            self.du.iter().flat_map(|u| u.iter().copied()),
        )
    }
}

/// Minimizer of the Gauss-Newton QP (cost Hessian, linearized dynamics).
pub fn dense_gauss_newton_step(problem: &Problem, nominal: &Trajectory) -> Result<OracleStep> {
    let kkt = DenseKKT::assemble(problem, nominal, None)?;
    let sol = kkt.solve()?;
    Ok(OracleStep::unpack(&kkt, &sol))
}

/// Stationary point of the Newton QP whose Hessian includes the dynamics
/// curvature contracted with `multipliers` (`multipliers[t]` pairs with
/// `x_{t+1} = f(x_t, u_t)`). The returned multipliers are the updated ones.
/// An indefinite reduced Hessian is not an error; inspect the inertia.
pub fn dense_newton_kkt_step(
    problem: &Problem,
    nominal: &Trajectory,
    multipliers: &[DVector<f64>],
) -> Result<OracleStep> {
    let kkt = DenseKKT::assemble(problem, nominal, Some(multipliers))?;
    let sol = kkt.solve()?;
    Ok(OracleStep::unpack(&kkt, &sol))
}

/// The same steps computed by state elimination instead of factorizing the
/// KKT matrix.
pub fn nullspace_step(
    problem: &Problem,
    nominal: &Trajectory,
    multipliers: Option<&[DVector<f64>]>,
) -> Result<OracleStep> {
    let kkt = DenseKKT::assemble(problem, nominal, multipliers)?;
    let sol = kkt.solve_nullspace()?;
    Ok(OracleStep::unpack(&kkt, &sol))
}
