//! Problem abstraction, trajectories, per-step derivative bundles and the
//! nonlinear rollout shared by every solver.
//!
//! A problem is a discrete-time map `x_{t+1} = f(x_t, u_t)` over `T` steps
//! with total cost `J = Σ_t c(x_t, u_t, t) + C_T(x_T)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problems::fd;
use crate::tensor::Tensor3;

/// Discrete dynamics `x' = f(x, u)` together with its derivatives.
///
/// The derivative methods default to central finite differences of
/// [`Dynamics::step`]; implementors with closed forms override them.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `(f_x, f_u)`
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.state_dim();
        let z = stack(x, u);
        let jac = fd::jacobian(|z| self.step(&z.rows(0, n).into(), &z.rows(n, z.len() - n).into()), &z)
            .unwrap_or_else(|_| DMatrix::from_element(n, z.len(), f64::NAN));
        split_columns(&jac, n)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>) -> DynamicsCurvature {
        let n = self.state_dim();
        let m = self.control_dim();
        let z = stack(x, u);
        match fd::hessians(|z| self.step(&z.rows(0, n).into(), &z.rows(n, m).into()), &z) {
            Ok(h) => DynamicsCurvature::from_joint_hessians(&h, n, m),
            Err(_) => DynamicsCurvature {
                xx: Tensor3::Dense(vec![DMatrix::from_element(n, n, f64::NAN); n]),
                xu: Tensor3::zeros(n, n, m),
                uu: Tensor3::zeros(n, m, m),
            },
        }
    }
}

/// Stage and terminal cost with derivatives (finite differences by default).
pub trait Cost: Send + Sync {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> f64;
    fn terminal(&self, x: &DVector<f64>) -> f64;

    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> StageDerivatives {
        let n = x.len();
        let m = u.len();
        let z = stack(x, u);
        let f = |z: &DVector<f64>| self.stage(&z.rows(0, n).into(), &z.rows(n, m).into(), t);
        let g = fd::gradient(f, &z).unwrap_or_else(|_| DVector::from_element(n + m, f64::NAN));
        let h = fd::hessian(f, &z).unwrap_or_else(|_| DMatrix::from_element(n + m, n + m, f64::NAN));
        StageDerivatives {
            c_x: g.rows(0, n).into(),
            c_u: g.rows(n, m).into(),
            c_xx: h.view((0, 0), (n, n)).into(),
            c_xu: h.view((0, n), (n, m)).into(),
            c_uu: h.view((n, n), (m, m)).into(),
        }
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives {
        let n = x.len();
        let f = |x: &DVector<f64>| self.terminal(x);
        TerminalDerivatives {
            c_x: fd::gradient(f, x).unwrap_or_else(|_| DVector::from_element(n, f64::NAN)),
            c_xx: fd::hessian(f, x).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN)),
        }
    }
}

/// Second-order dynamics tensors `f_xx (n×n×n)`, `f_xu (n×n×m)`, `f_uu (n×m×m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsCurvature {
    pub xx: Tensor3,
    pub xu: Tensor3,
    pub uu: Tensor3,
}

impl DynamicsCurvature {
    pub fn zeros(n: usize, m: usize) -> Self {
        DynamicsCurvature {
            xx: Tensor3::zeros(n, n, n),
            xu: Tensor3::zeros(n, n, m),
            uu: Tensor3::zeros(n, m, m),
        }
    }

    /// Split per-output Hessians with respect to `z = [x; u]` into blocks.
    pub fn from_joint_hessians(hessians: &[DMatrix<f64>], n: usize, m: usize) -> Self {
        let xx = hessians.iter().map(|h| h.view((0, 0), (n, n)).into()).collect();
        let xu = hessians.iter().map(|h| h.view((0, n), (n, m)).into()).collect();
        let uu = hessians.iter().map(|h| h.view((n, n), (m, m)).into()).collect();
        DynamicsCurvature {
            xx: Tensor3::Dense(xx),
            xu: Tensor3::Dense(xu),
            uu: Tensor3::Dense(uu),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xu.is_finite() && self.uu.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageDerivatives {
    pub c_x: DVector<f64>,
    pub c_u: DVector<f64>,
    pub c_xx: DMatrix<f64>,
    /// `∂²c/∂x∂u`, shape n×m.
    pub c_xu: DMatrix<f64>,
    pub c_uu: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDerivatives {
    pub c_x: DVector<f64>,
    pub c_xx: DMatrix<f64>,
}

/// Continuous-time bookkeeping for problems built from a vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldTiming {
    pub t_final: f64,
    /// Euler sub-step.
    pub dt: f64,
    /// Zero-order control hold.
    pub hold: f64,
}

/// Immutable problem definition; cheap to clone and safe to share.
#[derive(Clone)]
pub struct Problem {
    name: String,
    x0: DVector<f64>,
    horizon: usize,
    dynamics: Arc<dyn Dynamics>,
    cost: Arc<dyn Cost>,
    target: Option<DVector<f64>>,
    timing: Option<HoldTiming>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.state_dim())
            .field("m", &self.control_dim())
            .field("horizon", &self.horizon)
            .field("timing", &self.timing)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        x0: DVector<f64>,
        horizon: usize,
        dynamics: Arc<dyn Dynamics>,
        cost: Arc<dyn Cost>,
    ) -> Result<Self> {
        let n = dynamics.state_dim();
        let m = dynamics.control_dim();
        if n == 0 || m == 0 || horizon == 0 {
            return Err(Error::Dimension(format!(
                "need n, m, T >= 1 (got n={n}, m={m}, T={horizon})"
            )));
        }
        if x0.len() != n {
            return Err(Error::Dimension(format!("x0 has length {} but n = {n}", x0.len())));
        }
        Ok(Problem {
            name: name.into(),
            x0,
            horizon,
            dynamics,
            cost,
            target: None,
            timing: None,
        })
    }

    /// Goal state used by terminal-error checks.
    pub fn with_target(mut self, target: DVector<f64>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_timing(mut self, timing: HoldTiming) -> Self {
        self.timing = Some(timing);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }
    pub fn control_dim(&self) -> usize {
        self.dynamics.control_dim()
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }
    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }
    pub fn cost(&self) -> &dyn Cost {
        self.cost.as_ref()
    }
    pub fn target(&self) -> Option<&DVector<f64>> {
        self.target.as_ref()
    }
    pub fn timing(&self) -> Option<HoldTiming> {
        self.timing
    }

    pub fn check_controls(&self, controls: &[DVector<f64>]) -> Result<()> {
        if controls.len() != self.horizon {
            return Err(Error::Dimension(format!(
                "expected {} controls, got {}",
                self.horizon,
                controls.len()
            )));
        }
        let m = self.control_dim();
        if let Some((t, u)) = controls.iter().enumerate().find(|(_, u)| u.len() != m) {
            return Err(Error::Dimension(format!(
                "control {t} has dimension {} but m = {m}",
                u.len()
            )));
        }
        Ok(())
    }

    /// `Σ_t c(x_t, u_t, t) + C_T(x_T)` for an arbitrary (not necessarily feasible) pair.
    pub fn total_cost(&self, states: &[DVector<f64>], controls: &[DVector<f64>]) -> f64 {
        let stage: f64 = controls
            .iter()
            .zip(states)
            .enumerate()
            .map(|(t, (u, x))| self.cost.stage(x, u, t))
            .sum();
        stage + self.cost.terminal(&states[controls.len()])
    }
}

/// A dynamically feasible state/control sequence and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub cost: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least x0")
    }
}

/// Propagate the dynamics from `x0` under `controls`.
///
/// Stops at the first non-finite state so a line search can treat the
/// candidate as rejected.
pub fn rollout(problem: &Problem, controls: &[DVector<f64>]) -> Result<Trajectory> {
    problem.check_controls(controls)?;
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(problem.x0().clone());
    for (t, u) in controls.iter().enumerate() {
        let next = problem.dynamics().step(&states[t], u);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t + 1 });
        }
        states.push(next);
    }
    let cost = problem.total_cost(&states, controls);
    if !cost.is_finite() {
        return Err(Error::Divergence { step: controls.len() });
    }
    Ok(Trajectory {
        states,
        controls: controls.to_vec(),
        cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    /// Jacobians of the dynamics and full cost derivatives.
    First,
    /// Additionally the dynamics tensors.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepModel {
    pub f_x: DMatrix<f64>,
    pub f_u: DMatrix<f64>,
    pub curvature: Option<DynamicsCurvature>,
    pub cost: StageDerivatives,
}

/// Derivatives of dynamics and cost along a nominal trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub steps: Vec<StepModel>,
    pub terminal: TerminalDerivatives,
}

impl LocalModel {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn state_dim(&self) -> usize {
        self.terminal.c_x.len()
    }

    pub fn control_dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.f_u.ncols())
    }

    pub fn has_curvature(&self) -> bool {
        self.steps.iter().all(|s| s.curvature.is_some())
    }
}

/// Full second-order model along `nominal`.
pub fn linearize(problem: &Problem, nominal: &Trajectory) -> Result<LocalModel> {
    linearize_with(problem, nominal, DerivativeOrder::Second)
}

pub fn linearize_with(
    problem: &Problem,
    nominal: &Trajectory,
    order: DerivativeOrder,
) -> Result<LocalModel> {
    problem.check_controls(&nominal.controls)?;
    if nominal.states.len() != nominal.controls.len() + 1 {
        return Err(Error::Dimension("states must have length T + 1".into()));
    }
    let dynamics = problem.dynamics();
    let cost = problem.cost();
    let mut steps = Vec::with_capacity(nominal.horizon());
    for (t, (x, u)) in nominal.states.iter().zip(&nominal.controls).enumerate() {
        let (f_x, f_u) = dynamics.jacobians(x, u);
        check_finite(f_x.iter(), t, "f_x")?;
        check_finite(f_u.iter(), t, "f_u")?;
        let curvature = match order {
            DerivativeOrder::First => None,
            DerivativeOrder::Second => {
                let c = dynamics.curvature(x, u);
                if !c.xx.is_finite() {
                    return Err(Error::NonFiniteDerivative { step: t, block: "f_xx" });
                }
                if !c.xu.is_finite() {
                    return Err(Error::NonFiniteDerivative { step: t, block: "f_xu" });
                }
                if !c.uu.is_finite() {
                    return Err(Error::NonFiniteDerivative { step: t, block: "f_uu" });
                }
                Some(DynamicsCurvature {
                    xx: c.xx.symmetrized(),
                    xu: c.xu,
                    uu: c.uu.symmetrized(),
                })
            }
        };
        let mut c = cost.stage_derivatives(x, u, t);
        check_finite(c.c_x.iter(), t, "c_x")?;
        check_finite(c.c_u.iter(), t, "c_u")?;
        check_finite(c.c_xx.iter(), t, "c_xx")?;
        check_finite(c.c_xu.iter(), t, "c_xu")?;
        check_finite(c.c_uu.iter(), t, "c_uu")?;
        c.c_xx = symmetric_part(&c.c_xx);
        c.c_uu = symmetric_part(&c.c_uu);
        steps.push(StepModel {
            f_x,
            f_u,
            curvature,
            cost: c,
        });
    }
    let horizon = nominal.horizon();
    let mut terminal = cost.terminal_derivatives(nominal.final_state());
    check_finite(terminal.c_x.iter(), horizon, "C_Tx")?;
    check_finite(terminal.c_xx.iter(), horizon, "C_Txx")?;
    terminal.c_xx = symmetric_part(&terminal.c_xx);
    Ok(LocalModel { steps, terminal })
}

fn check_finite<'a>(
    mut values: impl Iterator<Item = &'a f64>,
    step: usize,
    block: &'static str,
) -> Result<()> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteDerivative { step, block })
    }
}

pub(crate) fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub(crate) fn stack(x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(x.len() + u.len());
    z.rows_mut(0, x.len()).copy_from(x);
    z.rows_mut(x.len(), u.len()).copy_from(u);
    z
}

pub(crate) fn split_columns(jac: &DMatrix<f64>, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = jac.ncols() - n;
    (jac.columns(0, n).into(), jac.columns(n, m).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x, u) = x, zero cost.
    struct Identity;

    impl Dynamics for Identity {
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
    }

    struct ZeroCost;

    impl Cost for ZeroCost {
        fn stage(&self, _x: &DVector<f64>, _u: &DVector<f64>, _t: usize) -> f64 {
            0.0
        }
        fn terminal(&self, _x: &DVector<f64>) -> f64 {
            0.0
        }
    }

    struct Blowup;

    impl Dynamics for Blowup {
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
            x.map(|v| v * 1e200)
        }
    }

    fn identity_problem() -> Problem {
        Problem::new(
            "identity",
            DVector::from_vec(vec![1.5, -2.0]),
            4,
            Arc::new(Identity),
            Arc::new(ZeroCost),
        )
        .unwrap()
    }

    #[test]
    fn identity_rollout_keeps_x0() {
        let p = identity_problem();
        let controls = vec![DVector::from_element(1, 3.0); 4];
        let traj = rollout(&p, &controls).unwrap();
        assert!(traj.states.iter().all(|x| x == p.x0()));
        assert_eq!(traj.cost, 0.0);
    }

    #[test]
    fn rollout_rejects_bad_dimensions() {
        let p = identity_problem();
        assert!(matches!(
            rollout(&p, &vec![DVector::zeros(1); 3]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            rollout(&p, &vec![DVector::zeros(2); 4]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rollout_reports_divergence_step() {
        let p = Problem::new(
            "blowup",
            DVector::from_element(1, 1.0),
            5,
            Arc::new(Blowup),
            Arc::new(ZeroCost),
        )
        .unwrap();
        let err = rollout(&p, &vec![DVector::zeros(1); 5]).unwrap_err();
        assert_eq!(err, Error::Divergence { step: 2 });
    }

    #[test]
    fn problem_rejects_degenerate_sizes() {
        let err = Problem::new(
            "bad",
            DVector::zeros(2),
            0,
            Arc::new(Identity),
            Arc::new(ZeroCost),
        );
        assert!(err.is_err());
        let err = Problem::new(
            "bad",
            DVector::zeros(3),
            2,
            Arc::new(Identity),
            Arc::new(ZeroCost),
        );
        assert!(err.is_err());
    }

    #[test]
    fn default_fd_jacobians_of_identity() {
        let (fx, fu) = Identity.jacobians(&DVector::from_vec(vec![0.3, 0.1]), &DVector::zeros(1));
        assert!((fx - DMatrix::identity(2, 2)).amax() < 1e-9);
        assert!(fu.amax() < 1e-9);
    }
}
