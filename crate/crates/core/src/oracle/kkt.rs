//! Dense assembly of the horizon-wide equality-constrained QP.
//!
//! Decision variables are ordered step by step as
//! `z = (u_0, x_1, u_1, x_2, …, u_{T−1}, x_T)`; the initial state is fixed.
//! Constraint block `t` is `h_t = f(x_t, u_t) − x_{t+1}`, so with the
//! Lagrangian `g + Λᵀh` the multiplier of block `t` coincides with the
//! costate at step `t + 1`.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use super::ldl::{Inertia, Ldlt};
use crate::error::{Error, Result};
use crate::model::{linearize_with, DerivativeOrder, LocalModel, Problem, Trajectory};

/// Largest number of primal variables the oracle accepts.
pub const MAX_VARIABLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub state_dim: usize,
    pub control_dim: usize,
    pub horizon: usize,
}

impl Layout {
    pub fn variables(&self) -> usize {
        self.horizon * (self.state_dim + self.control_dim)
    }

    pub fn constraints(&self) -> usize {
        self.horizon * self.state_dim
    }

    /// Offset of `u_t`.
    pub fn control(&self, t: usize) -> usize {
        t * (self.state_dim + self.control_dim)
    }

    /// Offset of `x_t` for `1 ≤ t ≤ T`.
    pub fn state(&self, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon);
        (t - 1) * (self.state_dim + self.control_dim) + self.control_dim
    }

    /// Offset of constraint block `t`.
    pub fn constraint(&self, t: usize) -> usize {
        t * self.state_dim
    }

    pub fn state_columns(&self) -> Vec<usize> {
        (1..=self.horizon)
            .flat_map(|t| (0..self.state_dim).map(move |i| self.state(t) + i))
            .collect()
    }

    pub fn control_columns(&self) -> Vec<usize> {
        (0..self.horizon)
            .flat_map(|t| (0..self.control_dim).map(move |i| self.control(t) + i))
            .collect()
    }
}

/// `min gᵀδz + ½ δzᵀHδz  s.t.  Aδz + r = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKKT {
    pub layout: Layout,
    pub h: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub g: DVector<f64>,
    pub r: DVector<f64>,
}

impl DenseKKT {
    /// Assembles the QP at `nominal`. With `multipliers` the Hessian is the
    /// full Lagrangian Hessian `g_zz + Λ̄ ⊗ h_zz`, otherwise the cost Hessian.
    pub fn assemble(
        problem: &Problem,
        nominal: &Trajectory,
        multipliers: Option<&[DVector<f64>]>,
    ) -> Result<DenseKKT> {
        let layout = Layout {
            state_dim: problem.state_dim(),
            control_dim: problem.control_dim(),
            horizon: problem.horizon(),
        };
        if layout.variables() > MAX_VARIABLES {
            return Err(Error::Oracle(format!(
                "{} variables exceed the dense limit of {MAX_VARIABLES}",
                layout.variables()
            )));
        }
        if let Some(lam) = multipliers {
            if lam.len() != layout.horizon || lam.iter().any(|l| l.len() != layout.state_dim) {
                return Err(Error::Dimension(format!(
                    "expected {} multiplier vectors of length {}",
                    layout.horizon, layout.state_dim
                )));
            }
        }
        let order = if multipliers.is_some() {
            DerivativeOrder::Second
        } else {
            DerivativeOrder::First
        };
        let model = linearize_with(problem, nominal, order)?;
        let mut kkt = Self::from_model(layout, &model, multipliers);
        for t in 0..layout.horizon {
            let next = problem
                .dynamics()
                .step(&nominal.states[t], &nominal.controls[t]);
            let gap = next - &nominal.states[t + 1];
            kkt.r.rows_mut(layout.constraint(t), layout.state_dim).copy_from(&gap);
        }
        Ok(kkt)
    }

    fn from_model(layout: Layout, model: &LocalModel, multipliers: Option<&[DVector<f64>]>) -> DenseKKT {
        let Layout {
            state_dim: n,
            control_dim: m,
            horizon,
        } = layout;
        let nz = layout.variables();
        let mut h = DMatrix::zeros(nz, nz);
        let mut a = DMatrix::zeros(layout.constraints(), nz);
        let mut g = DVector::zeros(nz);

        for (t, step) in model.steps.iter().enumerate() {
            let mut hxx = step.cost.c_xx.clone();
            let mut hxu = step.cost.c_xu.clone();
            let mut huu = step.cost.c_uu.clone();
            if let (Some(lam), Some(curv)) = (multipliers, &step.curvature) {
                hxx += curv.xx.contract(&lam[t]);
                hxu += curv.xu.contract(&lam[t]);
                huu += curv.uu.contract(&lam[t]);
            }
            let iu = layout.control(t);
            h.view_mut((iu, iu), (m, m)).add_assign(&huu);
            g.rows_mut(iu, m).add_assign(&step.cost.c_u);
            if t > 0 {
                let ix = layout.state(t);
                h.view_mut((ix, ix), (n, n)).add_assign(&hxx);
                h.view_mut((ix, iu), (n, m)).add_assign(&hxu);
                h.view_mut((iu, ix), (m, n)).add_assign(&hxu.transpose());
                g.rows_mut(ix, n).add_assign(&step.cost.c_x);
                a.view_mut((layout.constraint(t), ix), (n, n)).copy_from(&step.f_x);
            }
            let row = layout.constraint(t);
            a.view_mut((row, iu), (n, m)).copy_from(&step.f_u);
            let next = layout.state(t + 1);
            for i in 0..n {
                a[(row + i, next + i)] = -1.0;
            }
        }
        let ix = layout.state(horizon);
        h.view_mut((ix, ix), (n, n)).add_assign(&model.terminal.c_xx);
        g.rows_mut(ix, n).add_assign(&model.terminal.c_x);
        DenseKKT {
            layout,
            h,
            a,
            g,
            r: DVector::zeros(layout.constraints()),
        }
    }

    /// The saddle-point matrix `[H Aᵀ; A 0]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let nz = self.h.nrows();
        let nc = self.a.nrows();
        let mut k = DMatrix::zeros(nz + nc, nz + nc);
        k.view_mut((0, 0), (nz, nz)).copy_from(&self.h);
        k.view_mut((nz, 0), (nc, nz)).copy_from(&self.a);
        k.view_mut((0, nz), (nz, nc)).copy_from(&self.a.transpose());
        k
    }

    /// `max(‖g + Hδz + AᵀΛ‖∞, ‖Aδz + r‖∞)`.
    pub fn residual(&self, dz: &DVector<f64>, multipliers: &DVector<f64>) -> f64 {
        let stationarity = &self.g + &self.h * dz + self.a.transpose() * multipliers;
        let feasibility = &self.a * dz + &self.r;
        stationarity.amax().max(feasibility.amax())
    }

    /// First-order change of the objective along `dz`.
    pub fn directional_derivative(&self, dz: &DVector<f64>) -> f64 {
        self.g.dot(dz)
    }

    /// Solves the KKT system by the symmetric indefinite factorization.
    pub fn solve(&self) -> Result<KktSolution> {
        let nz = self.h.nrows();
        let factor = Ldlt::factor(&self.matrix())?;
        let inertia = factor.inertia();
        let rhs = DVector::from_iterator(
            nz + self.a.nrows(),
            self.g.iter().chain(self.r.iter()).map(|v| -v),
        );
        let sol = factor.solve(&rhs)?;
        let dz = sol.rows(0, nz).into_owned();
        let multipliers = sol.rows(nz, self.a.nrows()).into_owned();
        let residual = self.residual(&dz, &multipliers);
        Ok(KktSolution {
            dz,
            multipliers,
            inertia,
            residual,
        })
    }

    /// Solves the same QP by eliminating the states: the columns of `A`
    /// belonging to states form an invertible block `A_x`, so
    /// `Z = [I; −A_x⁻¹A_u]` spans the null space of `A`.
    pub fn solve_nullspace(&self) -> Result<KktSolution> {
        let xs = self.layout.state_columns();
        let us = self.layout.control_columns();
        let nz = self.h.nrows();
        let a_x = self.a.select_columns(&xs);
        let a_u = self.a.select_columns(&us);
        let lu_x = a_x.clone().lu();
        let singular = || Error::Oracle("state block of the constraint Jacobian is singular".into());
        let x_of_u = -lu_x.solve(&a_u).ok_or_else(singular)?;
        let x_particular = -lu_x.solve(&self.r).ok_or_else(singular)?;

        let mut basis = DMatrix::zeros(nz, us.len());
        let mut particular = DVector::zeros(nz);
        for (j, &c) in us.iter().enumerate() {
            basis[(c, j)] = 1.0;
        }
        for (i, &c) in xs.iter().enumerate() {
            basis.row_mut(c).copy_from(&x_of_u.row(i));
            particular[c] = x_particular[i];
        }

        let reduced = basis.transpose() * &self.h * &basis;
        let reduced_rhs = -(basis.transpose() * (&self.g + &self.h * &particular));
        let du = reduced
            .clone()
            .lu()
            .solve(&reduced_rhs)
            .ok_or_else(|| Error::Oracle("reduced Hessian is singular".into()))?;
        let dz = particular + &basis * du;

        let grad = &self.g + &self.h * &dz;
        let grad_x = DVector::from_iterator(xs.len(), xs.iter().map(|&c| grad[c]));
        let multipliers = -a_x
            .transpose()
            .lu()
            .solve(&grad_x)
            .ok_or_else(singular)?;
        let residual = self.residual(&dz, &multipliers);
        let eig = reduced.symmetric_eigenvalues();
        let tol = 1e3 * f64::EPSILON * eig.amax().max(f64::MIN_POSITIVE) * eig.len() as f64;
        let positive = eig.iter().filter(|&&v| v > tol).count();
        let negative = eig.iter().filter(|&&v| v < -tol).count();
        // Inertia of the saddle-point matrix equals that of the reduced
        // Hessian plus one positive and one negative eigenvalue per
        // constraint.
        let inertia = Inertia {
            positive: positive + xs.len(),
            negative: negative + xs.len(),
            zero: eig.len() - positive - negative,
        };
        Ok(KktSolution {
            dz,
            multipliers,
            inertia,
            residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub dz: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub inertia: Inertia,
    pub residual: f64,
}
