//! Large discrete-time test problems with closed-form derivatives.
//!
//! * Bilinear: `x' = A x + B u + (xᵀ C u)·γ` with quartic cost
//!   `Σ(x_i + a)⁴ + Σ(u_j + b)⁴`.
//! * Trigonometric: `x'_i = sin x_i + Σ_j F_ij sin u_j` with cost
//!   `‖x‖²(sin(‖u‖²/m) + 1)` and terminal `‖x‖²`.

use nalgebra::{DMatrix, DVector};

use crate::model::{Cost, Dynamics, DynamicsCurvature, StageDerivatives, TerminalDerivatives};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, PartialEq)]
pub struct BilinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub gamma: DVector<f64>,
}

impl BilinearDynamics {
    /// Tridiagonal `A` (0.5 diagonal, +0.25 above, −0.25 below),
    /// `B_ij = (i−j)/(m+n)`, `C_ij = μ(i+j)/(m+n)` with 1-based indices and
    /// `γ = 1`.
    pub fn standard(n: usize, m: usize, mu: f64) -> Self {
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.5
            } else if j == i + 1 {
                0.25
            } else if i == j + 1 {
                -0.25
            } else {
                0.0
            }
        });
        let scale = (m + n) as f64;
        let b = DMatrix::from_fn(n, m, |i, j| (i as f64 - j as f64) / scale);
        let c = DMatrix::from_fn(n, m, |i, j| mu * ((i + 1) + (j + 1)) as f64 / scale);
        BilinearDynamics {
            a,
            b,
            c,
            gamma: DVector::from_element(n, 1.0),
        }
    }
}

impl Dynamics for BilinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let bilinear = x.dot(&(&self.c * u));
        &self.a * x + &self.b * u + &self.gamma * bilinear
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let cu = &self.c * u;
        let ctx = self.c.tr_mul(x);
        (
            &self.a + &self.gamma * cu.transpose(),
            &self.b + &self.gamma * ctx.transpose(),
        )
    }

    fn curvature(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DynamicsCurvature {
        let n = self.state_dim();
        let m = self.control_dim();
        DynamicsCurvature {
            xx: Tensor3::zeros(n, n, n),
            xu: Tensor3::Separable {
                weights: self.gamma.clone(),
                slice: self.c.clone(),
            },
            uu: Tensor3::zeros(n, m, m),
        }
    }
}

/// `Σ_i (x_i + a)⁴ + Σ_j (u_j + b)⁴`, terminal `Σ_i (x_i + a)⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCost {
    pub state_offset: f64,
    pub control_offset: f64,
}

impl QuarticCost {
    pub fn standard() -> Self {
        QuarticCost {
            state_offset: 0.25,
            control_offset: 0.5,
        }
    }
}

fn quartic(v: &DVector<f64>, offset: f64) -> f64 {
    v.iter().map(|x| (x + offset).powi(4)).sum()
}

fn quartic_gradient(v: &DVector<f64>, offset: f64) -> DVector<f64> {
    v.map(|x| 4.0 * (x + offset).powi(3))
}

fn quartic_hessian(v: &DVector<f64>, offset: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&v.map(|x| 12.0 * (x + offset).powi(2)))
}

impl Cost for QuarticCost {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> f64 {
        quartic(x, self.state_offset) + quartic(u, self.control_offset)
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        quartic(x, self.state_offset)
    }

    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> StageDerivatives {
        StageDerivatives {
            c_x: quartic_gradient(x, self.state_offset),
            c_u: quartic_gradient(u, self.control_offset),
            c_xx: quartic_hessian(x, self.state_offset),
            c_xu: DMatrix::zeros(x.len(), u.len()),
            c_uu: quartic_hessian(u, self.control_offset),
        }
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives {
        TerminalDerivatives {
            c_x: quartic_gradient(x, self.state_offset),
            c_xx: quartic_hessian(x, self.state_offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigDynamics {
    pub f: DMatrix<f64>,
}

impl TrigDynamics {
    /// `F_ij = (i+j)/(2n)` with 1-based indices.
    pub fn standard(n: usize, m: usize) -> Self {
        let scale = 2.0 * n as f64;
        TrigDynamics {
            f: DMatrix::from_fn(n, m, |i, j| ((i + 1) + (j + 1)) as f64 / scale),
        }
    }
}

impl Dynamics for TrigDynamics {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    fn control_dim(&self) -> usize {
        self.f.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        x.map(f64::sin) + &self.f * u.map(f64::sin)
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let cos_u = u.map(f64::cos);
        let f_u = DMatrix::from_fn(self.f.nrows(), self.f.ncols(), |i, j| self.f[(i, j)] * cos_u[j]);
        (DMatrix::from_diagonal(&x.map(f64::cos)), f_u)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>) -> DynamicsCurvature {
        let n = self.state_dim();
        let m = self.control_dim();
        let xx = (0..n).map(|i| (i, i, i, -x[i].sin())).collect();
        let mut uu = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                uu.push((i, j, j, -self.f[(i, j)] * u[j].sin()));
            }
        }
        DynamicsCurvature {
            xx: Tensor3::Sparse {
                out: n,
                rows: n,
                cols: n,
                entries: xx,
            },
            xu: Tensor3::zeros(n, n, m),
            uu: Tensor3::Sparse {
                out: n,
                rows: m,
                cols: m,
                entries: uu,
            },
        }
    }
}

/// `‖x‖²(sin(‖u‖²/m) + 1)`, terminal `‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrigCost;

impl Cost for TrigCost {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> f64 {
        let s = u.norm_squared() / u.len() as f64;
        x.norm_squared() * (s.sin() + 1.0)
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> StageDerivatives {
        let n = x.len();
        let m = u.len() as f64;
        let s = u.norm_squared() / m;
        let phi = s.sin() + 1.0;
        let xx = x.norm_squared();
        let ds = u * (2.0 / m);
        let c_uu = (DMatrix::identity(u.len(), u.len()) * (s.cos() * 2.0 / m)
            - u * u.transpose() * (s.sin() * 4.0 / (m * m)))
            * xx;
        StageDerivatives {
            c_x: x * (2.0 * phi),
            c_u: &ds * (xx * s.cos()),
            c_xx: DMatrix::identity(n, n) * (2.0 * phi),
            c_xu: x * ds.transpose() * (2.0 * s.cos()),
            c_uu,
        }
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives {
        TerminalDerivatives {
            c_x: x * 2.0,
            c_xx: DMatrix::identity(x.len(), x.len()) * 2.0,
        }
    }
}
