//! Linear dynamics `x' = A x + B u`.

use nalgebra::{DMatrix, DVector};

use crate::model::{Dynamics, DynamicsCurvature};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearDynamics {
    /// Exact zero-order-hold discretization of a double integrator.
    pub fn double_integrator(hold: f64) -> Self {
        LinearDynamics {
            a: DMatrix::from_row_slice(2, 2, &[1.0, hold, 0.0, 1.0]),
            b: DMatrix::from_row_slice(2, 1, &[0.5 * hold * hold, hold]),
        }
    }
}

impl Dynamics for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }

    fn curvature(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DynamicsCurvature {
        DynamicsCurvature::zeros(self.state_dim(), self.control_dim())
    }
}
