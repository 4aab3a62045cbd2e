//! Quadratic tracking cost used by the held-control benchmarks and the
//! linear test problem.

use nalgebra::{DMatrix, DVector};

use crate::model::{Cost, StageDerivatives, TerminalDerivatives};

/// `c = ½[(x−x_f)ᵀQ(x−x_f) + uᵀRu]·w`, `C_T = ½(x−x_f)ᵀQ_f(x−x_f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_f: DMatrix<f64>,
    pub target: DVector<f64>,
    pub weight: f64,
}

impl Cost for QuadraticCost {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> f64 {
        let e = x - &self.target;
        0.5 * (e.dot(&(&self.q * &e)) + u.dot(&(&self.r * u))) * self.weight
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        let e = x - &self.target;
        0.5 * e.dot(&(&self.q_f * &e))
    }

    fn stage_derivatives(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> StageDerivatives {
        let e = x - &self.target;
        StageDerivatives {
            c_x: &self.q * e * self.weight,
            c_u: &self.r * u * self.weight,
            c_xx: &self.q * self.weight,
            c_xu: DMatrix::zeros(x.len(), u.len()),
            c_uu: &self.r * self.weight,
        }
    }

    fn terminal_derivatives(&self, x: &DVector<f64>) -> TerminalDerivatives {
        TerminalDerivatives {
            c_x: &self.q_f * (x - &self.target),
            c_xx: self.q_f.clone(),
        }
    }
}
