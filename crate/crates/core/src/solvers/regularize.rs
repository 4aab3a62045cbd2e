//! Shifts applied to `Q_uu` before factorization.

use nalgebra::DMatrix;

use super::config::Regularization;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)];
    }
    a.clone().symmetric_eigenvalues().min()
}

/// Returns the shifted matrix and the shift `β` in `Q_uu + β·I`.
///
/// `rho` is the current adaptive multiplier and is ignored by the other
/// schemes.
pub fn regularize_quu(quu: &DMatrix<f64>, scheme: &Regularization, rho: f64) -> (DMatrix<f64>, f64) {
    let shift = match *scheme {
        Regularization::None => 0.0,
        Regularization::LmShift { eps_pd } => {
            let lambda_min = min_eigenvalue(quu);
            if lambda_min <= eps_pd {
                eps_pd - lambda_min
            } else {
                0.0
            }
        }
        Regularization::AdaptiveShift { .. } => rho,
    };
    if shift == 0.0 {
        return (quu.clone(), 0.0);
    }
    let mut shifted = quu.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += shift;
    }
    (shifted, shift)
}

/// Persistent multiplier of the adaptive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub rho: f64,
}

impl AdaptiveState {
    pub fn new(scheme: &Regularization) -> Self {
        match *scheme {
            Regularization::AdaptiveShift { rho0, .. } => AdaptiveState { rho: rho0 },
            _ => AdaptiveState { rho: 0.0 },
        }
    }

    pub fn increase(&mut self, scheme: &Regularization) {
        if let Regularization::AdaptiveShift {
            rho_inc, rho_min, ..
        } = *scheme
        {
            self.rho = (self.rho * rho_inc).max(rho_min);
        }
    }

    pub fn decrease(&mut self, scheme: &Regularization) {
        if let Regularization::AdaptiveShift {
            rho_dec, rho_min, ..
        } = *scheme
        {
            self.rho /= rho_dec;
            if self.rho < rho_min {
                self.rho = 0.0;
            }
        }
    }
}
