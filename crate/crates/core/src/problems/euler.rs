//! Zero-order-hold discretization of a continuous vector field.
//!
//! One control is held for `k = hold / dt` explicit Euler sub-steps
//! `x ← x + dt·g(x, u)`. Exact first and second derivatives of the composed
//! map are propagated through the sub-steps by the chain rule, with the
//! vector-field derivatives taken by forward-mode automatic differentiation.

use nalgebra::{DMatrix, DVector};
use num_dual::{Dual64, DualNum, HyperDual64};

use crate::model::{split_columns, stack, Dynamics, DynamicsCurvature};

/// Continuous dynamics `ẋ = g(x, u)`, generic over the scalar so that it can
/// be evaluated on dual numbers.
pub trait VectorField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D>;
}

/// `g`, `∂g/∂z` and per-output `∂²g/∂z²` with `z = [x; u]`.
pub struct FieldDerivatives {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub hessians: Vec<DMatrix<f64>>,
}

pub fn field_value<F: VectorField>(field: &F, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(field.eval(x.as_slice(), u.as_slice()))
}

pub fn field_jacobian<F: VectorField>(
    field: &F,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let z = stack(x, u);
    let nz = z.len();
    let mut value = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, nz);
    for j in 0..nz {
        let zd: Vec<Dual64> = z
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual64::new(v, if i == j { 1.0 } else { 0.0 }))
            .collect();
        let out = field.eval(&zd[..n], &zd[n..]);
        for (i, o) in out.iter().enumerate() {
            value[i] = o.re;
            jac[(i, j)] = o.eps;
        }
    }
    (value, jac)
}

pub fn field_derivatives<F: VectorField>(
    field: &F,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> FieldDerivatives {
    let n = x.len();
    let z = stack(x, u);
    let nz = z.len();
    let mut value = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, nz);
    let mut hessians = vec![DMatrix::zeros(nz, nz); n];
    for a in 0..nz {
        for b in a..nz {
            let zd: Vec<HyperDual64> = z
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    HyperDual64::new(
                        v,
                        if i == a { 1.0 } else { 0.0 },
                        if i == b { 1.0 } else { 0.0 },
                        0.0,
                    )
                })
                .collect();
            let out = field.eval(&zd[..n], &zd[n..]);
            for (i, o) in out.iter().enumerate() {
                if a == b {
                    value[i] = o.re;
                    jacobian[(i, a)] = o.eps1;
                }
                hessians[i][(a, b)] = o.eps1eps2;
                hessians[i][(b, a)] = o.eps1eps2;
            }
        }
    }
    FieldDerivatives {
        value,
        jacobian,
        hessians,
    }
}

#[derive(Debug, Clone)]
pub struct EulerHold<F> {
    field: F,
    dt: f64,
    substeps: usize,
}

impl<F: VectorField> EulerHold<F> {
    pub fn new(field: F, dt: f64, substeps: usize) -> Self {
        EulerHold {
            field,
            dt,
            substeps,
        }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// `[J_k; 0 I]`, the derivative of the sub-step input `(x_k, u)` with
    /// respect to the hold input `(x_0, u)`.
    fn input_jacobian(jac: &DMatrix<f64>, n: usize, m: usize) -> DMatrix<f64> {
        let nz = n + m;
        let mut dz = DMatrix::zeros(nz, nz);
        dz.view_mut((0, 0), (n, nz)).copy_from(jac);
        for j in 0..m {
            dz[(n + j, n + j)] = 1.0;
        }
        dz
    }

    fn initial_jacobian(n: usize, m: usize) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(n, n + m);
        for i in 0..n {
            jac[(i, i)] = 1.0;
        }
        jac
    }
}

impl<F: VectorField> Dynamics for EulerHold<F> {
    fn state_dim(&self) -> usize {
        self.field.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.field.control_dim()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut x = x.clone();
        for _ in 0..self.substeps {
            let g = field_value(&self.field, &x, u);
            x += g * self.dt;
        }
        x
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = x.len();
        let m = u.len();
        let mut x = x.clone();
        let mut jac = Self::initial_jacobian(n, m);
        for _ in 0..self.substeps {
            let (g, gz) = field_jacobian(&self.field, &x, u);
            let dz = Self::input_jacobian(&jac, n, m);
            jac += gz * dz * self.dt;
            x += g * self.dt;
        }
        split_columns(&jac, n)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>) -> DynamicsCurvature {
        let n = x.len();
        let m = u.len();
        let nz = n + m;
        let mut x = x.clone();
        let mut jac = Self::initial_jacobian(n, m);
        let mut hess = vec![DMatrix::zeros(nz, nz); n];
        for _ in 0..self.substeps {
            let d = field_derivatives(&self.field, &x, u);
            let dz = Self::input_jacobian(&jac, n, m);
            let mut next = hess.clone();
            for i in 0..n {
                let mut inc = dz.transpose() * &d.hessians[i] * &dz;
                for (j, hj) in hess.iter().enumerate() {
                    let w = d.jacobian[(i, j)];
                    if w != 0.0 {
                        inc += hj * w;
                    }
                }
                next[i] += inc * self.dt;
            }
            hess = next;
            jac += &d.jacobian * dz * self.dt;
            x += d.value * self.dt;
        }
        DynamicsCurvature::from_joint_hessians(&hess, n, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fd;

    /// ẋ₀ = x₁ u, ẋ₁ = sin(x₀) − x₁²
    struct Toy;

    impl VectorField for Toy {
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D> {
            vec![x[1] * u[0], x[0].sin() - x[1] * x[1]]
        }
    }

    fn sample() -> (EulerHold<Toy>, DVector<f64>, DVector<f64>) {
        (
            EulerHold::new(Toy, 0.01, 10),
            DVector::from_vec(vec![0.4, -0.3]),
            DVector::from_vec(vec![1.2]),
        )
    }

    #[test]
    fn chain_rule_jacobian_matches_finite_differences() {
        let (map, x, u) = sample();
        let (fx, fu) = map.jacobians(&x, &u);
        let z = stack(&x, &u);
        let fdj = fd::jacobian(|z| map.step(&z.rows(0, 2).into(), &z.rows(2, 1).into()), &z)
            .unwrap();
        assert!((fx - fdj.columns(0, 2)).amax() < 1e-8);
        assert!((fu - fdj.columns(2, 1)).amax() < 1e-8);
    }

    #[test]
    fn chain_rule_hessians_match_finite_differences() {
        let (map, x, u) = sample();
        let c = map.curvature(&x, &u);
        let z = stack(&x, &u);
        let fdh = fd::hessians(|z| map.step(&z.rows(0, 2).into(), &z.rows(2, 1).into()), &z)
            .unwrap();
        let reference = DynamicsCurvature::from_joint_hessians(&fdh, 2, 1);
        for i in 0..2 {
            assert!((c.xx.slice(i) - reference.xx.slice(i)).amax() < 1e-5);
            assert!((c.xu.slice(i) - reference.xu.slice(i)).amax() < 1e-5);
            assert!((c.uu.slice(i) - reference.uu.slice(i)).amax() < 1e-5);
        }
    }

    #[test]
    fn single_substep_is_one_euler_step() {
        let map = EulerHold::new(Toy, 0.5, 1);
        let x = DVector::from_vec(vec![0.0, 2.0]);
        let u = DVector::from_vec(vec![3.0]);
        let next = map.step(&x, &u);
        assert_eq!(next, DVector::from_vec(vec![3.0, 0.0]));
    }
}
