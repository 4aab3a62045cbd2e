//! Seeded random test instances with closed-form derivatives.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt::problems::costs::QuadraticCost;
use trajopt::{Dynamics, DynamicsCurvature, Problem, Tensor3, Trajectory};

/// `f_i = (Ax)_i + (Bu)_i + g_i sin(x_i) + h_i x_{i+1} u_{i mod m}`, with the
/// state index taken mod `n`.
#[derive(Debug, Clone)]
pub struct CoupledSine {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
}

impl CoupledSine {
    fn partner(&self, i: usize) -> (usize, usize) {
        ((i + 1) % self.a.nrows(), i % self.b.ncols())
    }
}

impl Dynamics for CoupledSine {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut f = &self.a * x + &self.b * u;
        for i in 0..f.len() {
            let (j, k) = self.partner(i);
            f[i] += self.g[i] * x[i].sin() + self.h[i] * x[j] * u[k];
        }
        f
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut fx = self.a.clone();
        let mut fu = self.b.clone();
        for i in 0..fx.nrows() {
            let (j, k) = self.partner(i);
            fx[(i, i)] += self.g[i] * x[i].cos();
            fx[(i, j)] += self.h[i] * u[k];
            fu[(i, k)] += self.h[i] * x[j];
        }
        (fx, fu)
    }

    fn curvature(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DynamicsCurvature {
        let n = self.state_dim();
        let m = self.control_dim();
        let mut xx = vec![DMatrix::zeros(n, n); n];
        let mut xu = vec![DMatrix::zeros(n, m); n];
        for i in 0..n {
            let (j, k) = self.partner(i);
            xx[i][(i, i)] = -self.g[i] * x[i].sin();
            xu[i][(j, k)] = self.h[i];
        }
        DynamicsCurvature {
            xx: Tensor3::Dense(xx),
            xu: Tensor3::Dense(xu),
            uu: Tensor3::zeros(n, m, m),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn positive_definite(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let l = uniform(rng, n, n, 1.0);
    &l * l.transpose() + DMatrix::identity(n, n) * floor
}

/// A random problem with `n ≤ 3`, `m ≤ 2`, `T ≤ 5`, together with random
/// nominal controls.
pub fn random_instance(seed: u64) -> (Problem, Vec<DVector<f64>>) {
    instance(seed, 1.0)
}

/// The same draw as [`random_instance`] with the nonlinear terms removed.
pub fn linear_instance(seed: u64) -> (Problem, Vec<DVector<f64>>) {
    instance(seed, 0.0)
}

fn instance(seed: u64, nonlinearity: f64) -> (Problem, Vec<DVector<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=2);
    let horizon = rng.random_range(1..=5);
    let dynamics = CoupledSine {
        a: DMatrix::identity(n, n) + uniform(&mut rng, n, n, 0.3),
        b: uniform(&mut rng, n, m, 1.0),
        g: DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5) * nonlinearity),
        h: DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5) * nonlinearity),
    };
    let cost = QuadraticCost {
        q: positive_definite(&mut rng, n, 0.1),
        r: positive_definite(&mut rng, m, 0.1),
        q_f: positive_definite(&mut rng, n, 1.0),
        target: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        weight: 1.0,
    };
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let controls = (0..horizon)
        .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let problem = Problem::new("coupled-sine", x0, horizon, Arc::new(dynamics), Arc::new(cost)).unwrap();
    (problem, controls)
}

pub fn stack_controls(controls: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        controls.iter().map(|u| u.len()).sum(),
        controls.iter().flat_map(|u| u.iter().copied()),
    )
}

/// `ū + δu` minus `ū`, stacked.
pub fn control_step(nominal: &Trajectory, controls: &[DVector<f64>]) -> DVector<f64> {
    let du: Vec<DVector<f64>> = controls.iter().zip(&nominal.controls).map(|(u, ub)| u - ub).collect();
    stack_controls(&du)
}
