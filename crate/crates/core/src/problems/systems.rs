//! Continuous vector fields of the held-control benchmarks.

use num_dual::DualNum;
use serde::{Deserialize, Serialize};

use super::euler::VectorField;

/// Damped pendulum, state `[θ, θ̇]`, torque input.
///
/// `θ̈ = (u − m g l sin θ − b θ̇) / (m l²)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pendulum {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.1,
        }
    }
}

impl VectorField for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D> {
        let ml2 = self.mass * self.length * self.length;
        let mgl = self.mass * self.gravity * self.length;
        let acc = (u[0] - x[0].sin() * mgl - x[1] * self.damping) / ml2;
        vec![x[1], acc]
    }
}

/// Cart-pole with force on the cart, state `[p, ṗ, θ, θ̇]` and `θ = 0`
/// upright. `pole_length` is the distance from pivot to the pole's centre
/// of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartPole {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_length: f64,
    pub gravity: f64,
}

impl Default for CartPole {
    fn default() -> Self {
        CartPole {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 0.5,
            gravity: 9.81,
        }
    }
}

impl VectorField for CartPole {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D> {
        let total = self.cart_mass + self.pole_mass;
        let pml = self.pole_mass * self.pole_length;
        let (sin, cos) = (x[2].sin(), x[2].cos());
        let temp = (u[0] + x[3] * x[3] * sin * pml) / total;
        let theta_acc = (sin * self.gravity - cos * temp)
            / ((-(cos * cos) * (self.pole_mass / total) + 4.0 / 3.0) * self.pole_length);
        let p_acc = temp - theta_acc * cos * (pml / total);
        vec![x[1], p_acc, x[3], theta_acc]
    }
}

/// `ẋ = −x³ + u`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubicDecay;

impl VectorField for CubicDecay {
    fn state_dim(&self) -> usize {
        1
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D> {
        vec![u[0] - x[0] * x[0] * x[0]]
    }
}

/// `ẋ = −0.2 x + 10 tanh(u)`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SaturatedInput;

impl VectorField for SaturatedInput {
    fn state_dim(&self) -> usize {
        1
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, x: &[D], u: &[D]) -> Vec<D> {
        vec![u[0].tanh() * 10.0 - x[0] * 0.2]
    }
}
