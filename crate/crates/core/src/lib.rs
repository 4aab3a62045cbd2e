//! Trajectory optimization for discrete-time optimal control.
//!
//! iLQR, DDP and stagewise Newton share one Riccati-style backward pass and
//! differ only in which second-order dynamics terms enter it. Dense
//! quadratic-program solvers provide reference steps for checking them.

pub mod error;
pub mod feedback;
pub mod model;
pub mod oracle;
pub mod problems;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{
    linearize, linearize_with, rollout, Cost, DerivativeOrder, Dynamics, DynamicsCurvature,
    LocalModel, Problem, StageDerivatives, StepModel, TerminalDerivatives, Trajectory,
};
pub use tensor::Tensor3;
