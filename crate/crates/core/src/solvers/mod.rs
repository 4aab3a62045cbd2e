//! iLQR, DDP and stagewise-Newton solvers with their composites.

pub mod backward;
pub mod config;
pub mod forward;
pub mod line_search;
pub mod regularize;
pub mod solve;

pub use backward::{backward_pass, backward_pass_with, QuuInversion, costate_recursion, expected_reduction, q_terms, BackwardKind, GainSchedule, QTerms};
pub use config::{Method, Regularization, SolverConfig};
pub use forward::{forward_linearized, forward_nonlinear, ForwardKind};
pub use line_search::{line_search, LineSearchOutcome};
pub use regularize::{min_eigenvalue, regularize_quu, AdaptiveState};
pub use solve::{solve, IterationRecord, SolveReport, SolveStatus};
