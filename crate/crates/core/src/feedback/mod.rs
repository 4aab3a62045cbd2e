//! Feedback about an optimal trajectory and studies of how well local
//! models predict closed-loop behavior.

mod gains;
mod noise;
mod perturbation;

pub use gains::{neighboring_gains, neighboring_gains_with_tol, FeedbackPolicy, DEFAULT_STATIONARITY_TOL};
pub use noise::{monte_carlo_stabilize, noisy_rollout, trial_rng, NoiseStudyResult, SUCCESS_RADIUS};
pub use perturbation::{perturbation_study, PerturbationRow, PerturbationStudy};
