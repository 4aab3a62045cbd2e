//! Closed-loop rollouts of a feedback policy under additive state noise.
//!
//! Trial `i` draws its noise from a ChaCha8 generator seeded with `seed` and
//! switched to stream `i`, so a trial's noise does not depend on which other
//! trials are run or in which order.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::gains::FeedbackPolicy;
use crate::error::{Error, Result};
use crate::model::Problem;

/// A trial succeeds when `‖x_T − x_f‖₂` is below this radius.
pub const SUCCESS_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStudyResult {
    pub sigma: f64,
    pub trials: usize,
    pub successes: usize,
    /// Trials whose state became non-finite; they count as failures and are
    /// left out of the envelopes.
    pub diverged: usize,
    pub success_rate: f64,
    pub seed: u64,
    /// Per-step state mean over the finite trials, `T + 1` entries.
    pub mean: Vec<DVector<f64>>,
    /// Per-step sample standard deviation, `T + 1` entries.
    pub std_dev: Vec<DVector<f64>>,
}

impl NoiseStudyResult {
    /// `mean − 3σ` per step.
    pub fn lower_envelope(&self) -> Vec<DVector<f64>> {
        self.mean.iter().zip(&self.std_dev).map(|(m, s)| m - s * 3.0).collect()
    }

    /// `mean + 3σ` per step.
    pub fn upper_envelope(&self) -> Vec<DVector<f64>> {
        self.mean.iter().zip(&self.std_dev).map(|(m, s)| m + s * 3.0).collect()
    }
}

/// Noise stream for one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// States of one closed-loop trial, or `None` if it diverged.
pub fn noisy_rollout(
    problem: &Problem,
    policy: &FeedbackPolicy,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<DVector<f64>>> {
    let n = problem.state_dim();
    let mut states = Vec::with_capacity(policy.horizon() + 1);
    states.push(problem.x0().clone());
    for t in 0..policy.horizon() {
        let x = &states[t];
        let u = policy.control(t, x);
        let w = DVector::from_fn(n, |_, _| noise.sample(rng));
        let next = problem.dynamics().step(x, &u) + w;
        if next.iter().any(|v| !v.is_finite()) {
            return None;
        }
        states.push(next);
    }
    Some(states)
}

pub fn monte_carlo_stabilize(
    problem: &Problem,
    policy: &FeedbackPolicy,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseStudyResult> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise standard deviation must be finite and non-negative, got {sigma}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let target = problem
        .target()
        .ok_or_else(|| Error::InvalidConfig(format!("problem `{}` has no target state", problem.name())))?
        .clone();
    if policy.horizon() != problem.horizon() {
        return Err(Error::Dimension(format!(
            "policy has {} steps, problem has {}",
            policy.horizon(),
            problem.horizon()
        )));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let n = problem.state_dim();
    let steps = policy.horizon() + 1;
    let mut mean = vec![DVector::zeros(n); steps];
    let mut m2 = vec![DVector::zeros(n); steps];
    let mut finite = 0usize;
    let mut successes = 0;
    let mut diverged = 0;

    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let Some(states) = noisy_rollout(problem, policy, &noise, &mut rng) else {
            diverged += 1;
            continue;
        };
        if (&states[steps - 1] - &target).norm() < SUCCESS_RADIUS {
            successes += 1;
        }
        // Welford update in trial order.
        finite += 1;
        for (t, x) in states.iter().enumerate() {
            let delta = x - &mean[t];
            mean[t] += &delta / finite as f64;
            let delta2 = x - &mean[t];
            m2[t] += delta.component_mul(&delta2);
        }
    }
    let std_dev = m2
        .iter()
        .map(|s| {
            if finite > 1 {
                (s / (finite - 1) as f64).map(f64::sqrt)
            } else {
                DVector::zeros(n)
            }
        })
        .collect();
    Ok(NoiseStudyResult {
        sigma,
        trials,
        successes,
        diverged,
        success_rate: successes as f64 / trials as f64,
        seed,
        mean,
        std_dev,
    })
}
