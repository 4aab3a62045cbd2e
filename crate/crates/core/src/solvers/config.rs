//! Solver configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gauss-Newton backward pass, nonlinear forward pass.
    Ilqr,
    /// Full second-order backward pass contracted with `v_{t+1}`, nonlinear
    /// forward pass.
    Ddp,
    /// Second-order backward pass contracted with the costate recursion,
    /// linearized forward pass.
    Sn,
    /// Stagewise-Newton backward pass with the nonlinear forward pass.
    Mixed,
    /// DDP until the accepted step drops below `alpha_switch`, then iLQR.
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ilqr, Method::Ddp, Method::Sn, Method::Mixed, Method::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ilqr => "ilqr",
            Method::Ddp => "ddp",
            Method::Sn => "sn",
            Method::Mixed => "mixed",
            Method::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Treatment of `Q_uu` before it is factorized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regularization {
    None,
    /// Shift by `(eps_pd − λ_min)·I` when `λ_min ≤ eps_pd`.
    LmShift { eps_pd: f64 },
    /// Add `ρ·I` at every step, with `ρ` adapted across iterations.
    AdaptiveShift {
        rho0: f64,
        rho_inc: f64,
        rho_dec: f64,
        rho_min: f64,
    },
}

impl Regularization {
    pub fn lm_shift() -> Self {
        Regularization::LmShift { eps_pd: 1e-6 }
    }

    pub fn adaptive_shift() -> Self {
        Regularization::AdaptiveShift {
            rho0: 0.0,
            rho_inc: 10.0,
            rho_dec: 2.0,
            rho_min: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularization::None => "none",
            Regularization::LmShift { .. } => "lm_shift",
            Regularization::AdaptiveShift { .. } => "adaptive_shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub max_iters: usize,
    pub alpha0: f64,
    pub backtrack_factor: f64,
    pub alpha_min: f64,
    /// Minimum accepted `ΔJ_actual / ΔJ_pred`.
    pub accept_threshold: f64,
    /// Relative cost-change tolerance.
    pub cost_tol: f64,
    /// Tolerance on `½·reduction_sum`.
    pub reduction_tol: f64,
    pub regularization: Regularization,
    pub alpha_switch: f64,
    /// Invert indefinite `Q_uu` instead of failing (plain unregularized
    /// DDP when combined with `Regularization::None`).
    pub allow_indefinite: bool,
    /// Upper bound on the adaptive shift before the solve is declared stalled.
    pub rho_max: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Ilqr,
            max_iters: 500,
            alpha0: 1.0,
            backtrack_factor: 0.5,
            alpha_min: 1e-8,
            accept_threshold: 0.0,
            cost_tol: 1e-6,
            reduction_tol: 1e-6,
            regularization: Regularization::None,
            alpha_switch: 0.1,
            allow_indefinite: false,
            rho_max: 1e12,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            ..Self::default()
        }
    }

    pub fn with_regularization(mut self, regularization: Regularization) -> Self {
        self.regularization = regularization;
        self
    }

    pub fn allowing_indefinite(mut self) -> Self {
        self.allow_indefinite = true;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad("alpha0 must lie in (0, 1]");
        }
        if !(self.alpha_min > 0.0) {
            return bad("alpha_min must be positive");
        }
        if !(self.cost_tol > 0.0 && self.reduction_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !self.accept_threshold.is_finite() {
            return bad("accept_threshold must be finite");
        }
        if !(self.alpha_switch > 0.0 && self.alpha_switch <= 1.0) {
            return bad("alpha_switch must lie in (0, 1]");
        }
        match self.regularization {
            Regularization::None => {}
            Regularization::LmShift { eps_pd } => {
                if !(eps_pd > 0.0) {
                    return bad("eps_pd must be positive");
                }
            }
            Regularization::AdaptiveShift {
                rho0,
                rho_inc,
                rho_dec,
                rho_min,
            } => {
                if !(rho0 >= 0.0 && rho_inc > 1.0 && rho_dec > 1.0 && rho_min > 0.0) {
                    return bad("adaptive shift needs rho0 >= 0, rho_inc > 1, rho_dec > 1, rho_min > 0");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = SolverConfig::default();
        c.backtrack_factor = 1.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.alpha0 = 1.5;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.cost_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = SolverConfig::new(Method::Hybrid).with_regularization(Regularization::adaptive_shift());
        let text = toml::to_string(&c).unwrap();
        let back: SolverConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
