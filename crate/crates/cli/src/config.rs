//! Merging of config files, built-in defaults and flags.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use trajopt::problems::{random_controls, starting_controls, BenchmarkName, BenchmarkSpec};
use trajopt::solvers::{Regularization, SolverConfig};
use trajopt::Problem;

use crate::args::{CommonFlags, RegScheme, SolverFlags};
use crate::UsageError;

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: Option<SolverConfig>,
    pub problem: Option<BenchmarkSpec>,
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, UsageError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
    if let Some(spec) = &config.problem {
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
    }
    Ok(config)
}

pub fn regularization(scheme: RegScheme) -> Regularization {
    match scheme {
        RegScheme::None => Regularization::None,
        RegScheme::LmShift => Regularization::lm_shift(),
        RegScheme::AdaptiveShift => Regularization::adaptive_shift(),
    }
}

/// Applies the flags that were given on top of `base`.
pub fn apply_flags(mut config: SolverConfig, flags: &SolverFlags, seed: Option<u64>) -> Result<SolverConfig, UsageError> {
    if let Some(scheme) = flags.reg_scheme {
        config.regularization = regularization(scheme);
    }
    if flags.allow_indefinite {
        config.allow_indefinite = true;
    }
    if let Some(v) = flags.max_iters {
        config.max_iters = v;
    }
    if let Some(v) = flags.tol {
        config.cost_tol = v;
        config.reduction_tol = v;
    }
    if let Some(v) = flags.alpha0 {
        config.alpha0 = v;
    }
    if let Some(v) = flags.backtrack_factor {
        config.backtrack_factor = v;
    }
    if let Some(v) = flags.alpha_switch {
        config.alpha_switch = v;
    }
    if let Some(v) = seed {
        config.seed = v;
    }
    config.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(config)
}

/// The config file's problem if it matches `name` (or no name was given),
/// otherwise the built-in spec.
pub fn resolve_spec(file: &RunConfig, name: Option<BenchmarkName>) -> Result<BenchmarkSpec, UsageError> {
    match (&file.problem, name) {
        (Some(spec), Some(n)) if spec.name != n => Err(UsageError(format!(
            "--problem {n} conflicts with the config file's problem {}",
            spec.name
        ))),
        (Some(spec), _) => Ok(spec.clone()),
        (None, Some(n)) => Ok(BenchmarkSpec::builtin(n)),
        (None, None) => Err(UsageError("--problem is required without a [problem] table in --config".into())),
    }
}

pub fn build(spec: &BenchmarkSpec) -> Result<Problem, UsageError> {
    trajopt::problems::build_benchmark(spec).map_err(|e| UsageError(e.to_string()))
}

/// Tabulated starting point, or uniform random controls from `--seed` and
/// `--u-scale` (defaults 0 and 1).
pub fn initial_controls(
    spec: &BenchmarkSpec,
    problem: &Problem,
    start_point: Option<u8>,
    common: &CommonFlags,
) -> Result<Vec<DVector<f64>>, UsageError> {
    match start_point {
        Some(id) => starting_controls(spec.name, id, problem.horizon(), problem.control_dim())
            .map_err(|e| UsageError(e.to_string())),
        None => {
            let scale = common.u_scale.unwrap_or(1.0);
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(UsageError(format!("--u-scale must be finite and non-negative, got {scale}")));
            }
            Ok(random_controls(
                problem.horizon(),
                problem.control_dim(),
                scale,
                common.seed.unwrap_or(0),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trips() {
        let config = RunConfig {
            solver: Some(SolverConfig::default()),
            problem: Some(BenchmarkSpec::builtin(BenchmarkName::LqrTest)),
        };
        let text = toml::to_string(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_tables_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[solvr]\nmax_iters = 3\n").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let base = SolverConfig {
            max_iters: 7,
            ..SolverConfig::default()
        };
        let flags = SolverFlags {
            tol: Some(1e-9),
            reg_scheme: Some(RegScheme::LmShift),
            ..SolverFlags::default()
        };
        let c = apply_flags(base, &flags, Some(3)).unwrap();
        assert_eq!(c.max_iters, 7);
        assert_eq!(c.cost_tol, 1e-9);
        assert_eq!(c.reduction_tol, 1e-9);
        assert_eq!(c.regularization, Regularization::lm_shift());
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let flags = SolverFlags {
            backtrack_factor: Some(1.5),
            ..SolverFlags::default()
        };
        assert!(apply_flags(SolverConfig::default(), &flags, None).is_err());
    }

    #[test]
    fn conflicting_problem_names_are_rejected() {
        let file = RunConfig {
            solver: None,
            problem: Some(BenchmarkSpec::builtin(BenchmarkName::Pendulum)),
        };
        assert!(resolve_spec(&file, Some(BenchmarkName::Cartpole)).is_err());
        assert_eq!(resolve_spec(&file, None).unwrap().name, BenchmarkName::Pendulum);
    }
}
