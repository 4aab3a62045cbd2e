//! Serializable benchmark definitions and the problem builder.
//!
//! A spec is stored as TOML. `steps` is the horizon `T` as tabulated for
//! each benchmark. The held-control problems use `T` control steps. The
//! bilinear and trigonometric problems sum stage terms over `t = 1..T−1`
//! with a terminal term at `T`, so they are built with `T − 1` steps.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::costs::QuadraticCost;
use super::euler::{EulerHold, VectorField};
use super::liao::{BilinearDynamics, QuarticCost, TrigCost, TrigDynamics};
use super::linear::LinearDynamics;
use super::systems::{CartPole, CubicDecay, Pendulum, SaturatedInput};
use crate::error::{Error, Result};
use crate::model::{Dynamics, HoldTiming, Problem};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    Pendulum,
    Cartpole,
    Tp1,
    Tp2,
    Tp3,
    Tp4,
    LqrTest,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 7] = [
        BenchmarkName::Pendulum,
        BenchmarkName::Cartpole,
        BenchmarkName::Tp1,
        BenchmarkName::Tp2,
        BenchmarkName::Tp3,
        BenchmarkName::Tp4,
        BenchmarkName::LqrTest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::Pendulum => "pendulum",
            BenchmarkName::Cartpole => "cartpole",
            BenchmarkName::Tp1 => "tp1",
            BenchmarkName::Tp2 => "tp2",
            BenchmarkName::Tp3 => "tp3",
            BenchmarkName::Tp4 => "tp4",
            BenchmarkName::LqrTest => "lqr_test",
        }
    }

    fn is_held(self) -> bool {
        matches!(
            self,
            BenchmarkName::Pendulum | BenchmarkName::Cartpole | BenchmarkName::Tp1 | BenchmarkName::Tp2
        )
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown benchmark name `{s}`")))
    }
}

/// How the quadratic stage cost is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageWeight {
    /// Multiply by the control-hold length.
    #[default]
    Hold,
    /// Multiply by the Euler sub-step.
    Substep,
    /// No scaling.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub t_final: f64,
    pub dt: f64,
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    /// Row-major matrices.
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub q_f: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    pub x_f: Vec<f64>,
    #[serde(default)]
    pub stage_weight: StageWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSpec {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub schema_version: u32,
    pub name: BenchmarkName,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tp3: Option<BilinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tp4: Option<TrigSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pendulum: Option<Pendulum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cartpole: Option<CartPole>,
}

fn diag(values: &[f64]) -> Vec<Vec<f64>> {
    (0..values.len())
        .map(|i| (0..values.len()).map(|j| if i == j { values[i] } else { 0.0 }).collect())
        .collect()
}

impl BenchmarkSpec {
    fn held(name: BenchmarkName, steps: usize, timing: TimingSpec, quadratic: QuadraticSpec) -> Self {
        BenchmarkSpec {
            schema_version: SCHEMA_VERSION,
            name,
            steps,
            timing: Some(timing),
            quadratic: Some(quadratic),
            tp3: None,
            tp4: None,
            pendulum: None,
            cartpole: None,
        }
    }

    pub fn pendulum() -> Self {
        let mut spec = Self::held(
            BenchmarkName::Pendulum,
            50,
            TimingSpec {
                t_final: 5.0,
                dt: 1e-3,
                hold: 0.1,
            },
            QuadraticSpec {
                q: diag(&[3.0, 3.0]),
                r: diag(&[3.0]),
                q_f: diag(&[30.0, 30.0]),
                x0: vec![0.0, 0.0],
                x_f: vec![std::f64::consts::PI, 0.0],
                stage_weight: StageWeight::Hold,
            },
        );
        spec.pendulum = Some(Pendulum::default());
        spec
    }

    pub fn cartpole() -> Self {
        let mut spec = Self::held(
            BenchmarkName::Cartpole,
            30,
            TimingSpec {
                t_final: 3.0,
                dt: 1e-3,
                hold: 0.1,
            },
            QuadraticSpec {
                q: diag(&[10.0; 4]),
                r: diag(&[1e-3]),
                q_f: diag(&[1e4; 4]),
                x0: vec![0.0, 0.0, std::f64::consts::PI, 0.0],
                x_f: vec![0.0; 4],
                stage_weight: StageWeight::Hold,
            },
        );
        spec.cartpole = Some(CartPole::default());
        spec
    }

    pub fn tp1() -> Self {
        Self::held(
            BenchmarkName::Tp1,
            2500,
            TimingSpec {
                t_final: 25.0,
                dt: 1e-5,
                hold: 0.01,
            },
            QuadraticSpec {
                q: diag(&[2.0]),
                r: diag(&[2.0]),
                q_f: diag(&[1e10]),
                x0: vec![1.0],
                x_f: vec![1.5],
                stage_weight: StageWeight::Hold,
            },
        )
    }

    pub fn tp2() -> Self {
        Self::held(
            BenchmarkName::Tp2,
            50,
            TimingSpec {
                t_final: 0.5,
                dt: 1e-4,
                hold: 0.01,
            },
            QuadraticSpec {
                q: diag(&[20.0]),
                r: diag(&[2.0]),
                q_f: diag(&[20.0]),
                x0: vec![5.0],
                x_f: vec![0.0],
                stage_weight: StageWeight::Hold,
            },
        )
    }

    pub fn tp3(n: usize, m: usize, steps: usize, mu: f64) -> Self {
        BenchmarkSpec {
            schema_version: SCHEMA_VERSION,
            name: BenchmarkName::Tp3,
            steps,
            timing: None,
            quadratic: None,
            tp3: Some(BilinearSpec { n, m, mu }),
            tp4: None,
            pendulum: None,
            cartpole: None,
        }
    }

    pub fn tp4(n: usize, m: usize, steps: usize) -> Self {
        BenchmarkSpec {
            schema_version: SCHEMA_VERSION,
            name: BenchmarkName::Tp4,
            steps,
            timing: None,
            quadratic: None,
            tp3: None,
            tp4: Some(TrigSpec { n, m }),
            pendulum: None,
            cartpole: None,
        }
    }

    /// Double integrator with exact discretization; the hold length is the
    /// sampling period and no sub-stepping takes place.
    pub fn lqr_test() -> Self {
        Self::held(
            BenchmarkName::LqrTest,
            20,
            TimingSpec {
                t_final: 2.0,
                dt: 0.1,
                hold: 0.1,
            },
            QuadraticSpec {
                q: diag(&[1.0, 1.0]),
                r: diag(&[0.1]),
                q_f: diag(&[10.0, 10.0]),
                x0: vec![1.0, 0.0],
                x_f: vec![0.0, 0.0],
                stage_weight: StageWeight::Unit,
            },
        )
    }

    /// Default configuration for each benchmark.
    pub fn builtin(name: BenchmarkName) -> Self {
        match name {
            BenchmarkName::Pendulum => Self::pendulum(),
            BenchmarkName::Cartpole => Self::cartpole(),
            BenchmarkName::Tp1 => Self::tp1(),
            BenchmarkName::Tp2 => Self::tp2(),
            BenchmarkName::Tp3 => Self::tp3(100, 50, 20, 1.0 / 20.0),
            BenchmarkName::Tp4 => Self::tp4(100, 10, 100),
            BenchmarkName::LqrTest => Self::lqr_test(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: BenchmarkSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Number of control steps of the built problem.
    pub fn horizon(&self) -> usize {
        match self.name {
            BenchmarkName::Tp3 | BenchmarkName::Tp4 => self.steps.saturating_sub(1),
            _ => self.steps,
        }
    }

    /// Euler sub-steps per control hold.
    pub fn substeps(&self) -> Result<usize> {
        let timing = self
            .timing
            .ok_or_else(|| Error::InvalidSpec(format!("{} needs a [timing] table", self.name)))?;
        if !(timing.dt > 0.0 && timing.hold > 0.0 && timing.t_final > 0.0) {
            return Err(Error::InvalidSpec("t_final, dt and hold must be positive".into()));
        }
        let ratio = timing.hold / timing.dt;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(Error::InvalidSpec(format!(
                "hold / dt = {ratio} is not a positive integer"
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.horizon() == 0 {
            return Err(Error::InvalidSpec(format!("steps = {} leaves no control steps", self.steps)));
        }
        if self.name.is_held() || self.name == BenchmarkName::LqrTest {
            let substeps = self.substeps()?;
            let timing = self.timing.expect("checked by substeps");
            let span = self.steps as f64 * timing.hold;
            if (span - timing.t_final).abs() > 1e-9 * timing.t_final {
                return Err(Error::InvalidSpec(format!(
                    "steps · hold = {span} does not equal t_final = {}",
                    timing.t_final
                )));
            }
            if self.name == BenchmarkName::LqrTest && substeps != 1 {
                return Err(Error::InvalidSpec("lqr_test requires dt = hold".into()));
            }
            let quad = self
                .quadratic
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} needs a [quadratic] table", self.name)))?;
            let (n, m) = match self.name {
                BenchmarkName::Pendulum | BenchmarkName::LqrTest => (2, 1),
                BenchmarkName::Cartpole => (4, 1),
                _ => (1, 1),
            };
            square_matrix(&quad.q, n, "Q")?;
            let r = square_matrix(&quad.r, m, "R")?;
            square_matrix(&quad.q_f, n, "Q_f")?;
            if quad.x0.len() != n || quad.x_f.len() != n {
                return Err(Error::InvalidSpec(format!("x0 and x_f must have length {n}")));
            }
            if r.clone().cholesky().is_none() {
                return Err(Error::InvalidSpec("R is not positive definite".into()));
            }
        }
        match self.name {
            BenchmarkName::Tp3 => {
                let s = self
                    .tp3
                    .ok_or_else(|| Error::InvalidSpec("tp3 needs a [tp3] table".into()))?;
                if s.n == 0 || s.m == 0 {
                    return Err(Error::InvalidSpec("tp3 needs n, m >= 1".into()));
                }
            }
            BenchmarkName::Tp4 => {
                let s = self
                    .tp4
                    .ok_or_else(|| Error::InvalidSpec("tp4 needs a [tp4] table".into()))?;
                if s.n == 0 || s.m == 0 {
                    return Err(Error::InvalidSpec("tp4 needs n, m >= 1".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn square_matrix(rows: &[Vec<f64>], dim: usize, label: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidSpec(format!("{label} must be {dim}×{dim}")));
    }
    let mat = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("{label} has non-finite entries")));
    }
    if mat != mat.transpose() {
        return Err(Error::InvalidSpec(format!("{label} is not symmetric")));
    }
    Ok(mat)
}

fn held_problem<F: VectorField + 'static>(
    spec: &BenchmarkSpec,
    field: F,
    substeps: usize,
) -> Result<Problem> {
    let timing = spec.timing.expect("validated");
    let dynamics: Arc<dyn Dynamics> = Arc::new(EulerHold::new(field, timing.dt, substeps));
    quadratic_problem(spec, dynamics, timing)
}

fn quadratic_problem(
    spec: &BenchmarkSpec,
    dynamics: Arc<dyn Dynamics>,
    timing: TimingSpec,
) -> Result<Problem> {
    let quad = spec.quadratic.as_ref().expect("validated");
    let n = quad.x0.len();
    let m = quad.r.len();
    let weight = match quad.stage_weight {
        StageWeight::Hold => timing.hold,
        StageWeight::Substep => timing.dt,
        StageWeight::Unit => 1.0,
    };
    let target = DVector::from_column_slice(&quad.x_f);
    let cost = QuadraticCost {
        q: square_matrix(&quad.q, n, "Q")?,
        r: square_matrix(&quad.r, m, "R")?,
        q_f: square_matrix(&quad.q_f, n, "Q_f")?,
        target: target.clone(),
        weight,
    };
    Ok(Problem::new(
        spec.name.as_str(),
        DVector::from_column_slice(&quad.x0),
        spec.horizon(),
        dynamics,
        Arc::new(cost),
    )?
    .with_target(target)
    .with_timing(HoldTiming {
        t_final: timing.t_final,
        dt: timing.dt,
        hold: timing.hold,
    }))
}

/// Build the problem described by `spec` after validating it.
pub fn build_benchmark(spec: &BenchmarkSpec) -> Result<Problem> {
    spec.validate()?;
    match spec.name {
        BenchmarkName::Pendulum => {
            held_problem(spec, spec.pendulum.unwrap_or_default(), spec.substeps()?)
        }
        BenchmarkName::Cartpole => {
            held_problem(spec, spec.cartpole.unwrap_or_default(), spec.substeps()?)
        }
        BenchmarkName::Tp1 => held_problem(spec, CubicDecay, spec.substeps()?),
        BenchmarkName::Tp2 => held_problem(spec, SaturatedInput, spec.substeps()?),
        BenchmarkName::LqrTest => {
            let timing = spec.timing.expect("validated");
            quadratic_problem(
                spec,
                Arc::new(LinearDynamics::double_integrator(timing.hold)),
                timing,
            )
        }
        BenchmarkName::Tp3 => {
            let s = spec.tp3.expect("validated");
            Problem::new(
                "tp3",
                DVector::zeros(s.n),
                spec.horizon(),
                Arc::new(BilinearDynamics::standard(s.n, s.m, s.mu)),
                Arc::new(QuarticCost::standard()),
            )
        }
        BenchmarkName::Tp4 => {
            let s = spec.tp4.expect("validated");
            let scale = 2.0 * s.n as f64;
            Problem::new(
                "tp4",
                DVector::from_fn(s.n, |i, _| (i + 1) as f64 / scale),
                spec.horizon(),
                Arc::new(TrigDynamics::standard(s.n, s.m)),
                Arc::new(TrigCost),
            )
        }
    }
}
