//! Initial control sequences: the tabulated starting points of the large
//! test problems and seeded uniform random guesses.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::BenchmarkName;
use crate::error::{Error, Result};

/// Controls for starting point `point_id ∈ 1..=5`.
///
/// Parity refers to the 1-based stage index, so step 0 is an odd stage.
///
/// | id | bilinear (tp3)     | trigonometric (tp4) |
/// |----|--------------------|---------------------|
/// | 1  | 0                  | 0                   |
/// | 2  | +0.01              | +0.01               |
/// | 3  | −0.01              | −0.01               |
/// | 4  | +0.01 odd, −0.01 even | +0.01 odd, 0 even |
/// | 5  | −0.01 odd, +0.01 even | −0.01 odd, 0 even |
pub fn starting_controls(
    name: BenchmarkName,
    point_id: u8,
    horizon: usize,
    m: usize,
) -> Result<Vec<DVector<f64>>> {
    let even_sign = match name {
        BenchmarkName::Tp3 => -1.0,
        BenchmarkName::Tp4 => 0.0,
        other => {
            return Err(Error::InvalidSpec(format!(
                "starting points are tabulated only for tp3 and tp4, not {other}"
            )))
        }
    };
    let (odd, even) = match point_id {
        1 => (0.0, 0.0),
        2 => (0.01, 0.01),
        3 => (-0.01, -0.01),
        4 => (0.01, 0.01 * even_sign),
        5 => (-0.01, -0.01 * even_sign),
        _ => {
            return Err(Error::InvalidSpec(format!(
                "starting point id must be in 1..=5, got {point_id}"
            )))
        }
    };
    Ok((0..horizon)
        .map(|t| {
            let stage = t + 1;
            DVector::from_element(m, if stage % 2 == 1 { odd } else { even })
        })
        .collect())
}

/// Independent uniform controls on `[−scale, scale]`.
pub fn random_controls(horizon: usize, m: usize, scale: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon)
        .map(|_| DVector::from_fn(m, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_point_four_alternates_with_zero() {
        let u = starting_controls(BenchmarkName::Tp4, 4, 4, 2).unwrap();
        assert_eq!(u[0][0], 0.01);
        assert_eq!(u[1][0], 0.0);
        assert_eq!(u[2][1], 0.01);
    }

    #[test]
    fn bilinear_point_five_alternates_sign() {
        let u = starting_controls(BenchmarkName::Tp3, 5, 3, 2).unwrap();
        assert_eq!(u[0][0], -0.01);
        assert_eq!(u[1][0], 0.01);
        assert_eq!(u[2][0], -0.01);
    }

    #[test]
    fn invalid_point_and_problem_are_rejected() {
        assert!(starting_controls(BenchmarkName::Tp3, 6, 3, 2).is_err());
        assert!(starting_controls(BenchmarkName::Tp3, 0, 3, 2).is_err());
        assert!(starting_controls(BenchmarkName::Pendulum, 1, 3, 1).is_err());
    }

    #[test]
    fn random_controls_are_reproducible_and_bounded() {
        let a = random_controls(10, 3, 0.5, 7);
        assert_eq!(a, random_controls(10, 3, 0.5, 7));
        assert_ne!(a, random_controls(10, 3, 0.5, 8));
        assert!(a.iter().all(|u| u.amax() <= 0.5));
    }
}
