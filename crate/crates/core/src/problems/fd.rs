//! Central finite differences.
//!
//! Steps are scaled per coordinate: `h1 = ε^{1/3}·max(1, |z_i|)` for first
//! derivatives and `h2 = ε^{1/4}·max(1, |z_i|)` for second derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn first_step(coordinate: f64) -> f64 {
    f64::EPSILON.cbrt() * coordinate.abs().max(1.0)
}

pub fn second_step(coordinate: f64) -> f64 {
    f64::EPSILON.powf(0.25) * coordinate.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdBlocks {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// One Hessian per output component (order 2 only).
    pub hessians: Option<Vec<DMatrix<f64>>>,
}

pub fn fd_derivatives<F>(map: F, point: &DVector<f64>, order: FdOrder) -> Result<FdBlocks>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let value = map(point);
    ensure_finite(&value, 0)?;
    let jacobian = jacobian(&map, point)?;
    let hessians = match order {
        FdOrder::First => None,
        FdOrder::Second => Some(hessians(&map, point)?),
    };
    Ok(FdBlocks {
        value,
        jacobian,
        hessians,
    })
}

/// Perturb coordinate `i` by `h`, returning the perturbed point and the
/// step that was actually representable.
fn shifted(point: &DVector<f64>, i: usize, h: f64) -> (DVector<f64>, f64) {
    let mut z = point.clone();
    z[i] += h;
    let actual = z[i] - point[i];
    (z, actual)
}

fn ensure_finite(v: &DVector<f64>, coordinate: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::FiniteDifference { coordinate })
    }
}

pub fn jacobian<F>(map: F, point: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = point.len();
    let mut columns = Vec::with_capacity(dim);
    for i in 0..dim {
        let h = first_step(point[i]);
        let (zp, hp) = shifted(point, i, h);
        let (zm, hm) = shifted(point, i, -h);
        let fp = map(&zp);
        let fm = map(&zm);
        ensure_finite(&fp, i)?;
        ensure_finite(&fm, i)?;
        columns.push((fp - fm) / (hp - hm));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, dim, |r, c| columns[c][r]))
}

/// Per-output Hessians of a vector map.
pub fn hessians<F>(map: F, point: &DVector<f64>) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = point.len();
    let center = map(point);
    ensure_finite(&center, 0)?;
    let out = center.len();
    let mut result = vec![DMatrix::zeros(dim, dim); out];
    let steps: Vec<f64> = point.iter().map(|c| second_step(*c)).collect();

    for i in 0..dim {
        let (zp, hp) = shifted(point, i, steps[i]);
        let (zm, _) = shifted(point, i, -hp);
        let fp = map(&zp);
        let fm = map(&zm);
        ensure_finite(&fp, i)?;
        ensure_finite(&fm, i)?;
        let d2 = (fp - &center * 2.0 + fm) / (hp * hp);
        for (k, h) in result.iter_mut().enumerate() {
            h[(i, i)] = d2[k];
        }
        for j in 0..i {
            let eval = |si: f64, sj: f64| -> Result<DVector<f64>> {
                let mut z = point.clone();
                z[i] += si;
                z[j] += sj;
                let f = map(&z);
                ensure_finite(&f, i)?;
                Ok(f)
            };
            let hi = steps[i];
            let hj = steps[j];
            let d = (eval(hi, hj)? - eval(hi, -hj)? - eval(-hi, hj)? + eval(-hi, -hj)?)
                / (4.0 * hi * hj);
            for (k, h) in result.iter_mut().enumerate() {
                h[(i, j)] = d[k];
                h[(j, i)] = d[k];
            }
        }
    }
    Ok(result)
}

pub fn gradient<F>(f: F, point: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let jac = jacobian(|z| DVector::from_element(1, f(z)), point)?;
    Ok(jac.row(0).transpose())
}

pub fn hessian<F>(f: F, point: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut h = hessians(|z| DVector::from_element(1, f(z)), point)?;
    Ok(h.swap_remove(0))
}
