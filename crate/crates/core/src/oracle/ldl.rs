//! Symmetric indefinite factorization `Pᵀ A P = L D Lᵀ` with Bunch–Kaufman
//! pivoting. `D` is block diagonal with 1×1 and 2×2 blocks, which makes the
//! inertia of `A` available from the factors.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

/// Numbers of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(+{}, -{}, 0:{})", self.positive, self.negative, self.zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    One(f64),
    Two(Matrix2<f64>),
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    /// `perm[i]` is the original index placed at position `i`.
    perm: Vec<usize>,
    /// Unit lower triangular factor.
    l: DMatrix<f64>,
    /// Pivot blocks with their starting positions.
    blocks: Vec<(usize, Pivot)>,
    zero_tol: f64,
}

/// Growth bound for the pivot choice, `(1 + √17) / 8`.
fn pivot_ratio() -> f64 {
    (1.0 + 17f64.sqrt()) / 8.0
}

impl Ldlt {
    /// Factors a symmetric matrix. Only the lower triangle is read.
    pub fn factor(matrix: &DMatrix<f64>) -> Result<Ldlt> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "LDLᵀ needs a square matrix, got {}×{}",
                n,
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Oracle("non-finite entry in KKT matrix".into()));
        }
        let mut a = DMatrix::from_fn(n, n, |i, j| {
            if i >= j {
                matrix[(i, j)]
            } else {
                matrix[(j, i)]
            }
        });
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let zero_tol = 1e3 * n.max(1) as f64 * f64::EPSILON * scale;
        let mut l = DMatrix::identity(n, n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let ratio = pivot_ratio();

        let mut k = 0;
        while k < n {
            let (lambda, r) = column_max(&a, k, k + 1, k);
            let akk = a[(k, k)].abs();
            let two_by_two = if akk.max(lambda) <= zero_tol || akk >= ratio * lambda {
                false
            } else {
                let sigma = (k..n)
                    .filter(|&i| i != r)
                    .map(|i| a[(i, r)].abs())
                    .fold(0.0, f64::max);
                if akk * sigma >= ratio * lambda * lambda {
                    false
                } else if a[(r, r)].abs() >= ratio * sigma {
                    swap(&mut a, &mut l, &mut perm, k, r);
                    false
                } else {
                    swap(&mut a, &mut l, &mut perm, k + 1, r);
                    true
                }
            };

            if two_by_two {
                let e = Matrix2::new(a[(k, k)], a[(k + 1, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
                let e_inv = e
                    .try_inverse()
                    .ok_or_else(|| Error::Oracle("singular 2×2 pivot".into()))?;
                for i in k + 2..n {
                    let c = nalgebra::RowVector2::new(a[(i, k)], a[(i, k + 1)]);
                    let li = c * e_inv;
                    l[(i, k)] = li[0];
                    l[(i, k + 1)] = li[1];
                }
                for j in k + 2..n {
                    for i in j..n {
                        let update = l[(i, k)] * a[(j, k)] + l[(i, k + 1)] * a[(j, k + 1)];
                        a[(i, j)] -= update;
                        a[(j, i)] = a[(i, j)];
                    }
                }
                blocks.push((k, Pivot::Two(e)));
                k += 2;
            } else {
                let d = a[(k, k)];
                if d.abs() > zero_tol {
                    for i in k + 1..n {
                        l[(i, k)] = a[(i, k)] / d;
                    }
                    for j in k + 1..n {
                        for i in j..n {
                            a[(i, j)] -= l[(i, k)] * a[(j, k)];
                            a[(j, i)] = a[(i, j)];
                        }
                    }
                }
                blocks.push((k, Pivot::One(d)));
                k += 1;
            }
        }
        Ok(Ldlt {
            perm,
            l,
            blocks,
            zero_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn inertia(&self) -> Inertia {
        let mut inertia = Inertia::default();
        let mut count = |v: f64| {
            if v > self.zero_tol {
                inertia.positive += 1;
            } else if v < -self.zero_tol {
                inertia.negative += 1;
            } else {
                inertia.zero += 1;
            }
        };
        for (_, block) in &self.blocks {
            match block {
                Pivot::One(d) => count(*d),
                Pivot::Two(e) => {
                    for v in e.symmetric_eigenvalues().iter() {
                        count(*v);
                    }
                }
            }
        }
        inertia
    }

    pub fn is_singular(&self) -> bool {
        self.inertia().zero > 0
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, expected {n}",
                rhs.len()
            )));
        }
        let inertia = self.inertia();
        if inertia.zero > 0 {
            return Err(Error::Oracle(format!("singular KKT matrix, inertia {inertia}")));
        }
        let mut y = DVector::from_fn(n, |i, _| rhs[self.perm[i]]);
        // L y = b
        for j in 0..n {
            let yj = y[j];
            for i in j + 1..n {
                y[i] -= self.l[(i, j)] * yj;
            }
        }
        // D y = y
        for (k, block) in &self.blocks {
            match block {
                Pivot::One(d) => y[*k] /= d,
                Pivot::Two(e) => {
                    let w = e
                        .lu()
                        .solve(&nalgebra::Vector2::new(y[*k], y[*k + 1]))
                        .ok_or_else(|| Error::Oracle("singular 2×2 pivot".into()))?;
                    y[*k] = w[0];
                    y[*k + 1] = w[1];
                }
            }
        }
        // Lᵀ y = y
        for j in (0..n).rev() {
            let mut s = y[j];
            for i in j + 1..n {
                s -= self.l[(i, j)] * y[i];
            }
            y[j] = s;
        }
        let mut x = DVector::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }
}

/// Largest `|a[i, col]|` for `i ≥ from` and its row.
fn column_max(a: &DMatrix<f64>, col: usize, from: usize, fallback: usize) -> (f64, usize) {
    (from..a.nrows())
        .map(|i| (a[(i, col)].abs(), i))
        .fold((0.0, fallback), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Symmetric interchange of positions `p` and `q` in the trailing matrix,
/// carrying the already computed rows of `L` along.
fn swap(a: &mut DMatrix<f64>, l: &mut DMatrix<f64>, perm: &mut [usize], p: usize, q: usize) {
    if p == q {
        return;
    }
    a.swap_rows(p, q);
    a.swap_columns(p, q);
    for j in 0..p.min(q) {
        let tmp = l[(p, j)];
        l[(p, j)] = l[(q, j)];
        l[(q, j)] = tmp;
    }
    perm.swap(p, q);
}
