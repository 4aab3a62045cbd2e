//! Third-order derivative tensors of a vector-valued map.
//!
//! A [`Tensor3`] with shape `(out, rows, cols)` stores one `rows × cols`
//! slice per output component, i.e. `T[i] = ∂²f_i / ∂a ∂b`. Benchmarks with
//! a hundred states make the dense layout prohibitive, so structured
//! variants are kept and only expanded when a caller asks for a slice.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor3 {
    Zero {
        out: usize,
        rows: usize,
        cols: usize,
    },
    /// One explicit slice per output component.
    Dense(Vec<DMatrix<f64>>),
    /// `T[i] = weights[i] * slice`.
    Separable {
        weights: DVector<f64>,
        slice: DMatrix<f64>,
    },
    /// Coordinate list of `(out, row, col, value)`; duplicates add up.
    Sparse {
        out: usize,
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, usize, f64)>,
    },
}

impl Tensor3 {
    pub fn zeros(out: usize, rows: usize, cols: usize) -> Self {
        Tensor3::Zero { out, rows, cols }
    }

    /// `(out, rows, cols)`
    pub fn shape(&self) -> (usize, usize, usize) {
        match self {
            Tensor3::Zero { out, rows, cols } | Tensor3::Sparse { out, rows, cols, .. } => {
                (*out, *rows, *cols)
            }
            Tensor3::Dense(slices) => {
                let (r, c) = slices.first().map_or((0, 0), |s| s.shape());
                (slices.len(), r, c)
            }
            Tensor3::Separable { weights, slice } => (weights.len(), slice.nrows(), slice.ncols()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Tensor3::Zero { .. } => true,
            Tensor3::Dense(slices) => slices.iter().all(|s| s.iter().all(|v| *v == 0.0)),
            Tensor3::Separable { weights, slice } => {
                weights.iter().all(|w| *w == 0.0) || slice.iter().all(|v| *v == 0.0)
            }
            Tensor3::Sparse { entries, .. } => entries.iter().all(|e| e.3 == 0.0),
        }
    }

    /// Contraction with a vector over the output index: `Σ_i λ_i T[i]`.
    pub fn contract(&self, lambda: &DVector<f64>) -> DMatrix<f64> {
        let (out, rows, cols) = self.shape();
        assert_eq!(lambda.len(), out, "contraction vector length");
        match self {
            Tensor3::Zero { .. } => DMatrix::zeros(rows, cols),
            Tensor3::Dense(slices) => {
                let mut acc = DMatrix::zeros(rows, cols);
                for (l, s) in lambda.iter().zip(slices) {
                    if *l != 0.0 {
                        acc += s * *l;
                    }
                }
                acc
            }
            Tensor3::Separable { weights, slice } => slice * weights.dot(lambda),
            Tensor3::Sparse { entries, .. } => {
                let mut acc = DMatrix::zeros(rows, cols);
                for &(i, r, c, v) in entries {
                    acc[(r, c)] += lambda[i] * v;
                }
                acc
            }
        }
    }

    /// Component `i` as an explicit matrix.
    pub fn slice(&self, i: usize) -> DMatrix<f64> {
        let (out, rows, cols) = self.shape();
        assert!(i < out, "slice index {i} out of range {out}");
        match self {
            Tensor3::Zero { .. } => DMatrix::zeros(rows, cols),
            Tensor3::Dense(slices) => slices[i].clone(),
            Tensor3::Separable { weights, slice } => slice * weights[i],
            Tensor3::Sparse { entries, .. } => {
                let mut m = DMatrix::zeros(rows, cols);
                for &(k, r, c, v) in entries {
                    if k == i {
                        m[(r, c)] += v;
                    }
                }
                m
            }
        }
    }

    /// Bilinear form per output component: `(aᵀ T[i] b)_i`.
    pub fn bilinear(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let (out, rows, cols) = self.shape();
        assert_eq!(a.len(), rows);
        assert_eq!(b.len(), cols);
        match self {
            Tensor3::Zero { .. } => DVector::zeros(out),
            Tensor3::Dense(slices) => {
                DVector::from_iterator(out, slices.iter().map(|s| a.dot(&(s * b))))
            }
            Tensor3::Separable { weights, slice } => weights * a.dot(&(slice * b)),
            Tensor3::Sparse { entries, .. } => {
                let mut acc = DVector::zeros(out);
                for &(i, r, c, v) in entries {
                    acc[i] += a[r] * v * b[c];
                }
                acc
            }
        }
    }

    /// Swap the two trailing indices.
    pub fn transpose_inner(&self) -> Tensor3 {
        match self {
            Tensor3::Zero { out, rows, cols } => Tensor3::Zero {
                out: *out,
                rows: *cols,
                cols: *rows,
            },
            Tensor3::Dense(slices) => Tensor3::Dense(slices.iter().map(|s| s.transpose()).collect()),
            Tensor3::Separable { weights, slice } => Tensor3::Separable {
                weights: weights.clone(),
                slice: slice.transpose(),
            },
            Tensor3::Sparse {
                out,
                rows,
                cols,
                entries,
            } => Tensor3::Sparse {
                out: *out,
                rows: *cols,
                cols: *rows,
                entries: entries.iter().map(|&(i, r, c, v)| (i, c, r, v)).collect(),
            },
        }
    }

    /// Symmetrize each slice in its trailing indices (square tensors only).
    pub fn symmetrized(&self) -> Tensor3 {
        let (_, rows, cols) = self.shape();
        assert_eq!(rows, cols, "symmetrize needs square slices");
        match self {
            Tensor3::Zero { .. } => self.clone(),
            Tensor3::Dense(slices) => {
                Tensor3::Dense(slices.iter().map(|s| (s + s.transpose()) * 0.5).collect())
            }
            Tensor3::Separable { weights, slice } => Tensor3::Separable {
                weights: weights.clone(),
                slice: (slice + slice.transpose()) * 0.5,
            },
            Tensor3::Sparse {
                out,
                rows,
                cols,
                entries,
            } => {
                let mut sym = Vec::with_capacity(entries.len() * 2);
                for &(i, r, c, v) in entries {
                    if r == c {
                        sym.push((i, r, c, v));
                    } else {
                        sym.push((i, r, c, 0.5 * v));
                        sym.push((i, c, r, 0.5 * v));
                    }
                }
                Tensor3::Sparse {
                    out: *out,
                    rows: *rows,
                    cols: *cols,
                    entries: sym,
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Tensor3::Zero { .. } => true,
            Tensor3::Dense(slices) => slices.iter().all(|s| s.iter().all(|v| v.is_finite())),
            Tensor3::Separable { weights, slice } => {
                weights.iter().all(|v| v.is_finite()) && slice.iter().all(|v| v.is_finite())
            }
            Tensor3::Sparse { entries, .. } => entries.iter().all(|e| e.3.is_finite()),
        }
    }

    pub fn to_dense(&self) -> Vec<DMatrix<f64>> {
        (0..self.shape().0).map(|i| self.slice(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dense() -> Tensor3 {
        Tensor3::Dense(vec![
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            DMatrix::from_row_slice(2, 3, &[0.5, 0.0, -1.0, 2.0, 0.0, 1.0]),
        ])
    }

    #[test]
    fn variants_agree_on_contraction_and_bilinear() {
        let dense = sample_dense();
        let mut entries = Vec::new();
        for (i, s) in dense.to_dense().iter().enumerate() {
            for r in 0..2 {
                for c in 0..3 {
                    entries.push((i, r, c, s[(r, c)]));
                }
            }
        }
        let sparse = Tensor3::Sparse {
            out: 2,
            rows: 2,
            cols: 3,
            entries,
        };
        let lam = DVector::from_vec(vec![0.3, -2.0]);
        assert_eq!(dense.contract(&lam), sparse.contract(&lam));
        let a = DVector::from_vec(vec![1.0, -1.0]);
        let b = DVector::from_vec(vec![2.0, 0.5, 1.0]);
        assert_eq!(dense.bilinear(&a, &b), sparse.bilinear(&a, &b));
        assert_eq!(dense.transpose_inner().slice(1), dense.slice(1).transpose());
    }

    #[test]
    fn separable_matches_explicit_slices() {
        let weights = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let slice = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 2.0]);
        let sep = Tensor3::Separable {
            weights: weights.clone(),
            slice: slice.clone(),
        };
        let dense = Tensor3::Dense(sep.to_dense());
        let lam = DVector::from_vec(vec![0.5, 0.25, 4.0]);
        assert_eq!(sep.contract(&lam), &slice * weights.dot(&lam));
        assert!((sep.contract(&lam) - dense.contract(&lam)).norm() < 1e-15);
        let sym = sep.symmetrized();
        assert_eq!(sym.slice(0), sym.slice(0).transpose());
    }

    #[test]
    fn zero_tensor_contracts_to_zero() {
        let z = Tensor3::zeros(3, 2, 2);
        assert!(z.is_zero());
        assert_eq!(z.contract(&DVector::from_element(3, 7.0)), DMatrix::zeros(2, 2));
    }
}
