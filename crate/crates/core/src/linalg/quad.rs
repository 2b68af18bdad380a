//! Matrix-free quadratic term `Q`.

use crate::error::{Error, Result};
use crate::linalg::sparse::{CsrMatrix, SymmetricMatrix};
use crate::Scalar;

/// The PSD matrix of the objective `½xᵀQx`, kept in whichever structured form
/// the instance came with. `SparseLowRank` represents `P + RᵀR` and never
/// forms `RᵀR`.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadOperator<T> {
    Diagonal(Vec<T>),
    Sparse(SymmetricMatrix<T>),
    SparseLowRank { p: SymmetricMatrix<T>, r: CsrMatrix<T> },
}

impl<T: Scalar> QuadOperator<T> {
    /// The zero operator on `n` variables (an LP objective).
    pub fn zero(n: usize) -> Self {
        QuadOperator::Diagonal(vec![T::zero(); n])
    }

    /// Builds `P + RᵀR`, checking that the shapes agree.
    pub fn low_rank(p: SymmetricMatrix<T>, r: CsrMatrix<T>) -> Result<Self> {
        if r.cols() != p.dim() {
            return Err(Error::DimensionMismatch {
                context: "low-rank factor columns",
                expected: p.dim(),
                found: r.cols(),
            });
        }
        Ok(QuadOperator::SparseLowRank { p, r })
    }

    pub fn dim(&self) -> usize {
        match self {
            QuadOperator::Diagonal(q) => q.len(),
            QuadOperator::Sparse(p) => p.dim(),
            QuadOperator::SparseLowRank { p, .. } => p.dim(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, QuadOperator::Diagonal(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            QuadOperator::Diagonal(q) => q.iter().all(|v| v.is_zero()),
            QuadOperator::Sparse(p) => p.nnz_upper() == 0,
            QuadOperator::SparseLowRank { p, r } => p.nnz_upper() == 0 && r.nnz() == 0,
        }
    }

    /// `Qx`, checked.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "quad_apply",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut out = vec![T::zero(); x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `out ← Qx`. The low-rank path allocates one temporary of length `k`.
    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        match self {
            QuadOperator::Diagonal(q) => {
                assert_eq!(x.len(), q.len());
                assert_eq!(out.len(), q.len());
                for ((o, &qi), &xi) in out.iter_mut().zip(q).zip(x) {
                    *o = qi * xi;
                }
            }
            QuadOperator::Sparse(p) => p.apply_into(x, out, false),
            QuadOperator::SparseLowRank { p, r } => {
                p.apply_into(x, out, false);
                let mut rx = vec![T::zero(); r.rows()];
                r.matvec_into(x, &mut rx);
                for (i, &ri) in rx.iter().enumerate() {
                    if ri.is_zero() {
                        continue;
                    }
                    let (c, v) = r.row(i);
                    for (&j, &a) in c.iter().zip(v) {
                        out[j] += a * ri;
                    }
                }
            }
        }
    }

    /// Diagonal of `Q`; for the low-rank form this adds the squared column
    /// norms of `R`.
    pub fn diagonal(&self) -> Vec<T> {
        match self {
            QuadOperator::Diagonal(q) => q.clone(),
            QuadOperator::Sparse(p) => p.diagonal(),
            QuadOperator::SparseLowRank { p, r } => {
                let mut d = p.diagonal();
                for (_, j, v) in r.triplets() {
                    d[j] += v * v;
                }
                d
            }
        }
    }

    /// An upper bound on `‖Q‖∞` (max absolute row sum). Exact for the
    /// diagonal and sparse forms; for `P + RᵀR` uses `|R|ᵀ(|R| 1)`.
    pub fn norm_inf_bound(&self) -> T {
        match self {
            QuadOperator::Diagonal(q) => q.iter().fold(T::zero(), |a, &v| a.max(v.abs())),
            QuadOperator::Sparse(p) => p.row_abs_sums().into_iter().fold(T::zero(), T::max),
            QuadOperator::SparseLowRank { p, r } => {
                let mut s = p.row_abs_sums();
                let row_sums: Vec<T> = (0..r.rows())
                    .map(|i| r.row(i).1.iter().fold(T::zero(), |a, &v| a + v.abs()))
                    .collect();
                for (i, j, v) in r.triplets() {
                    s[j] += v.abs() * row_sums[i];
                }
                s.into_iter().fold(T::zero(), T::max)
            }
        }
    }

    /// Number of stored coefficients (diagonal counts every entry).
    pub fn stored_len(&self) -> usize {
        match self {
            QuadOperator::Diagonal(q) => q.len(),
            QuadOperator::Sparse(p) => p.nnz_upper(),
            QuadOperator::SparseLowRank { p, r } => p.nnz_upper() + r.nnz(),
        }
    }

    /// `xᵀQx`.
    pub fn quad_form(&self, x: &[T]) -> Result<T> {
        let qx = self.apply(x)?;
        Ok(crate::linalg::dot(x, &qx))
    }

    /// Dense `n×n` copy. Intended for small instances and reference checks.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        match self {
            QuadOperator::Diagonal(q) => {
                let mut d = vec![vec![T::zero(); n]; n];
                for (i, &v) in q.iter().enumerate() {
                    d[i][i] = v;
                }
                d
            }
            QuadOperator::Sparse(p) => p.to_dense(),
            QuadOperator::SparseLowRank { p, r } => {
                let mut d = p.to_dense();
                let rd = r.to_dense();
                for row in &rd {
                    for i in 0..n {
                        if row[i].is_zero() {
                            continue;
                        }
                        for j in 0..n {
                            d[i][j] += row[i] * row[j];
                        }
                    }
                }
                d
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_mul(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        d.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn diagonal_example() {
        let q = QuadOperator::Diagonal(vec![2.0, 3.0]);
        assert_eq!(q.apply(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn low_rank_example() {
        let r = CsrMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap();
        let q = QuadOperator::low_rank(SymmetricMatrix::zeros(2), r).unwrap();
        assert_eq!(q.apply(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn zero_input_gives_zero() {
        let r = CsrMatrix::from_dense(&[vec![1.0, -2.0, 0.5]]).unwrap();
        let p = SymmetricMatrix::from_triplets(3, &[(0, 1, 1.0), (2, 2, 4.0)]).unwrap();
        for q in [
            QuadOperator::Diagonal(vec![1.0, 2.0, 3.0]),
            QuadOperator::Sparse(p.clone()),
            QuadOperator::low_rank(p, r).unwrap(),
        ] {
            assert_eq!(q.apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let q = QuadOperator::Diagonal(vec![1.0, 2.0]);
        assert!(matches!(q.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let r = CsrMatrix::<f64>::zeros(1, 3);
        assert!(QuadOperator::low_rank(SymmetricMatrix::zeros(2), r).is_err());
    }

    #[test]
    fn diagonal_and_norm_bound_of_low_rank() {
        let r = CsrMatrix::from_dense(&[vec![1.0, -2.0]]).unwrap();
        let p = SymmetricMatrix::from_triplets(2, &[(0, 0, 1.0)]).unwrap();
        let q = QuadOperator::low_rank(p, r).unwrap();
        // Q = [[2, -2], [-2, 4]]
        assert_eq!(q.diagonal(), vec![2.0, 4.0]);
        assert_eq!(q.norm_inf_bound(), 6.0);
        assert_eq!(q.to_dense(), vec![vec![2.0, -2.0], vec![-2.0, 4.0]]);
    }

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    proptest! {
        #[test]
        fn low_rank_matches_densified_reference(
            n in 1usize..50,
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pt = Vec::new();
            for i in 0..n {
                pt.push((i, i, rng.random_range(0.0..2.0)));
                if i + 1 < n && rng.random_bool(0.3) {
                    pt.push((i, i + 1, rng.random_range(-1.0..1.0)));
                }
            }
            let p = SymmetricMatrix::from_triplets(n, &pt).unwrap();
            let rd: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let r = CsrMatrix::from_dense(&rd).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();

            // reference: explicit P + RᵀR
            let mut dense = p.to_dense();
            for row in &rd {
                for i in 0..n {
                    for j in 0..n {
                        dense[i][j] += row[i] * row[j];
                    }
                }
            }
            let expect = dense_mul(&dense, &x);
            let lr = QuadOperator::low_rank(p.clone(), r).unwrap();
            prop_assert!(rel_close(&lr.apply(&x).unwrap(), &expect, 1e-10));

            let as_sparse = QuadOperator::Sparse(SymmetricMatrix::from_dense_upper(&dense).unwrap());
            prop_assert!(rel_close(&as_sparse.apply(&x).unwrap(), &expect, 1e-12));
            let sparse_only = QuadOperator::Sparse(p.clone());
            prop_assert!(rel_close(&sparse_only.apply(&x).unwrap(), &dense_mul(&p.to_dense(), &x), 1e-12));
        }

        #[test]
        fn cholesky_built_operator_is_psd(
            n in 1usize..30,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Q = L Lᵀ with L lower triangular
            let l: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if j <= i { rng.random_range(-1.0..1.0) } else { 0.0 }).collect())
                .collect();
            let mut q = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    q[i][j] = (0..n).map(|t| l[i][t] * l[j][t]).sum();
                }
            }
            let op = QuadOperator::Sparse(SymmetricMatrix::from_dense_upper(&q).unwrap());
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assert!(op.quad_form(&x).unwrap() >= -1e-12);
        }
    }
}
