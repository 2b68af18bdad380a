//! Compressed sparse row storage for the constraint matrix and the pieces of
//! the quadratic term.

use crate::error::{Error, Result};
use crate::Scalar;

/// Row-compressed sparse matrix. Column indices are strictly increasing within
/// each row and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicates are
    /// summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            if let Some((pi, _)) = last {
                if values.last().is_some_and(|x| x.is_zero()) {
                    values.pop();
                    col_idx.pop();
                    row_ptr[pi + 1] -= 1;
                }
            }
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        if let Some((pi, _)) = last {
            if values.last().is_some_and(|x| x.is_zero()) {
                values.pop();
                col_idx.pop();
                row_ptr[pi + 1] -= 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from raw CSR arrays, checking the structural invariants.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(Error::InvalidMatrix("row pointer length or origin".into()));
        }
        if col_idx.len() != values.len() || row_ptr[rows] != values.len() {
            return Err(Error::InvalidMatrix("nnz inconsistent with row pointer".into()));
        }
        for i in 0..rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidMatrix(format!("row pointer decreases at {i}")));
            }
            let cols_i = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols_i.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!("row {i} indices not increasing")));
            }
            if cols_i.last().is_some_and(|&j| j >= cols) {
                return Err(Error::InvalidMatrix(format!("row {i} column out of range")));
            }
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(dense: &[Vec<T>]) -> Result<Self> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "dense row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &triplets)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<(usize, usize, T)> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.cols, self.rows, &t).expect("transpose of valid matrix")
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Appends rows of another matrix with the same column count.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "vstack columns",
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut row_ptr = self.row_ptr.clone();
        let base = self.nnz();
        row_ptr.extend(other.row_ptr[1..].iter().map(|&p| p + base));
        let mut col_idx = self.col_idx.clone();
        col_idx.extend_from_slice(&other.col_idx);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(CsrMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `Ax`, checked.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = vec![T::zero(); self.rows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀy`, checked.
    pub fn matvec_t(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "matvec_t",
                expected: self.rows,
                found: y.len(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        self.matvec_t_into(y, &mut out);
        Ok(out)
    }

    /// `out ← Ax`. Panics on mismatched lengths.
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *o = c.iter().zip(v).fold(T::zero(), |acc, (&j, &a)| acc + a * x[j]);
        }
    }

    /// `out ← Aᵀy`. Panics on mismatched lengths.
    pub fn matvec_t_into(&self, y: &[T], out: &mut [T]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                out[j] += a * yi;
            }
        }
    }

    /// Max absolute row sum, `‖A‖∞`.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().fold(T::zero(), |acc, &v| acc + v.abs()))
            .fold(T::zero(), T::max)
    }
}

/// Symmetric sparse matrix storing only the upper triangle (diagonal
/// included). Products mirror the off-diagonal entries on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    upper: CsrMatrix<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            upper: CsrMatrix::zeros(n, n),
        }
    }

    /// Builds from triplets of either triangle; `(i, j)` and `(j, i)` name
    /// the same entry, so each off-diagonal pair must be listed once.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let folded: Vec<_> = triplets
            .iter()
            .map(|&(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        Ok(SymmetricMatrix {
            upper: CsrMatrix::from_triplets(n, n, &folded)?,
        })
    }

    /// Reads the upper triangle of a dense square matrix.
    pub fn from_dense_upper(dense: &[Vec<T>]) -> Result<Self> {
        let n = dense.len();
        let mut triplets = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "square matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate().skip(i) {
                if !v.is_zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.upper.rows()
    }

    pub fn upper(&self) -> &CsrMatrix<T> {
        &self.upper
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.nnz()
    }

    /// `out ← Px`, accumulating into `out` when `accumulate` is set.
    pub fn apply_into(&self, x: &[T], out: &mut [T], accumulate: bool) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        if !accumulate {
            out.iter_mut().for_each(|o| *o = T::zero());
        }
        for i in 0..n {
            let (c, v) = self.upper.row(i);
            let xi = x[i];
            let mut acc = T::zero();
            for (&j, &a) in c.iter().zip(v) {
                acc += a * x[j];
                if j != i {
                    out[j] += a * xi;
                }
            }
            out[i] += acc;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.dim()];
        for (i, j, v) in self.upper.triplets() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    /// Absolute row sums of the full symmetric matrix.
    pub fn row_abs_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.dim()];
        for (i, j, v) in self.upper.triplets() {
            s[i] += v.abs();
            if i != j {
                s[j] += v.abs();
            }
        }
        s
    }

    /// Entries of the full matrix as triplets, both triangles.
    pub fn full_triplets(&self) -> Vec<(usize, usize, T)> {
        let mut t = Vec::with_capacity(2 * self.nnz_upper());
        for (i, j, v) in self.upper.triplets() {
            t.push((i, j, v));
            if i != j {
                t.push((j, i, v));
            }
        }
        t
    }

    pub fn is_diagonal(&self) -> bool {
        self.upper.triplets().all(|(i, j, _)| i == j)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, j, v) in self.upper.triplets() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }
}
