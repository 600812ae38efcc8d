//! Dense column-major matrices and blockwise multiplication.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default number of output columns processed per multiplication block.
pub const DEFAULT_BLOCK_COLS: usize = 256;

/// Column block width for multiplications, overridable through the
/// `NYSTROM_BLOCK_COLS` environment variable.
pub fn block_cols() -> usize {
    std::env::var("NYSTROM_BLOCK_COLS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or(DEFAULT_BLOCK_COLS)
}

/// Dense matrix with entries stored in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from a column-major slice; checks shape and finiteness.
    pub fn from_column_major(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dimension(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let m = Self { rows, cols, entries };
        m.validate_finite()?;
        Ok(m)
    }

    /// Builds from row slices (the natural literal layout in tests).
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::parameter("matrix must have at least one row and column"));
        }
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::dimension(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m.validate_finite()?;
        Ok(m)
    }

    pub fn from_diagonal(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Concatenates matrices left to right; all must share a row count.
    pub fn hstack(parts: &[&Self]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::dimension("hstack operands must share row count"));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            for j in 0..p.cols {
                out.column_mut(at + j).copy_from_slice(p.column(j));
            }
            at += p.cols;
        }
        Ok(out)
    }

    /// Concatenates matrices top to bottom; all must share a column count.
    pub fn vstack(parts: &[&Self]) -> Result<Self> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::dimension("vstack operands must share column count"));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            let dst = out.column_mut(j);
            let mut at = 0;
            for p in parts {
                dst[at..at + p.rows].copy_from_slice(p.column(j));
                at += p.rows;
            }
        }
        Ok(out)
    }

    /// Multiplies column t by `diag[t]`.
    pub fn scale_columns(&self, diag: &[T]) -> Self {
        debug_assert_eq!(diag.len(), self.cols);
        let mut out = self.clone();
        for (j, &d) in diag.iter().enumerate() {
            for v in out.column_mut(j) {
                *v *= d;
            }
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("matrix entries must be finite"));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[j * self.rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[T] {
        &self.entries[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.entries[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub(crate) fn as_mut_entries(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols) {
            return Err(Error::parameter(format!(
                "column index {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut out = Self::zeros(self.rows, indices.len());
        for (t, &j) in indices.iter().enumerate() {
            out.column_mut(t).copy_from_slice(self.column(j));
        }
        Ok(out)
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.rows) {
            return Err(Error::parameter(format!(
                "row index {bad} out of range for {} rows",
                self.rows
            )));
        }
        let mut out = Self::zeros(indices.len(), self.cols);
        for j in 0..self.cols {
            let src = self.column(j);
            let dst = out.column_mut(j);
            for (t, &i) in indices.iter().enumerate() {
                dst[t] = src[i];
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<T> {
        (0..self.cols)
            .map(|j| self.column(j).iter().fold(T::zero(), |acc, &v| acc + v * v))
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &v| if v.abs() > acc { v.abs() } else { acc })
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.entries {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (v, &w) in out.entries.iter_mut().zip(other.entries.iter()) {
            *v += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (v, &w) in out.entries.iter_mut().zip(other.entries.iter()) {
            *v -= w;
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, other.rows, self.cols, other.cols
            )));
        }
        Ok(())
    }

    /// `self * other`, processed in column blocks of [`block_cols`] width so
    /// the working set stays at O(rows * block) per block.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.matmul_blocked(other, block_cols())
    }

    /// Blockwise product with an explicit block width (tests force tiny blocks).
    pub fn matmul_blocked(&self, other: &Self, block: usize) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.rows == 0 || self.cols == 0 || other.cols == 0 {
            return Ok(Self::zeros(self.rows, other.cols));
        }
        let block = block.clamp(1, other.cols.max(1));
        let mut out = Self::zeros(self.rows, other.cols);
        let m = self.rows;
        let inner = self.cols;

        // Blocks write disjoint column ranges of the output, so they can run
        // in parallel without changing any per-column summation order.
        use rayon::prelude::*;
        out.entries
            .par_chunks_mut(m * block)
            .enumerate()
            .for_each(|(bi, chunk)| {
                let j0 = bi * block;
                let jn = (j0 + block).min(other.cols);
                for (local, j) in (j0..jn).enumerate() {
                    let out_col = &mut chunk[local * m..(local + 1) * m];
                    let b_col = other.column(j);
                    for l in 0..inner {
                        let s = b_col[l];
                        if s == T::zero() {
                            continue;
                        }
                        let a_col = self.column(l);
                        for i in 0..m {
                            out_col[i] += a_col[i] * s;
                        }
                    }
                }
            });
        Ok(out)
    }

    /// `self^T * other` (columns of both operands are contiguous, so this is
    /// the cache-friendly direction for tall factors).
    pub fn transpose_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dimension(format!(
                "cannot multiply {}x{}^T by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.cols == 0 || other.cols == 0 {
            return Ok(Self::zeros(self.cols, other.cols));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        use rayon::prelude::*;
        let p = self.cols;
        out.entries
            .par_chunks_mut(p)
            .enumerate()
            .for_each(|(j, out_col)| {
                let b_col = other.column(j);
                for (i, o) in out_col.iter_mut().enumerate() {
                    *o = dot(self.column(i), b_col);
                }
            });
        Ok(out)
    }

    /// Gram matrix `self^T * self`, computed on the lower triangle and
    /// mirrored.
    pub fn gram(&self) -> Self {
        let c = self.cols;
        let mut out = Self::zeros(c, c);
        for j in 0..c {
            for i in j..c {
                let v = dot(self.column(i), self.column(j));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    /// Exact symmetrization `(self + self^T) / 2`; scrubs roundoff asymmetry.
    pub fn symmetrized(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::dimension("symmetrization needs a square matrix"));
        }
        let half = T::from_f64_c(0.5);
        let mut out = self.clone();
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        Ok(out)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<T> {
        nalgebra::DMatrix::from_column_slice(self.rows, self.cols, &self.entries)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<T>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), entries: m.as_slice().to_vec() }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Spec-level entry point: blockwise `a * b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.matmul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, tol: f64) -> bool {
        a.rows() == b.rows()
            && a.cols() == b.cols()
            && a.as_slice()
                .iter()
                .zip(b.as_slice())
                .all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_times_a_is_a() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let i = DenseMatrix::identity(3);
        let prod = i.matmul(&a).unwrap();
        assert!(approx_eq(&prod, &a, 0.0));
    }

    #[test]
    fn a_times_zero_is_zero() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let z = DenseMatrix::zeros(2, 3);
        let prod = a.matmul(&z).unwrap();
        assert!(prod.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blocked_matches_unblocked() {
        let a = DenseMatrix::from_fn(17, 13, |i, j| ((i * 31 + j * 7) % 11) as f64 - 5.0);
        let b = DenseMatrix::from_fn(13, 9, |i, j| ((i * 13 + j * 3) % 7) as f64 - 3.0);
        let full = a.matmul_blocked(&b, usize::MAX).unwrap();
        for block in [1, 2, 3, 8] {
            let blocked = a.matmul_blocked(&b, block).unwrap();
            assert!(approx_eq(&blocked, &full, 1e-12), "block width {block}");
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        let b = DenseMatrix::<f64>::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn transpose_matmul_matches_explicit_transpose() {
        let a = DenseMatrix::from_fn(8, 5, |i, j| (i + 2 * j) as f64);
        let b = DenseMatrix::from_fn(8, 4, |i, j| (3 * i) as f64 - j as f64);
        let fast = a.transpose_matmul(&b).unwrap();
        let slow = a.transpose().matmul(&b).unwrap();
        assert!(approx_eq(&fast, &slow, 1e-12));
    }

    #[test]
    fn gram_matches_transpose_product() {
        let a = DenseMatrix::from_fn(6, 4, |i, j| (i as f64 - 2.0) * (j as f64 + 1.0) + 0.5);
        let g = a.gram();
        let slow = a.transpose_matmul(&a).unwrap();
        assert!(approx_eq(&g, &slow, 1e-12));
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(DenseMatrix::from_rows(&[&[1.0, f64::NAN]]).is_err());
        assert!(DenseMatrix::from_rows(&[&[f64::INFINITY]]).is_err());
    }

    #[test]
    fn select_columns_and_rows() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let c = a.select_columns(&[2, 0]).unwrap();
        assert_eq!(c.column(0), &[3.0, 6.0]);
        assert_eq!(c.column(1), &[1.0, 4.0]);
        let r = a.select_rows(&[1]).unwrap();
        assert_eq!(r.column(1), &[5.0]);
        assert!(a.select_columns(&[3]).is_err());
    }

    #[test]
    fn zero_dimension_products_are_well_defined() {
        let empty_cols = DenseMatrix::<f64>::zeros(3, 0);
        let tall = DenseMatrix::<f64>::zeros(3, 2);
        let prod = empty_cols.transpose_matmul(&tall).unwrap();
        assert_eq!((prod.rows(), prod.cols()), (0, 2));
        let wide = DenseMatrix::<f64>::zeros(0, 4);
        let prod2 = wide.matmul(&DenseMatrix::<f64>::zeros(4, 2)).unwrap();
        assert_eq!((prod2.rows(), prod2.cols()), (0, 2));
        // Inner dimension zero gives an all-zero result.
        let outer = tall.matmul(&DenseMatrix::<f64>::zeros(2, 0)).unwrap();
        assert_eq!((outer.rows(), outer.cols()), (3, 0));
    }

    #[test]
    fn env_var_overrides_block_width() {
        std::env::set_var("NYSTROM_BLOCK_COLS", "7");
        assert_eq!(block_cols(), 7);
        std::env::set_var("NYSTROM_BLOCK_COLS", "not a number");
        assert_eq!(block_cols(), DEFAULT_BLOCK_COLS);
        std::env::remove_var("NYSTROM_BLOCK_COLS");
        assert_eq!(block_cols(), DEFAULT_BLOCK_COLS);
    }
}
