//! Symmetric matrices stored as a packed lower triangle.
//!
//! Only entries (i, j) with i >= j are stored, so symmetry holds by
//! construction rather than by check.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric m x m matrix, packed lower-triangle storage (column by column).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T: Scalar> {
    order: usize,
    /// Column k occupies `offset(k) .. offset(k) + (m - k)`, holding rows k..m.
    entries: Vec<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    pub fn zeros(order: usize) -> Self {
        Self { order, entries: vec![T::zero(); order * (order + 1) / 2] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.set(i, i, T::one());
        }
        m
    }

    /// Fills from `f(i, j)` evaluated only on the lower triangle (i >= j).
    pub fn from_fn_lower(order: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(order);
        for j in 0..order {
            for i in j..order {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Reads the lower triangle of a square dense matrix; the upper triangle
    /// is ignored by construction.
    pub fn from_dense_lower(dense: &DenseMatrix<T>) -> Result<Self> {
        if dense.rows() != dense.cols() {
            return Err(Error::dimension(format!(
                "symmetric matrix needs square input, got {}x{}",
                dense.rows(),
                dense.cols()
            )));
        }
        Ok(Self::from_fn_lower(dense.rows(), |i, j| dense.get(i, j)))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn offset(&self, col: usize) -> usize {
        // Sum of packed column lengths m, m-1, ..., m-col+1.
        col * self.order - col * col.saturating_sub(1) / 2
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.entries[self.offset(c) + (r - c)]
    }

    /// Sets the (i, j) = (j, i) entry; callers may pass either order.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let off = self.offset(c);
        self.entries[off + (r - c)] = v;
    }

    pub fn packed(&self) -> &[T] {
        &self.entries
    }

    pub(crate) fn packed_mut(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("matrix entries must be finite"));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.order).map(|i| self.entries[self.offset(i)]).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.order, self.order);
        for j in 0..self.order {
            for i in j..self.order {
                let v = self.get(i, j);
                d.set(i, j, v);
                d.set(j, i, v);
            }
        }
        d
    }

    /// Writes logical column j into `out`.
    pub fn write_column(&self, j: usize, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.order);
        // Rows above the diagonal come from columns i < j (strided reads),
        // rows at and below the diagonal are contiguous in column j.
        for i in 0..j {
            out[i] = self.entries[self.offset(i) + (j - i)];
        }
        let off = self.offset(j);
        out[j..self.order].copy_from_slice(&self.entries[off..off + (self.order - j)]);
    }

    /// Gathers the listed columns into a dense m x c matrix.
    pub fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>> {
        self.check_indices(indices)?;
        let mut c = DenseMatrix::zeros(self.order, indices.len());
        for (t, &j) in indices.iter().enumerate() {
            self.write_column(j, c.column_mut(t));
        }
        Ok(c)
    }

    /// Principal submatrix on the listed indices, in the listed order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>> {
        self.check_indices(indices)?;
        let mut w = SymmetricMatrix::zeros(indices.len());
        for (t, &j) in indices.iter().enumerate() {
            for (s, &i) in indices.iter().enumerate().skip(t) {
                w.set(s, t, self.get(i, j));
            }
        }
        Ok(w)
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.order) {
            return Err(Error::parameter(format!(
                "index {bad} out of range for order {}",
                self.order
            )));
        }
        Ok(())
    }

    /// `A * x` for one dense column, the packed-symmetric kernel.
    fn mul_column(&self, x: &[T], y: &mut [T]) {
        let m = self.order;
        y.fill(T::zero());
        for k in 0..m {
            let off = self.offset(k);
            let xk = x[k];
            let mut acc = self.entries[off] * xk;
            let col = &self.entries[off + 1..off + (m - k)];
            for (r, &v) in col.iter().enumerate() {
                let i = k + 1 + r;
                y[i] += v * xk;
                acc += v * x[i];
            }
            // acc = a_kk x_k + sum_{i>k} a_ik x_i; the i<k contributions were
            // added by earlier iterations through the y[i] updates.
            y[k] += acc;
        }
    }

    /// Blockwise `A * X`; X columns are independent and run in parallel.
    pub fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.order {
            return Err(Error::dimension(format!(
                "cannot multiply {0}x{0} by {1}x{2}",
                self.order,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.order, x.cols());
        use rayon::prelude::*;
        let m = self.order;
        out.as_mut_entries()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(j, y)| self.mul_column(x.column(j), y));
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        let two = T::from_f64_c(2.0);
        let mut acc = T::zero();
        for j in 0..self.order {
            let off = self.offset(j);
            acc += self.entries[off] * self.entries[off];
            for &v in &self.entries[off + 1..off + (self.order - j)] {
                acc += two * v * v;
            }
        }
        acc.sqrt()
    }

    /// Squared Euclidean norm of every logical column.
    pub fn column_sq_norms(&self) -> Vec<T> {
        let mut norms = vec![T::zero(); self.order];
        for j in 0..self.order {
            let off = self.offset(j);
            let d = self.entries[off];
            norms[j] += d * d;
            for (r, &v) in self.entries[off + 1..off + (self.order - j)].iter().enumerate() {
                let i = j + 1 + r;
                let sq = v * v;
                norms[j] += sq;
                norms[i] += sq;
            }
        }
        norms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymmetricMatrix<f64> {
        // [[1, 2, 4], [2, 3, 5], [4, 5, 6]]
        let mut m = SymmetricMatrix::zeros(3);
        m.set(0, 0, 1.0);
        m.set(1, 0, 2.0);
        m.set(2, 0, 4.0);
        m.set(1, 1, 3.0);
        m.set(2, 1, 5.0);
        m.set(2, 2, 6.0);
        m
    }

    #[test]
    fn get_is_symmetric() {
        let m = sample();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert_eq!(m.get(0, 2), 4.0);
    }

    #[test]
    fn column_extraction_matches_dense() {
        let m = sample();
        let d = m.to_dense();
        let mut col = vec![0.0; 3];
        for j in 0..3 {
            m.write_column(j, &mut col);
            assert_eq!(&col[..], d.column(j));
        }
    }

    #[test]
    fn mul_dense_matches_dense_product() {
        let m = sample();
        let x = DenseMatrix::from_rows(&[&[1.0, 0.5], &[-1.0, 2.0], &[0.0, 1.0]]).unwrap();
        let got = m.mul_dense(&x).unwrap();
        let want = m.to_dense().matmul(&x).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                assert!((got.get(i, j) - want.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn principal_submatrix_reads_cross_entries() {
        let m = sample();
        let w = m.principal_submatrix(&[2, 0]).unwrap();
        assert_eq!(w.get(0, 0), 6.0);
        assert_eq!(w.get(1, 0), 4.0);
        assert_eq!(w.get(1, 1), 1.0);
    }

    #[test]
    fn frobenius_counts_off_diagonals_twice() {
        let m = sample();
        let want = m.to_dense().frobenius_norm();
        assert!((m.frobenius_norm() - want).abs() < 1e-12);
    }

    #[test]
    fn column_sq_norms_match_dense() {
        let m = sample();
        let want = m.to_dense().column_sq_norms();
        let got = m.column_sq_norms();
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}
