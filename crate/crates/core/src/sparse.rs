//! Sparse symmetric matrices in triangular coordinate storage.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symmetric::SymmetricMatrix;

/// One stored entry of the lower triangle (row >= col).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

/// Sparse symmetric matrix: only lower-triangle entries are stored, the upper
/// triangle is implied. A compressed full-pattern index is kept alongside the
/// triplets so column access and products never re-scan the whole list.
#[derive(Debug, Clone)]
pub struct SparseSymmetric<T: Scalar> {
    order: usize,
    triplets: Vec<Triplet<T>>,
    // Full symmetric pattern in CSC form (both triangles).
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseSymmetric<T> {
    /// Builds from (row, col, value) triples. Either triangle may be given;
    /// entries are canonicalized to row >= col. Duplicates, out-of-range
    /// indices, zeros and non-finite values are rejected.
    pub fn from_triplets(order: usize, raw: Vec<(usize, usize, T)>) -> Result<Self> {
        if order == 0 {
            return Err(Error::parameter("sparse matrix order must be at least 1"));
        }
        let mut triplets = Vec::with_capacity(raw.len());
        for (i, j, v) in raw {
            if i >= order || j >= order {
                return Err(Error::parameter(format!(
                    "entry ({i}, {j}) out of range for order {order}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::parameter(format!("entry ({i}, {j}) is not finite")));
            }
            if v == T::zero() {
                return Err(Error::parameter(format!(
                    "entry ({i}, {j}) is zero; zeros must be implicit"
                )));
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            triplets.push(Triplet { row: r, col: c, value: v });
        }
        triplets.sort_by_key(|t| (t.col, t.row));
        if let Some(w) = triplets.windows(2).find(|w| w[0].row == w[1].row && w[0].col == w[1].col)
        {
            return Err(Error::parameter(format!(
                "duplicate entry at ({}, {})",
                w[0].row, w[0].col
            )));
        }
        let (col_ptr, row_idx, values) = build_full_csc(order, &triplets);
        Ok(Self { order, triplets, col_ptr, row_idx, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored (lower-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    /// Number of logical nonzeros counting both triangles.
    pub fn logical_nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn triplets(&self) -> &[Triplet<T>] {
        &self.triplets
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        match self.row_idx[lo..hi].binary_search(&i) {
            Ok(p) => self.values[lo + p],
            Err(_) => T::zero(),
        }
    }

    pub fn write_column(&self, j: usize, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.order);
        out.fill(T::zero());
        for p in self.col_ptr[j]..self.col_ptr[j + 1] {
            out[self.row_idx[p]] = self.values[p];
        }
    }

    pub fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>> {
        self.check_indices(indices)?;
        let mut c = DenseMatrix::zeros(self.order, indices.len());
        for (t, &j) in indices.iter().enumerate() {
            self.write_column(j, c.column_mut(t));
        }
        Ok(c)
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>> {
        self.check_indices(indices)?;
        let mut pos = vec![usize::MAX; self.order];
        for (t, &j) in indices.iter().enumerate() {
            pos[j] = t;
        }
        let mut w = SymmetricMatrix::zeros(indices.len());
        for t in &self.triplets {
            let (pi, pj) = (pos[t.row], pos[t.col]);
            if pi != usize::MAX && pj != usize::MAX {
                w.set(pi, pj, t.value);
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

    /// `A * X` through the compressed pattern; no dense m x m product is
    /// ever formed. X columns run in parallel.
    pub fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.order {
            return Err(Error::dimension(format!(
                "cannot multiply {0}x{0} by {1}x{2}",
                self.order,
                x.rows(),
                x.cols()
            )));
        }
        let m = self.order;
        let mut out = DenseMatrix::zeros(m, x.cols());
        use rayon::prelude::*;
        out.as_mut_entries()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(jx, y)| {
                let xc = x.column(jx);
                for k in 0..m {
                    let xk = xc[k];
                    if xk == T::zero() {
                        continue;
                    }
                    for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                        y[self.row_idx[p]] += self.values[p] * xk;
                    }
                }
            });
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        let two = T::from_f64_c(2.0);
        self.triplets
            .iter()
            .fold(T::zero(), |acc, t| {
                let sq = t.value * t.value;
                acc + if t.row == t.col { sq } else { two * sq }
            })
            .sqrt()
    }

    pub fn column_sq_norms(&self) -> Vec<T> {
        let mut norms = vec![T::zero(); self.order];
        for t in &self.triplets {
            let sq = t.value * t.value;
            norms[t.col] += sq;
            if t.row != t.col {
                norms[t.row] += sq;
            }
        }
        norms
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.order];
        for t in &self.triplets {
            if t.row == t.col {
                d[t.row] = t.value;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.order, self.order);
        for t in &self.triplets {
            d.set(t.row, t.col, t.value);
            d.set(t.col, t.row, t.value);
        }
        d
    }

    pub fn to_symmetric(&self) -> SymmetricMatrix<T> {
        let mut s = SymmetricMatrix::zeros(self.order);
        for t in &self.triplets {
            s.set(t.row, t.col, t.value);
        }
        s
    }
}

fn build_full_csc<T: Scalar>(
    order: usize,
    triplets: &[Triplet<T>],
) -> (Vec<usize>, Vec<usize>, Vec<T>) {
    let mut counts = vec![0usize; order + 1];
    for t in triplets {
        counts[t.col + 1] += 1;
        if t.row != t.col {
            counts[t.row + 1] += 1;
        }
    }
    for k in 0..order {
        counts[k + 1] += counts[k];
    }
    let col_ptr = counts.clone();
    let total = col_ptr[order];
    let mut row_idx = vec![0usize; total];
    let mut values = vec![T::zero(); total];
    let mut cursor = col_ptr.clone();
    // Triplets are sorted by (col, row); emitting lower entries first keeps
    // each CSC column sorted only if mirrored entries land in order, so we
    // sort per column afterwards.
    for t in triplets {
        let p = cursor[t.col];
        row_idx[p] = t.row;
        values[p] = t.value;
        cursor[t.col] += 1;
        if t.row != t.col {
            let q = cursor[t.row];
            row_idx[q] = t.col;
            values[q] = t.value;
            cursor[t.row] += 1;
        }
    }
    for j in 0..order {
        let lo = col_ptr[j];
        let hi = col_ptr[j + 1];
        let mut perm: Vec<usize> = (lo..hi).collect();
        perm.sort_by_key(|&p| row_idx[p]);
        let sorted_rows: Vec<usize> = perm.iter().map(|&p| row_idx[p]).collect();
        let sorted_vals: Vec<T> = perm.iter().map(|&p| values[p]).collect();
        row_idx[lo..hi].copy_from_slice(&sorted_rows);
        values[lo..hi].copy_from_slice(&sorted_vals);
    }
    (col_ptr, row_idx, values)
}
