//! Uniform access to symmetric operands, dense or sparse.

use crate::dense::DenseMatrix;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::sparse::SparseSymmetric;
use crate::symmetric::SymmetricMatrix;

/// Operations the samplers and the Nystrom engine need from an SPSD input.
/// Implemented by the dense packed and sparse triangular storages so every
/// algorithm runs against either without densifying.
pub trait SymmetricOps<T: Scalar>: Sync {
    fn order(&self) -> usize;
    fn get(&self, i: usize, j: usize) -> T;
    fn write_column(&self, j: usize, out: &mut [T]);
    fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>>;
    fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>>;
    fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;
    fn frobenius_norm(&self) -> T;
    fn column_sq_norms(&self) -> Vec<T>;
    fn diagonal(&self) -> Vec<T>;
    fn to_dense(&self) -> DenseMatrix<T>;
}

impl<T: Scalar> SymmetricOps<T> for SymmetricMatrix<T> {
    fn order(&self) -> usize {
        SymmetricMatrix::order(self)
    }
    fn get(&self, i: usize, j: usize) -> T {
        SymmetricMatrix::get(self, i, j)
    }
    fn write_column(&self, j: usize, out: &mut [T]) {
        SymmetricMatrix::write_column(self, j, out)
    }
    fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>> {
        SymmetricMatrix::columns(self, indices)
    }
    fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>> {
        SymmetricMatrix::principal_submatrix(self, indices)
    }
    fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        SymmetricMatrix::mul_dense(self, x)
    }
    fn frobenius_norm(&self) -> T {
        SymmetricMatrix::frobenius_norm(self)
    }
    fn column_sq_norms(&self) -> Vec<T> {
        SymmetricMatrix::column_sq_norms(self)
    }
    fn diagonal(&self) -> Vec<T> {
        SymmetricMatrix::diagonal(self)
    }
    fn to_dense(&self) -> DenseMatrix<T> {
        SymmetricMatrix::to_dense(self)
    }
}

impl<T: Scalar> SymmetricOps<T> for SparseSymmetric<T> {
    fn order(&self) -> usize {
        SparseSymmetric::order(self)
    }
    fn get(&self, i: usize, j: usize) -> T {
        SparseSymmetric::get(self, i, j)
    }
    fn write_column(&self, j: usize, out: &mut [T]) {
        SparseSymmetric::write_column(self, j, out)
    }
    fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>> {
        SparseSymmetric::columns(self, indices)
    }
    fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>> {
        SparseSymmetric::principal_submatrix(self, indices)
    }
    fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        SparseSymmetric::mul_dense(self, x)
    }
    fn frobenius_norm(&self) -> T {
        SparseSymmetric::frobenius_norm(self)
    }
    fn column_sq_norms(&self) -> Vec<T> {
        SparseSymmetric::column_sq_norms(self)
    }
    fn diagonal(&self) -> Vec<T> {
        SparseSymmetric::diagonal(self)
    }
    fn to_dense(&self) -> DenseMatrix<T> {
        SparseSymmetric::to_dense(self)
    }
}

/// Owned SPSD input of either storage, for call sites that pick at runtime.
#[derive(Debug, Clone)]
pub enum SpsdMatrix<T: Scalar> {
    Dense(SymmetricMatrix<T>),
    Sparse(SparseSymmetric<T>),
}

impl<T: Scalar> SpsdMatrix<T> {
    pub fn is_sparse(&self) -> bool {
        matches!(self, SpsdMatrix::Sparse(_))
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $body:expr) => {
        match $self {
            SpsdMatrix::Dense($m) => $body,
            SpsdMatrix::Sparse($m) => $body,
        }
    };
}

impl<T: Scalar> SymmetricOps<T> for SpsdMatrix<T> {
    fn order(&self) -> usize {
        delegate!(self, m => m.order())
    }
    fn get(&self, i: usize, j: usize) -> T {
        delegate!(self, m => m.get(i, j))
    }
    fn write_column(&self, j: usize, out: &mut [T]) {
        delegate!(self, m => m.write_column(j, out))
    }
    fn columns(&self, indices: &[usize]) -> Result<DenseMatrix<T>> {
        delegate!(self, m => m.columns(indices))
    }
    fn principal_submatrix(&self, indices: &[usize]) -> Result<SymmetricMatrix<T>> {
        delegate!(self, m => m.principal_submatrix(indices))
    }
    fn mul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        delegate!(self, m => m.mul_dense(x))
    }
    fn frobenius_norm(&self) -> T {
        delegate!(self, m => m.frobenius_norm())
    }
    fn column_sq_norms(&self) -> Vec<T> {
        delegate!(self, m => m.column_sq_norms())
    }
    fn diagonal(&self) -> Vec<T> {
        delegate!(self, m => m.diagonal())
    }
    fn to_dense(&self) -> DenseMatrix<T> {
        delegate!(self, m => m.to_dense())
    }
}
