//! Low-rank approximation of symmetric positive semidefinite matrices via the
//! standard and modified Nystrom methods.
//!
//! The crate provides the dense/sparse matrix types and SVD-backed primitives,
//! RBF kernel construction, the column-selection strategies (uniform,
//! adaptive, leverage-score, uniform+adaptive-squared), both intersection
//! matrices with a fast O(c^3) path for the modified model, and synthetic
//! matrix families with closed-form error oracles used for verification.
//!
//! Everything is generic over the scalar type through [`Scalar`]; the aliases
//! below fix f64, which is what the benchmark harness uses.

pub mod columns;
pub mod dense;
pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod nystrom;
pub mod oracle;
pub mod samplers;
pub mod scalar;
pub mod sparse;
pub mod spsd;
pub mod symmetric;

pub use columns::ColumnSet;
pub use dense::{matmul, DenseMatrix};
pub use error::{Error, Result};
pub use linalg::{NormKind, SvdFactorization};
pub use scalar::Scalar;
pub use sparse::SparseSymmetric;
pub use spsd::{SpsdMatrix, SymmetricOps};
pub use symmetric::SymmetricMatrix;

/// f64 dense matrix, the harness default.
pub type Matrix = DenseMatrix<f64>;
/// f64 symmetric matrix.
pub type Symmetric = SymmetricMatrix<f64>;
/// f64 sparse symmetric matrix.
pub type Sparse = SparseSymmetric<f64>;
/// f64 SPSD operand of either storage.
pub type Spsd = SpsdMatrix<f64>;
