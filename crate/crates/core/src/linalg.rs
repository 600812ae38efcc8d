//! SVD-backed primitives: factorizations, pseudoinverse, projections,
//! coherence and leverage scores.
//!
//! The factorization itself is delegated to nalgebra (deterministic for a
//! fixed input); everything above it (truncation, sign convention,
//! projections, partitioned pseudoinverse) is owned here.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symmetric::SymmetricMatrix;

/// Condensed (and optionally truncated) singular value decomposition.
#[derive(Debug, Clone)]
pub struct SvdFactorization<T: Scalar> {
    left: DenseMatrix<T>,
    singular_values: Vec<T>,
    right: DenseMatrix<T>,
    rank: usize,
}

impl<T: Scalar> SvdFactorization<T> {
    pub fn left(&self) -> &DenseMatrix<T> {
        &self.left
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    pub fn right(&self) -> &DenseMatrix<T> {
        &self.right
    }

    /// Number of retained components.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `left * diag(sigma) * right^T`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        if self.rank == 0 {
            return DenseMatrix::zeros(self.left.rows(), self.right.rows());
        }
        let scaled = self.left.scale_columns(&self.singular_values);
        scaled
            .matmul(&self.right.transpose())
            .expect("factor shapes agree by construction")
    }
}

/// Relative cutoff below which singular values are treated as zero:
/// `max(rows, cols) * machine_epsilon`, the standard numerical-rank default.
pub fn default_rank_tolerance<T: Scalar>(rows: usize, cols: usize) -> T {
    T::from_usize(rows.max(cols)).expect("dimension fits scalar") * T::eps()
}

/// Condensed SVD; `k` truncates to the leading k components.
///
/// The sign convention makes each right singular vector's largest-magnitude
/// entry positive so factorizations are comparable across runs.
pub fn svd<T: Scalar>(m: &DenseMatrix<T>, k: Option<usize>) -> Result<SvdFactorization<T>> {
    let min_dim = m.rows().min(m.cols());
    if let Some(k) = k {
        if k > min_dim {
            return Err(Error::parameter(format!(
                "truncation rank {k} exceeds min dimension {min_dim}"
            )));
        }
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(SvdFactorization {
            left: DenseMatrix::zeros(m.rows(), 0),
            singular_values: Vec::new(),
            right: DenseMatrix::zeros(m.cols(), 0),
            rank: 0,
        });
    }

    let decomp = m
        .to_nalgebra()
        .try_svd(true, true, T::eps(), 0)
        .ok_or_else(|| Error::Numerical("SVD failed to converge".into()))?;
    let u = decomp.u.expect("u requested");
    let v_t = decomp.v_t.expect("v_t requested");
    let sigma: Vec<T> = decomp.singular_values.iter().copied().collect();

    let sigma_max = sigma.first().copied().unwrap_or_else(T::zero);
    let cutoff = default_rank_tolerance::<T>(m.rows(), m.cols()) * sigma_max;
    let rho = sigma.iter().filter(|&&s| s > cutoff).count();
    let keep = k.map_or(rho, |k| k.min(rho));

    let mut left = DenseMatrix::zeros(m.rows(), keep);
    let mut right = DenseMatrix::zeros(m.cols(), keep);
    let mut values = Vec::with_capacity(keep);
    for t in 0..keep {
        values.push(sigma[t]);
        for i in 0..m.rows() {
            left.set(i, t, u[(i, t)]);
        }
        for j in 0..m.cols() {
            right.set(j, t, v_t[(t, j)]);
        }
    }

    for t in 0..keep {
        let col = right.column(t);
        let mut arg = 0;
        let mut best = T::zero();
        for (j, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                arg = j;
            }
        }
        if right.get(arg, t) < T::zero() {
            for j in 0..right.rows() {
                let v = right.get(j, t);
                right.set(j, t, -v);
            }
            for i in 0..left.rows() {
                let v = left.get(i, t);
                left.set(i, t, -v);
            }
        }
    }

    Ok(SvdFactorization { left, singular_values: values, right, rank: keep })
}

/// Singular values only (descending), cheaper than a full factorization.
pub fn singular_values<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<T>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    let decomp = m
        .to_nalgebra()
        .try_svd(false, false, T::eps(), 0)
        .ok_or_else(|| Error::Numerical("SVD failed to converge".into()))?;
    Ok(decomp.singular_values.iter().copied().collect())
}

/// Best rank-k approximation `A_k = U_k Sigma_k V_k^T`.
pub fn best_rank_k<T: Scalar>(m: &DenseMatrix<T>, k: usize) -> Result<DenseMatrix<T>> {
    if k == 0 {
        return Err(Error::parameter("rank k must be at least 1"));
    }
    Ok(svd(m, Some(k))?.reconstruct())
}

/// Moore-Penrose inverse via the SVD, zeroing singular values at or below
/// `rel_tol * sigma_max` (default: max-dimension * machine epsilon).
pub fn pinv<T: Scalar>(m: &DenseMatrix<T>, rel_tol: Option<T>) -> Result<DenseMatrix<T>> {
    if let Some(t) = rel_tol {
        if t < T::zero() {
            return Err(Error::parameter("pinv tolerance must be nonnegative"));
        }
    }
    let f = svd(m, None)?;
    let cutoff = rel_tol.unwrap_or_else(|| default_rank_tolerance::<T>(m.rows(), m.cols()))
        * f.singular_values.first().copied().unwrap_or_else(T::zero);
    let keep = f.singular_values.iter().filter(|&&s| s > cutoff).count();
    if keep == 0 {
        return Ok(DenseMatrix::zeros(m.cols(), m.rows()));
    }
    let inv_sigma: Vec<T> = f.singular_values[..keep].iter().map(|&s| T::one() / s).collect();
    let mut right_k = DenseMatrix::zeros(m.cols(), keep);
    let mut left_k = DenseMatrix::zeros(m.rows(), keep);
    for t in 0..keep {
        right_k.column_mut(t).copy_from_slice(f.right.column(t));
        left_k.column_mut(t).copy_from_slice(f.left.column(t));
    }
    right_k.scale_columns(&inv_sigma).matmul(&left_k.transpose())
}

/// Count of singular values above `rel_tol * sigma_max`.
pub fn numeric_rank<T: Scalar>(m: &DenseMatrix<T>, rel_tol: Option<T>) -> Result<usize> {
    let sigma = singular_values(m)?;
    let sigma_max = sigma.first().copied().unwrap_or_else(T::zero);
    let cutoff = rel_tol.unwrap_or_else(|| default_rank_tolerance::<T>(m.rows(), m.cols()))
        * sigma_max;
    Ok(sigma.iter().filter(|&&s| s > cutoff).count())
}

/// Matrix norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NormKind {
    #[serde(rename = "frobenius")]
    Frobenius,
    #[serde(rename = "spectral")]
    Spectral,
}

impl std::str::FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" | "f" | "F" => Ok(NormKind::Frobenius),
            "spectral" | "2" => Ok(NormKind::Spectral),
            other => Err(Error::parameter(format!("unknown norm '{other}'"))),
        }
    }
}

pub fn norm<T: Scalar>(m: &DenseMatrix<T>, kind: NormKind) -> Result<T> {
    match kind {
        NormKind::Frobenius => Ok(m.frobenius_norm()),
        NormKind::Spectral => Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero)),
    }
}

/// Orthonormal basis of range(C) from the thin SVD, dropping directions whose
/// singular value falls below the rank tolerance.
pub fn orthonormal_basis<T: Scalar>(c: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let f = svd(c, None)?;
    Ok(f.left)
}

/// `P_C A = Q (Q^T A)` with Q an orthonormal basis of range(C); the explicit
/// pseudoinverse of C is never formed.
pub fn project_onto_columns<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if a.rows() != c.rows() {
        return Err(Error::dimension(format!(
            "projection operands disagree: {} vs {} rows",
            a.rows(),
            c.rows()
        )));
    }
    let q = orthonormal_basis(c)?;
    if q.cols() == 0 {
        return Ok(DenseMatrix::zeros(a.rows(), a.cols()));
    }
    q.matmul(&q.transpose_matmul(a)?)
}

/// Rank-restricted projection `P_{C,k} A = Q * best_rank_k(Q^T A, k)`.
pub fn project_onto_columns_rank_k<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    k: usize,
) -> Result<DenseMatrix<T>> {
    if k > c.cols() {
        return Err(Error::parameter(format!(
            "restriction rank {k} exceeds {} columns of C",
            c.cols()
        )));
    }
    if a.rows() != c.rows() {
        return Err(Error::dimension(format!(
            "projection operands disagree: {} vs {} rows",
            a.rows(),
            c.rows()
        )));
    }
    let q = orthonormal_basis(c)?;
    if q.cols() == 0 {
        return Ok(DenseMatrix::zeros(a.rows(), a.cols()));
    }
    let b = q.transpose_matmul(a)?;
    let k_eff = k.min(b.rows()).min(b.cols()).max(1);
    let bk = best_rank_k(&b, k_eff)?;
    q.matmul(&bk)
}

/// `||A - P_{C,k} A||_F^2` without materializing the projection, via the
/// orthogonal split `||A||^2 - sum_{i<=k} sigma_i^2(Q^T A)`. The top singular
/// values are taken from the eigenvalues of the small Gram matrix, which is
/// accurate to roughly sqrt(machine epsilon), plenty for Monte Carlo work.
pub fn rank_restricted_residual_sq<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    k: usize,
) -> Result<T> {
    let q = orthonormal_basis(c)?;
    let total = a.frobenius_norm();
    if q.cols() == 0 {
        return Ok(total * total);
    }
    let b = q.transpose_matmul(a)?;
    let bt = b.transpose();
    let gram = bt.gram(); // B B^T, r x r
    let mut eigs = symmetric_eigenvalues(&SymmetricMatrix::from_dense_lower(&gram)?)?;
    eigs.truncate(k);
    let captured = eigs.iter().fold(T::zero(), |acc, &l| acc + l.max(T::zero()));
    Ok((total * total - captured).max(T::zero()))
}

/// Matrix coherence of the columns of A at rank k:
/// `(n / k) * max_j || row j of V_k ||^2`.
pub fn coherence<T: Scalar>(a: &DenseMatrix<T>, k: usize) -> Result<T> {
    let scores = leverage_scores(a, k)?;
    let max = scores.iter().copied().fold(T::zero(), |m, s| m.max(s));
    Ok(T::from_usize(a.cols()).expect("dimension fits scalar") / T::from_usize(k).unwrap() * max)
}

/// Leverage scores: squared row norms of the top-k right singular subspace.
pub fn leverage_scores<T: Scalar>(a: &DenseMatrix<T>, k: usize) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::parameter("rank k must be at least 1"));
    }
    let f = svd(a, None)?;
    if k > f.rank() {
        return Err(Error::parameter(format!(
            "rank {k} exceeds numeric rank {}",
            f.rank()
        )));
    }
    Ok(row_sq_norms_of_leading(&f.right, k))
}

fn row_sq_norms_of_leading<T: Scalar>(v: &DenseMatrix<T>, k: usize) -> Vec<T> {
    let mut scores = vec![T::zero(); v.rows()];
    for t in 0..k {
        for (j, &val) in v.column(t).iter().enumerate() {
            scores[j] += val * val;
        }
    }
    scores
}

/// Eigenvalues of a symmetric matrix, sorted by descending magnitude
/// (the singular values of a symmetric matrix are their absolute values).
pub fn symmetric_eigenvalues<T: Scalar>(s: &SymmetricMatrix<T>) -> Result<Vec<T>> {
    let dm = s.to_dense().to_nalgebra();
    let mut eigs: Vec<T> = dm.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).expect("finite eigenvalues"));
    Ok(eigs)
}

/// `|| A - A_k ||` for a symmetric matrix, via its eigenvalues.
pub fn symmetric_tail_norm<T: Scalar>(
    s: &SymmetricMatrix<T>,
    k: usize,
    kind: NormKind,
) -> Result<T> {
    let eigs = symmetric_eigenvalues(s)?;
    match kind {
        NormKind::Frobenius => {
            let tail = eigs.iter().skip(k).fold(T::zero(), |acc, &l| acc + l * l);
            Ok(tail.sqrt())
        }
        NormKind::Spectral => Ok(eigs.get(k).map_or_else(T::zero, |l| l.abs())),
    }
}

/// Leverage scores of a symmetric matrix at rank k, from its eigenvectors.
pub fn leverage_scores_symmetric<T: Scalar>(
    s: &SymmetricMatrix<T>,
    k: usize,
) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::parameter("rank k must be at least 1"));
    }
    let eig = s.to_dense().to_nalgebra().symmetric_eigen();
    let m = s.order();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .expect("finite eigenvalues")
    });
    if k > m {
        return Err(Error::parameter(format!("rank {k} exceeds order {m}")));
    }
    let mut scores = vec![T::zero(); m];
    for &col in order.iter().take(k) {
        for j in 0..m {
            let v = eig.eigenvectors[(j, col)];
            scores[j] += v * v;
        }
    }
    Ok(scores)
}

/// Coherence of a symmetric matrix at rank k.
pub fn coherence_symmetric<T: Scalar>(s: &SymmetricMatrix<T>, k: usize) -> Result<T> {
    let scores = leverage_scores_symmetric(s, k)?;
    let max = scores.iter().copied().fold(T::zero(), |m, v| m.max(v));
    Ok(T::from_usize(s.order()).unwrap() / T::from_usize(k).unwrap() * max)
}

/// Dense inverse of a small square matrix (LU with partial pivoting).
pub fn invert_small<T: Scalar>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if m.rows() != m.cols() {
        return Err(Error::dimension("inverse needs a square matrix"));
    }
    m.to_nalgebra()
        .try_inverse()
        .map(|inv| DenseMatrix::from_nalgebra(&inv))
        .ok_or_else(|| Error::Singular("matrix is not invertible".into()))
}

/// Pseudoinverse of the stacked matrix `C = [W; A21]` for nonsingular W:
/// `C^+ = W^{-1} (I + S^T S)^{-1} [I, S^T]` with `S = A21 W^{-1}`.
///
/// Costs O(c^3) plus one (m-c) x c product instead of an m x c SVD. Callers
/// fall back to [`pinv`] of the stacked matrix when W is singular.
pub fn partitioned_pinv<T: Scalar>(
    w: &SymmetricMatrix<T>,
    a21: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let c = w.order();
    if a21.rows() > 0 && a21.cols() != c {
        return Err(Error::dimension(format!(
            "A21 has {} columns, W has order {c}",
            a21.cols()
        )));
    }
    let wd = w.to_dense();
    let f = svd(&wd, None)?;
    if f.rank() < c {
        return Err(Error::Singular(format!(
            "W has numeric rank {} < {c}; use a direct pseudoinverse instead",
            f.rank()
        )));
    }
    let inv_sigma: Vec<T> = f.singular_values().iter().map(|&s| T::one() / s).collect();
    let winv = f.right().scale_columns(&inv_sigma).matmul(&f.left().transpose())?;
    if a21.rows() == 0 {
        return Ok(winv);
    }
    let s = a21.matmul(&winv)?;
    let mut gram = s.gram();
    for i in 0..c {
        let v = gram.get(i, i);
        gram.set(i, i, v + T::one());
    }
    let inv_gram = invert_small(&gram)?;
    let head = winv.matmul(&inv_gram)?;
    let tail = head.matmul(&s.transpose())?;
    DenseMatrix::hstack(&[&head, &tail])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_diagonal(values)
    }

    fn max_abs_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn svd_of_diagonal() {
        let f = svd(&diag(&[3.0, 2.0, 1.0]), None).unwrap();
        assert_eq!(f.rank(), 3);
        assert!((f.singular_values()[0] - 3.0).abs() < 1e-12);
        assert!((f.singular_values()[2] - 1.0).abs() < 1e-12);
        // Sign convention turns the factors into the identity permutation.
        let recon = f.reconstruct();
        assert!(max_abs_diff(&recon, &diag(&[3.0, 2.0, 1.0])) < 1e-12);
        assert!((f.right().get(0, 0) - 1.0).abs() < 1e-12);
        assert!((f.left().get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix_is_empty() {
        let f = svd(&DenseMatrix::<f64>::zeros(3, 3), None).unwrap();
        assert_eq!(f.rank(), 0);
        assert!(f.singular_values().is_empty());
        assert_eq!(f.left().cols(), 0);
    }

    #[test]
    fn svd_truncation_bounds_checked() {
        assert!(svd(&DenseMatrix::<f64>::zeros(3, 2), Some(3)).is_err());
    }

    #[test]
    fn svd_reconstruction_of_random_matrix() {
        let a = DenseMatrix::from_fn(50, 30, |i, j| {
            ((i * 7919 + j * 104729) % 1000) as f64 / 500.0 - 1.0
        });
        let f = svd(&a, None).unwrap();
        let recon = f.reconstruct();
        let rel = recon.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(rel < 1e-10, "relative reconstruction error {rel}");
        // Orthonormal factors.
        let ltl = f.left().gram();
        let rtr = f.right().gram();
        let eye = DenseMatrix::identity(f.rank());
        assert!(max_abs_diff(&ltl, &eye) < 1e-10);
        assert!(max_abs_diff(&rtr, &eye) < 1e-10);
        // Nonincreasing singular values.
        assert!(f.singular_values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn best_rank_k_of_diagonal() {
        let got = best_rank_k(&diag(&[3.0, 2.0, 1.0]), 2).unwrap();
        assert!(max_abs_diff(&got, &diag(&[3.0, 2.0, 0.0])) < 1e-12);
    }

    #[test]
    fn best_rank_k_of_rank_one_matrix_is_itself() {
        let a = DenseMatrix::from_fn(6, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let got = best_rank_k(&a, 1).unwrap();
        assert!(max_abs_diff(&got, &a) < 1e-10);
    }

    #[test]
    fn pinv_scalar_and_zero() {
        let p = pinv(&DenseMatrix::<f64>::from_rows(&[&[2.0]]).unwrap(), None).unwrap();
        assert!((p.get(0, 0) - 0.5).abs() < 1e-14);
        let z = pinv(&DenseMatrix::<f64>::zeros(2, 3), None).unwrap();
        assert_eq!((z.rows(), z.cols()), (3, 2));
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pinv_satisfies_penrose_conditions() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let p = pinv(&a, None).unwrap();
        assert!(max_abs_diff(&p, &a.scale(0.25)) < 1e-12);
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        let ap = a.matmul(&p).unwrap();
        let pa = p.matmul(&a).unwrap();
        assert!(max_abs_diff(&apa, &a) < 1e-8);
        assert!(max_abs_diff(&pap, &p) < 1e-8);
        assert!(max_abs_diff(&ap, &ap.transpose()) < 1e-8);
        assert!(max_abs_diff(&pa, &pa.transpose()) < 1e-8);
    }

    #[test]
    fn norms() {
        let a = DenseMatrix::<f64>::from_rows(&[&[3.0, 4.0]]).unwrap();
        assert!((norm(&a, NormKind::Frobenius).unwrap() - 5.0).abs() < 1e-12);
        assert!((norm(&a, NormKind::Spectral).unwrap() - 5.0).abs() < 1e-12);
        let i4 = DenseMatrix::<f64>::identity(4);
        assert!((norm(&i4, NormKind::Frobenius).unwrap() - 2.0).abs() < 1e-12);
        assert!((norm(&i4, NormKind::Spectral).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm(&diag(&[3.0, 2.0, 1.0]), NormKind::Spectral).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_full_rank_square_is_identity_map() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let c = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.3 });
        let p = project_onto_columns(&a, &c).unwrap();
        assert!(max_abs_diff(&p, &a) < 1e-10);
    }

    #[test]
    fn projection_onto_first_basis_vector() {
        let c = DenseMatrix::from_rows(&[&[1.0], &[0.0], &[0.0]]).unwrap();
        let p = project_onto_columns(&DenseMatrix::identity(3), &c).unwrap();
        assert!(max_abs_diff(&p, &diag(&[1.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let a = DenseMatrix::from_fn(8, 6, |i, j| ((i * 13 + j * 29) % 17) as f64 - 8.0);
        let c = DenseMatrix::from_fn(8, 3, |i, j| ((i * 5 + j * 11) % 13) as f64 - 6.0);
        let once = project_onto_columns(&a, &c).unwrap();
        let twice = project_onto_columns(&once, &c).unwrap();
        assert!(max_abs_diff(&once, &twice) < 1e-10);
    }

    #[test]
    fn rank_restricted_projection_cases() {
        let a = DenseMatrix::from_fn(6, 6, |i, j| ((i + 2 * j) % 5) as f64 + 0.1);
        let c = DenseMatrix::from_fn(6, 3, |i, j| ((2 * i + j) % 7) as f64 - 3.0);
        // k = rank(C) reproduces the unrestricted projection.
        let full = project_onto_columns(&a, &c).unwrap();
        let rk = project_onto_columns_rank_k(&a, &c, 3).unwrap();
        assert!(max_abs_diff(&full, &rk) < 1e-10);
        // C = I reduces to the best rank-k approximation.
        let via_identity = project_onto_columns_rank_k(&a, &DenseMatrix::identity(6), 2).unwrap();
        let direct = best_rank_k(&a, 2).unwrap();
        assert!(max_abs_diff(&via_identity, &direct) < 1e-10);
        // Restriction never helps.
        let unres = a.sub(&full).unwrap().frobenius_norm();
        for k in 1..=3 {
            let res = a
                .sub(&project_onto_columns_rank_k(&a, &c, k).unwrap())
                .unwrap()
                .frobenius_norm();
            assert!(unres <= res + 1e-10);
        }
        assert!(project_onto_columns_rank_k(&a, &c, 4).is_err());
    }

    #[test]
    fn rank_restricted_residual_matches_direct_computation() {
        let a = DenseMatrix::from_fn(12, 12, |i, j| ((i * 17 + j * 5) % 23) as f64 / 23.0);
        let c = DenseMatrix::from_fn(12, 5, |i, j| ((i * 3 + j * 13) % 19) as f64 / 19.0 - 0.4);
        for k in [1usize, 3, 5] {
            let direct = a
                .sub(&project_onto_columns_rank_k(&a, &c, k).unwrap())
                .unwrap()
                .frobenius_norm();
            let fast = rank_restricted_residual_sq(&a, &c, k).unwrap().sqrt();
            assert!(
                (direct - fast).abs() < 1e-7 * (1.0 + direct),
                "k={k}: direct {direct} vs split {fast}"
            );
        }
    }

    #[test]
    fn coherence_and_leverage_of_diagonal() {
        let a = diag(&[3.0, 2.0, 1.0]);
        assert!((coherence(&a, 2).unwrap() - 1.5).abs() < 1e-12);
        let scores = leverage_scores(&a, 2).unwrap();
        assert!((scores[0] - 1.0).abs() < 1e-12);
        assert!((scores[1] - 1.0).abs() < 1e-12);
        assert!(scores[2].abs() < 1e-12);
        let sum: f64 = scores.iter().sum();
        assert!((sum - 2.0).abs() < 1e-8);
        assert!(coherence(&a, 4).is_err());
    }

    #[test]
    fn coherence_stays_in_range() {
        let a = DenseMatrix::from_fn(10, 8, |i, j| ((i * 31 + j * 17) % 29) as f64 / 29.0 - 0.5);
        for k in 1..=4 {
            let mu = coherence(&a, k).unwrap();
            assert!(mu >= 1.0 - 1e-10);
            assert!(mu <= a.cols() as f64 / k as f64 + 1e-10);
        }
    }

    #[test]
    fn numeric_rank_cases() {
        assert_eq!(numeric_rank(&DenseMatrix::<f64>::identity(3), None).unwrap(), 3);
        assert_eq!(numeric_rank(&DenseMatrix::<f64>::zeros(3, 3), None).unwrap(), 0);
        let ones = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(numeric_rank(&ones, None).unwrap(), 1);
    }

    #[test]
    fn partitioned_pinv_matches_direct() {
        // W = [1], A21 = [1]: pinv of [1; 1] is [0.5, 0.5].
        let w = SymmetricMatrix::<f64>::from_fn_lower(1, |_, _| 1.0);
        let a21 = DenseMatrix::from_rows(&[&[1.0]]).unwrap();
        let got = partitioned_pinv(&w, &a21).unwrap();
        assert!((got.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((got.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partitioned_pinv_with_empty_block_is_w_inverse() {
        let mut w = SymmetricMatrix::zeros(2);
        w.set(0, 0, 2.0);
        w.set(1, 1, 4.0);
        let empty = DenseMatrix::zeros(0, 2);
        let got = partitioned_pinv(&w, &empty).unwrap();
        assert!(max_abs_diff(&got, &diag(&[0.5, 0.25])) < 1e-12);
    }

    #[test]
    fn partitioned_pinv_random_well_conditioned() {
        let c = 5;
        let m = 20;
        let g = DenseMatrix::from_fn(c, c, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let mut wd = g.gram();
        for i in 0..c {
            let v = wd.get(i, i);
            wd.set(i, i, v + 1.0);
        }
        let w = SymmetricMatrix::from_dense_lower(&wd).unwrap();
        let a21 = DenseMatrix::from_fn(m - c, c, |i, j| ((i * 13 + j * 5) % 17) as f64 / 17.0 - 0.3);
        let fast = partitioned_pinv(&w, &a21).unwrap();
        let stacked = DenseMatrix::vstack(&[&w.to_dense(), &a21]).unwrap();
        let direct = pinv(&stacked, None).unwrap();
        let rel =
            fast.sub(&direct).unwrap().frobenius_norm() / direct.frobenius_norm();
        assert!(rel < 1e-8, "relative difference {rel}");
    }

    #[test]
    fn partitioned_pinv_rejects_singular_w() {
        let w = SymmetricMatrix::from_fn_lower(2, |_, _| 1.0); // all-ones, rank 1
        let a21 = DenseMatrix::from_rows(&[&[1.0, 1.0]]).unwrap();
        assert!(matches!(partitioned_pinv(&w, &a21), Err(Error::Singular(_))));
    }

    #[test]
    fn symmetric_tail_norm_matches_svd() {
        let s = SymmetricMatrix::from_fn_lower(6, |i, j| {
            if i == j { (i + 2) as f64 } else { 0.3 / (1.0 + (i - j) as f64) }
        });
        let tail = symmetric_tail_norm(&s, 2, NormKind::Frobenius).unwrap();
        let direct = s
            .to_dense()
            .sub(&best_rank_k(&s.to_dense(), 2).unwrap())
            .unwrap()
            .frobenius_norm();
        assert!((tail - direct).abs() < 1e-9);
    }
}
