//! Synthetic matrix families with closed-form error values.
//!
//! The block-adversarial family (unit diagonal, constant alpha off-diagonal,
//! k identical blocks) admits exact expressions for the best rank-k residual
//! and for the modified-Nystrom error of one block, which makes it an
//! independent oracle for the whole pinv/partition/intersection stack. The
//! low-rank generator controls the rank of the leading principal submatrix to
//! drive the exactness equivalence in both directions.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::samplers::RngSeed;
use crate::scalar::Scalar;
use crate::symmetric::SymmetricMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Block-diagonal adversarial matrix: k blocks of order m/k, each with unit
/// diagonal and `alpha` off-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSpec {
    pub m: usize,
    /// Block count; doubles as the target rank of the reference A_k.
    pub k: usize,
    pub alpha: f64,
}

impl AdversarialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(Error::parameter("m and k must be positive"));
        }
        if self.m % self.k != 0 {
            return Err(Error::parameter(format!(
                "block count {} must divide the order {}",
                self.k, self.m
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::parameter("alpha must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn block_order(&self) -> usize {
        self.m / self.k
    }
}

/// Builds the block-diagonal adversarial matrix of the spec.
pub fn build_block_adversarial<T: Scalar>(spec: &AdversarialSpec) -> Result<SymmetricMatrix<T>> {
    spec.validate()?;
    let p = spec.block_order();
    let alpha = T::from_f64_c(spec.alpha);
    Ok(SymmetricMatrix::from_fn_lower(spec.m, |i, j| {
        if i == j {
            T::one()
        } else if i / p == j / p {
            alpha
        } else {
            T::zero()
        }
    }))
}

/// Closed form for the best rank-k residual of the adversarial matrix:
/// `||A - A_k||_F = (1 - alpha) sqrt(m - k)`.
pub fn adversarial_residual_norm<T: Scalar>(spec: &AdversarialSpec) -> Result<T> {
    spec.validate()?;
    let m_minus_k = T::from_usize(spec.m - spec.k).unwrap();
    Ok((T::one() - T::from_f64_c(spec.alpha)) * m_minus_k.sqrt())
}

/// Exact squared Frobenius error of the modified Nystrom approximation of a
/// single block (order `p`, off-diagonal `alpha`) built from its first `c`
/// columns, as a rational expression. The numerator polynomial is evaluated
/// by Horner grouping in alpha to limit cancellation.
pub fn single_block_modified_error(p: usize, c: usize, alpha: f64) -> Result<f64> {
    if !(c >= 1 && c < p) {
        return Err(Error::parameter(format!("need 1 <= c < p, got c={c}, p={p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::parameter("alpha must lie in (0, 1)"));
    }
    let m = p as f64;
    let c = c as f64;

    // Coefficients of the numerator polynomial, grouped by powers of alpha.
    let a4 = c * c * m * m - 4.0 * c * c * m + 4.0 * c * c + 2.0 * c * m * m - 4.0 * c * m + c
        + m
        - 1.0;
    let a3 = 4.0 * c * c * m - 8.0 * c * c + 2.0 * c * m + 2.0 * c - 2.0 * m + 2.0;
    let a2 = 4.0 * c * c + 2.0 * c * m - 7.0 * c + m;
    let a1 = 4.0 * c - 2.0;
    let a0 = 1.0;
    let numerator = a0 + alpha * (a1 + alpha * (a2 + alpha * (a3 + alpha * a4)));

    let denominator = 2.0 * alpha * c - 2.0 * alpha - 2.0 * alpha * alpha * c
        + alpha * alpha
        + alpha * alpha * c * m
        + 1.0;

    Ok((m - c) * (alpha - 1.0) * (alpha - 1.0) * numerator / (denominator * denominator))
}

/// Finite-alpha lower bound on the squared modified-Nystrom error of the
/// adversarial matrix: `(m-c)/(m-k) (1 + 2k/c)` times the squared best
/// rank-k residual `(1-alpha)^2 (m-k)`.
pub fn lower_bound_value(m: usize, k: usize, c: usize, alpha: f64) -> Result<f64> {
    if !(k <= c && c <= m) {
        return Err(Error::parameter(format!("need k <= c <= m, got k={k}, c={c}, m={m}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::parameter("alpha must lie in [0, 1)"));
    }
    let (m_f, k_f, c_f) = (m as f64, k as f64, c as f64);
    let residual_sq = (1.0 - alpha) * (1.0 - alpha) * (m_f - k_f);
    Ok((m_f - c_f) / (m_f - k_f) * (1.0 + 2.0 * k_f / c_f) * residual_sq)
}

/// Spec of a synthetic low-rank SPSD instance for the exactness equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowRankSpec {
    pub m: usize,
    /// rank(A).
    pub r: usize,
    /// Rank of the leading c x c principal submatrix.
    pub leading_block_rank: usize,
    /// Size of the leading block the rank constraint applies to.
    pub c: usize,
}

/// Generates `A = G G^T` with G of rank `r` such that the leading c x c
/// principal submatrix has rank exactly `leading_block_rank`, by zeroing
/// trailing rows of G inside the leading block.
pub fn gen_low_rank_spsd<T: Scalar>(spec: &LowRankSpec, seed: RngSeed) -> Result<SymmetricMatrix<T>> {
    let LowRankSpec { m, r, leading_block_rank: lbr, c } = *spec;
    if r == 0 || r > m {
        return Err(Error::parameter(format!("need 1 <= r <= m, got r={r}, m={m}")));
    }
    if c == 0 || c > m {
        return Err(Error::parameter(format!("need 1 <= c <= m, got c={c}, m={m}")));
    }
    if lbr > r.min(c) {
        return Err(Error::parameter(format!(
            "leading block rank {lbr} exceeds min(r, c) = {}",
            r.min(c)
        )));
    }
    // Rows below the block plus the surviving block rows must still reach r.
    if lbr + (m - c) < r {
        return Err(Error::parameter(format!(
            "infeasible: {lbr} surviving block rows + {} tail rows < rank {r}",
            m - c
        )));
    }

    let mut rng = seed.rng();
    let mut g = DenseMatrix::<T>::zeros(m, r);
    for j in 0..r {
        for i in 0..m {
            // Box-Muller from two uniforms; plain Gaussian entries.
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            g.set(i, j, T::from_f64_c(z));
        }
    }
    if lbr < r.min(c) {
        for i in lbr..c {
            for j in 0..r {
                g.set(i, j, T::zero());
            }
        }
    }
    let prod = g.matmul(&g.transpose())?;
    SymmetricMatrix::from_dense_lower(&prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::columns::ColumnSet;
    use crate::linalg::{numeric_rank, symmetric_tail_norm, NormKind};
    use crate::nystrom::{approximate, residual_norm, IntersectionMethod};

    #[test]
    fn adversarial_blocks_layout() {
        let spec = AdversarialSpec { m: 4, k: 2, alpha: 0.5 };
        let a = build_block_adversarial::<f64>(&spec).unwrap();
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 0), 0.5);
        assert_eq!(a.get(2, 0), 0.0);
        assert_eq!(a.get(3, 2), 0.5);
        assert_eq!(a.get(3, 3), 1.0);
    }

    #[test]
    fn adversarial_alpha_zero_is_identity() {
        let spec = AdversarialSpec { m: 6, k: 3, alpha: 0.0 };
        let a = build_block_adversarial::<f64>(&spec).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn adversarial_is_positive_definite() {
        let spec = AdversarialSpec { m: 12, k: 3, alpha: 0.8 };
        let a = build_block_adversarial::<f64>(&spec).unwrap();
        let eigs = crate::linalg::symmetric_eigenvalues(&a).unwrap();
        let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min - 0.2).abs() < 1e-10, "smallest eigenvalue {min}");
    }

    #[test]
    fn adversarial_rejects_bad_specs() {
        assert!(build_block_adversarial::<f64>(&AdversarialSpec { m: 5, k: 2, alpha: 0.5 })
            .is_err());
        assert!(build_block_adversarial::<f64>(&AdversarialSpec { m: 4, k: 2, alpha: 1.0 })
            .is_err());
    }

    #[test]
    fn residual_closed_form_values() {
        let spec = AdversarialSpec { m: 100, k: 4, alpha: 0.5 };
        let want = 0.5 * 96.0f64.sqrt();
        assert!((adversarial_residual_norm::<f64>(&spec).unwrap() - want).abs() < 1e-12);
        let id_spec = AdversarialSpec { m: 9, k: 3, alpha: 0.0 };
        assert!(
            (adversarial_residual_norm::<f64>(&id_spec).unwrap() - 6.0f64.sqrt()).abs() < 1e-12
        );
    }

    #[test]
    fn best_rank_k_of_small_adversarial_matrix() {
        // m=4, k=2, alpha=0.5: ||A - A_2||_F = 0.5 sqrt(2).
        let spec = AdversarialSpec { m: 4, k: 2, alpha: 0.5 };
        let a = build_block_adversarial::<f64>(&spec).unwrap();
        let dense = a.to_dense();
        let a2 = crate::linalg::best_rank_k(&dense, 2).unwrap();
        let res = dense.sub(&a2).unwrap().frobenius_norm();
        let want = 0.5 * 2.0f64.sqrt();
        assert!((res - want).abs() < 1e-10, "residual {res}, closed form {want}");
        assert!((adversarial_residual_norm::<f64>(&spec).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn residual_closed_form_matches_eigenvalues() {
        let spec = AdversarialSpec { m: 60, k: 3, alpha: 0.7 };
        let a = build_block_adversarial::<f64>(&spec).unwrap();
        let via_eigs = symmetric_tail_norm(&a, 3, NormKind::Frobenius).unwrap();
        let closed = adversarial_residual_norm::<f64>(&spec).unwrap();
        assert!(
            (via_eigs - closed).abs() <= 1e-8 * closed,
            "eigen {via_eigs} vs closed {closed}"
        );
    }

    #[test]
    fn single_block_spot_value() {
        // p=2, c=1, alpha=0.5 gives exactly 0.54.
        let got = single_block_modified_error(2, 1, 0.5).unwrap();
        assert!((got - 0.54).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn single_block_alpha_to_zero_limit() {
        // As alpha -> 0 the block becomes the identity: approximating with
        // one column leaves the other unit diagonal entry, error -> 1.
        let got = single_block_modified_error(2, 1, 1e-6).unwrap();
        assert!((got - 1.0).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn single_block_matches_brute_force() {
        // Brute force: build the block, take its first c columns, compute the
        // modified approximation and the residual directly.
        for &(p, c, alpha) in
            &[(2usize, 1usize, 0.5f64), (5, 2, 0.3), (8, 3, 0.9), (12, 7, 0.05), (6, 1, 0.77)]
        {
            let spec = AdversarialSpec { m: p, k: 1, alpha };
            let b = build_block_adversarial::<f64>(&spec).unwrap();
            let cols = ColumnSet::new((0..c).collect()).unwrap();
            let approx = approximate(&b, &cols, IntersectionMethod::ModifiedNaive).unwrap();
            let brute = residual_norm(&b, &approx, NormKind::Frobenius).unwrap().powi(2);
            let closed = single_block_modified_error(p, c, alpha).unwrap();
            assert!(
                (brute - closed).abs() <= 1e-6 * closed.max(1e-12),
                "p={p} c={c} alpha={alpha}: brute {brute} vs closed {closed}"
            );
        }
    }

    #[test]
    fn lower_bound_values() {
        assert!((lower_bound_value(4, 2, 2, 0.5).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(lower_bound_value(10, 2, 10, 0.3).unwrap(), 0.0);
        assert!(lower_bound_value(10, 5, 3, 0.5).is_err());
    }

    #[test]
    fn low_rank_generator_controls_ranks() {
        let seed = RngSeed(7);
        let spec = LowRankSpec { m: 30, r: 5, leading_block_rank: 5, c: 10 };
        let a = gen_low_rank_spsd::<f64>(&spec, seed).unwrap();
        assert_eq!(numeric_rank(&a.to_dense(), None).unwrap(), 5);
        let w = a.principal_submatrix(&(0..10).collect::<Vec<_>>()).unwrap();
        assert_eq!(numeric_rank(&w.to_dense(), None).unwrap(), 5);

        let deficient = LowRankSpec { m: 30, r: 5, leading_block_rank: 4, c: 10 };
        let a2 = gen_low_rank_spsd::<f64>(&deficient, seed).unwrap();
        assert_eq!(numeric_rank(&a2.to_dense(), None).unwrap(), 5);
        let w2 = a2.principal_submatrix(&(0..10).collect::<Vec<_>>()).unwrap();
        assert_eq!(numeric_rank(&w2.to_dense(), None).unwrap(), 4);
    }

    #[test]
    fn low_rank_generator_rejects_infeasible() {
        // Not enough surviving rows to reach rank r.
        let spec = LowRankSpec { m: 10, r: 8, leading_block_rank: 1, c: 9 };
        assert!(gen_low_rank_spsd::<f64>(&spec, RngSeed(0)).is_err());
        let bad = LowRankSpec { m: 10, r: 3, leading_block_rank: 4, c: 5 };
        assert!(gen_low_rank_spsd::<f64>(&bad, RngSeed(0)).is_err());
    }

    #[test]
    fn full_rank_instance_leaves_residual() {
        let spec = LowRankSpec { m: 20, r: 20, leading_block_rank: 8, c: 8 };
        let a = gen_low_rank_spsd::<f64>(&spec, RngSeed(3)).unwrap();
        let cols = ColumnSet::new((0..8).collect()).unwrap();
        let approx = approximate(&a, &cols, IntersectionMethod::ModifiedNaive).unwrap();
        let r = residual_norm(&a, &approx, NormKind::Frobenius).unwrap();
        assert!(r > 1e-6);
    }
}
