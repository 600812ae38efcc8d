//! Structural properties of the two Nystrom models.

use nystrom_core::columns::ColumnSet;
use nystrom_core::linalg::NormKind;
use nystrom_core::nystrom::{
    approximate, modified_intersection_fast, modified_intersection_naive, residual_norm,
    IntersectionMethod,
};
use nystrom_core::oracle::{gen_low_rank_spsd, LowRankSpec};
use nystrom_core::samplers::{uniform_sample, RngSeed};
use nystrom_core::{DenseMatrix, SymmetricMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(m: usize, seed: u64) -> SymmetricMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DenseMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            g.set(i, j, (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos());
        }
    }
    let prod = g.matmul(&g.transpose()).unwrap().scale(1.0 / m as f64);
    let mut a = SymmetricMatrix::from_dense_lower(&prod).unwrap();
    for i in 0..m {
        let v = a.get(i, i);
        a.set(i, i, v + 0.5);
    }
    a
}

#[test]
fn modified_intersection_minimizes_frobenius_error() {
    let a = random_spd(40, 11);
    let mut rng = RngSeed(12).rng();
    let cols = uniform_sample(40, 8, &mut rng).unwrap();
    let approx = approximate(&a, &cols, IntersectionMethod::ModifiedNaive).unwrap();
    let base = residual_norm(&a, &approx, NormKind::Frobenius).unwrap();

    // 50 random symmetric perturbations of U with Frobenius norm 0.01 never
    // reduce the residual.
    let c = cols.len();
    let mut pert_rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..50 {
        let mut delta = DenseMatrix::<f64>::zeros(c, c);
        for j in 0..c {
            for i in j..c {
                let v: f64 = pert_rng.gen::<f64>() - 0.5;
                delta.set(i, j, v);
                delta.set(j, i, v);
            }
        }
        let delta = delta.scale(0.01 / delta.frobenius_norm());
        let u_pert = approx.u().to_dense().add(&delta).unwrap();
        let perturbed = rebuild_with_u(&a, &cols, &u_pert);
        let res = residual_norm(&a, &perturbed, NormKind::Frobenius).unwrap();
        assert!(
            res >= base - 1e-10,
            "trial {trial}: perturbed residual {res} beat the minimizer {base}"
        );
    }
}

/// Builds the approximation C U C^T for a caller-supplied U.
fn rebuild_with_u(
    a: &SymmetricMatrix<f64>,
    cols: &ColumnSet,
    u: &DenseMatrix<f64>,
) -> nystrom_core::nystrom::NystromApproximation<f64> {
    let rec = nystrom_core::nystrom::ApproximationRecord {
        columns: cols.clone(),
        u: SymmetricMatrix::from_dense_lower(u).unwrap(),
        method: IntersectionMethod::ModifiedNaive,
        fallback: false,
        seed: 0,
        order: a.order(),
    };
    rec.rebuild(a).unwrap()
}

#[test]
fn modified_never_loses_to_standard_on_same_columns() {
    for seed in 0..25u64 {
        let a = random_spd(50, 100 + seed);
        let mut rng = RngSeed(200 + seed).rng();
        let cols = uniform_sample(50, 6 + (seed % 5) as usize, &mut rng).unwrap();
        let standard = approximate(&a, &cols, IntersectionMethod::Standard).unwrap();
        let modified = approximate(&a, &cols, IntersectionMethod::ModifiedNaive).unwrap();
        let r_std = residual_norm(&a, &standard, NormKind::Frobenius).unwrap();
        let r_mod = residual_norm(&a, &modified, NormKind::Frobenius).unwrap();
        assert!(
            r_mod <= r_std + 1e-10,
            "seed {seed}: modified {r_mod} worse than standard {r_std}"
        );
    }
}

#[test]
fn fast_matches_naive_on_well_conditioned_w() {
    for seed in 0..8u64 {
        let a = random_spd(80, 300 + seed);
        let mut rng = RngSeed(400 + seed).rng();
        let cols = uniform_sample(80, 10, &mut rng).unwrap();
        let fast = modified_intersection_fast(&a, cols.indices()).unwrap();
        let naive = modified_intersection_naive(&a, &a.columns(cols.indices()).unwrap()).unwrap();
        let diff = fast.to_dense().sub(&naive.to_dense()).unwrap().frobenius_norm();
        let rel = diff / naive.to_dense().frobenius_norm();
        assert!(rel < 1e-8, "seed {seed}: fast vs naive relative difference {rel}");
    }
}

#[test]
fn exactness_equivalence_both_directions() {
    // rank(W) = rank(A): both models reconstruct A.
    for seed in 0..10u64 {
        let spec = LowRankSpec { m: 40, r: 4, leading_block_rank: 4, c: 9 };
        let a = gen_low_rank_spsd::<f64>(&spec, RngSeed(500 + seed)).unwrap();
        let cols = ColumnSet::new((0..9).collect()).unwrap();
        let scale = a.frobenius_norm();
        for method in [IntersectionMethod::Standard, IntersectionMethod::ModifiedNaive] {
            let approx = approximate(&a, &cols, method).unwrap();
            let rel = residual_norm(&a, &approx, NormKind::Frobenius).unwrap() / scale;
            assert!(rel < 1e-8, "seed {seed} {method:?}: relative residual {rel}");
        }
    }
    // rank(W) < rank(A): the modified model cannot be exact.
    for seed in 0..10u64 {
        let spec = LowRankSpec { m: 40, r: 4, leading_block_rank: 3, c: 9 };
        let a = gen_low_rank_spsd::<f64>(&spec, RngSeed(600 + seed)).unwrap();
        let cols = ColumnSet::new((0..9).collect()).unwrap();
        let approx = approximate(&a, &cols, IntersectionMethod::ModifiedNaive).unwrap();
        let res = residual_norm(&a, &approx, NormKind::Frobenius).unwrap();
        assert!(res > 1e-6, "seed {seed}: deficient W still reconstructed A ({res})");
    }
}

#[test]
fn intersection_matrix_is_symmetric() {
    let a = random_spd(30, 900);
    let mut rng = RngSeed(901).rng();
    let cols = uniform_sample(30, 6, &mut rng).unwrap();
    for method in [
        IntersectionMethod::Standard,
        IntersectionMethod::ModifiedNaive,
        IntersectionMethod::ModifiedFast,
    ] {
        let approx = approximate(&a, &cols, method).unwrap();
        let u = approx.u().to_dense();
        let asym = u.sub(&u.transpose()).unwrap().max_abs();
        assert!(asym < 1e-10, "{method:?}: asymmetry {asym}");
    }
}
