//! Seeded synthetic datasets for desk-scale experiments.

use nystrom_core::dense::DenseMatrix;
use nystrom_core::error::Result;
use nystrom_core::kernel::{Dataset, Normalization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clustered point cloud in `[0, 1]^d`: `clusters` uniform centers, Gaussian
/// spread around them. Gives RBF kernels a decaying spectrum, which is what
/// the sampling comparisons need to be informative.
pub fn clustered_dataset(
    instances: usize,
    dims: usize,
    clusters: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters.max(1))
        .map(|_| (0..dims).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut values = DenseMatrix::zeros(instances, dims);
    for i in 0..instances {
        let center = &centers[i % centers.len()];
        for j in 0..dims {
            let z = gaussian(&mut rng);
            values.set(i, j, (center[j] + spread * z).clamp(0.0, 1.0));
        }
    }
    Dataset::from_values(values, Normalization::Minmax)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Seeded dense SPD matrix `G G^T / m + ridge I`; the ridge keeps every
/// principal submatrix well conditioned (eigenvalue interlacing).
pub fn random_spd(m: usize, ridge: f64, seed: u64) -> nystrom_core::Symmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DenseMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            g.set(i, j, gaussian(&mut rng));
        }
    }
    let prod = g.matmul(&g.transpose()).expect("square product");
    let scaled = prod.scale(1.0 / m as f64);
    let mut a = nystrom_core::Symmetric::from_dense_lower(&scaled).expect("square");
    for i in 0..m {
        let v = a.get(i, i);
        a.set(i, i, v + ridge);
    }
    a
}
