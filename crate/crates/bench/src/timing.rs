//! Wall-clock comparison of the three intersection computations on identical
//! uniformly sampled column sets.

use nystrom_core::error::Result;
use nystrom_core::nystrom::{approximate, IntersectionMethod};
use nystrom_core::samplers::{uniform_sample, RngSeed};
use nystrom_core::spsd::SymmetricOps;
use nystrom_core::SpsdMatrix;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: String,
    pub seconds: Vec<f64>,
    pub mean_s: f64,
    pub median_s: f64,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub order: usize,
    pub sparse: bool,
    pub c: usize,
    pub repeats: usize,
    pub seed: u64,
    pub methods: Vec<MethodTiming>,
    /// Largest relative Frobenius difference between the fast and naive
    /// intersection matrices observed across the repeats.
    pub fast_vs_naive_max_rel_diff: f64,
    /// mean naive time / mean fast time.
    pub fast_speedup: f64,
}

impl TimingReport {
    pub fn mean_of(&self, method: &str) -> Option<f64> {
        self.methods.iter().find(|m| m.method == method).map(|m| m.mean_s)
    }
}

fn summarize(method: &str, seconds: Vec<f64>, fallbacks: usize) -> MethodTiming {
    let mean = seconds.iter().sum::<f64>() / seconds.len() as f64;
    let mut sorted = seconds.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let median = sorted[sorted.len() / 2];
    MethodTiming { method: method.to_string(), seconds, mean_s: mean, median_s: median, fallbacks }
}

/// Times standard, modified-naive and modified-fast intersection computation
/// on the same uniformly sampled C per repeat. Runs strictly sequentially so
/// the measurements do not contend with each other.
pub fn run_timing_comparison(
    matrix: &SpsdMatrix<f64>,
    c: usize,
    repeats: usize,
    seed: RngSeed,
) -> Result<TimingReport> {
    if repeats == 0 {
        return Err(nystrom_core::Error::parameter("repeats must be at least 1"));
    }
    let m = matrix.order();
    if c >= m {
        return Err(nystrom_core::Error::parameter(format!(
            "c = {c} must be smaller than the order {m}"
        )));
    }

    let mut std_s = Vec::with_capacity(repeats);
    let mut naive_s = Vec::with_capacity(repeats);
    let mut fast_s = Vec::with_capacity(repeats);
    let mut fast_fallbacks = 0usize;
    let mut max_rel_diff = 0.0f64;

    for rep in 0..repeats {
        let mut rng = seed.derive(rep).rng();
        let cols = uniform_sample(m, c, &mut rng)?;

        let t = Instant::now();
        let _standard = approximate(matrix, &cols, IntersectionMethod::Standard)?;
        std_s.push(t.elapsed().as_secs_f64());

        let t = Instant::now();
        let naive = approximate(matrix, &cols, IntersectionMethod::ModifiedNaive)?;
        naive_s.push(t.elapsed().as_secs_f64());

        let t = Instant::now();
        let fast = approximate(matrix, &cols, IntersectionMethod::ModifiedFast)?;
        fast_s.push(t.elapsed().as_secs_f64());
        if fast.fallback() {
            fast_fallbacks += 1;
        } else {
            let diff = fast.u().to_dense().sub(&naive.u().to_dense())?.frobenius_norm();
            let denom = naive.u().to_dense().frobenius_norm().max(f64::MIN_POSITIVE);
            max_rel_diff = max_rel_diff.max(diff / denom);
        }
    }

    let naive = summarize("modified_naive", naive_s, 0);
    let fast = summarize("modified_fast", fast_s, fast_fallbacks);
    let speedup = naive.mean_s / fast.mean_s.max(f64::MIN_POSITIVE);
    Ok(TimingReport {
        order: m,
        sparse: matrix.is_sparse(),
        c,
        repeats,
        seed: seed.0,
        methods: vec![summarize("standard", std_s, 0), naive, fast],
        fast_vs_naive_max_rel_diff: max_rel_diff,
        fast_speedup: speedup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nystrom_core::oracle::{build_block_adversarial, AdversarialSpec};

    #[test]
    fn report_covers_all_three_methods() {
        let a = build_block_adversarial::<f64>(&AdversarialSpec { m: 40, k: 4, alpha: 0.6 })
            .unwrap();
        let report =
            run_timing_comparison(&SpsdMatrix::Dense(a), 8, 2, RngSeed(3)).unwrap();
        let names: Vec<&str> = report.methods.iter().map(|m| m.method.as_str()).collect();
        assert_eq!(names, vec!["standard", "modified_naive", "modified_fast"]);
        for m in &report.methods {
            assert_eq!(m.seconds.len(), 2);
            assert!(m.mean_s >= 0.0);
        }
        // Fast and naive agree while timing.
        assert!(report.fast_vs_naive_max_rel_diff < 1e-8);
    }
}
