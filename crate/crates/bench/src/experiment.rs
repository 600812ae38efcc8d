//! Sweep specification and execution.

use nystrom_core::error::{Error, Result};
use nystrom_core::io;
use nystrom_core::kernel::{self, Dataset, DatasetFormat, KernelConfig};
use nystrom_core::linalg::{leverage_scores_symmetric, NormKind};
use nystrom_core::nystrom::{
    approximate, error_ratio_from_parts, reference_tail, residual_norm, IntersectionMethod,
};
use nystrom_core::oracle::{build_block_adversarial, AdversarialSpec};
use nystrom_core::samplers::{sample_columns, RngSeed, SamplerConfig, SamplerMethod};
use nystrom_core::spsd::SymmetricOps;
use nystrom_core::SpsdMatrix;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

/// One (sampler, intersection) pair of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub sampler: SamplerMethod,
    pub intersection: IntersectionMethod,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        format!("{}+{}", self.sampler, self.intersection)
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (sampler, intersection) = s.split_once('+').ok_or_else(|| {
            Error::parameter(format!("method '{s}' must look like sampler+intersection"))
        })?;
        Ok(Self { sampler: sampler.parse()?, intersection: intersection.parse()? })
    }
}

/// Dense/sparse matrix file formats understood by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Csv,
    Bin,
    MatrixMarket,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "bin" | "nysd" => Ok(Self::Bin),
            "mtx" | "matrix-market" => Ok(Self::MatrixMarket),
            other => Err(Error::parameter(format!("unknown matrix format '{other}'"))),
        }
    }
}

/// Where the SPSD input comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentInput {
    Dataset {
        path: PathBuf,
        format: DatasetFormat,
        kernel: KernelConfig,
        #[serde(default)]
        header: bool,
        #[serde(default)]
        label_col: Option<usize>,
    },
    Matrix {
        path: PathBuf,
        format: MatrixFormat,
    },
    Adversarial(AdversarialSpec),
}

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// A full sweep description; serializes as the spec echo in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub input: ExperimentInput,
    pub k: usize,
    pub c_values: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub repeats: usize,
    pub base_seed: u64,
    pub norm: NormKind,
    /// Sampler knobs shared by every method.
    pub epsilon: f64,
    pub mu: f64,
    pub splits: [f64; 3],
    /// Zero out recorded timings (determinism checks diff the CSV bytes).
    #[serde(default)]
    pub zero_timings: bool,
    /// Downgrade every fast intersection to the naive path.
    #[serde(default)]
    pub force_naive: bool,
    /// Refuse dense inputs above this order.
    #[serde(default = "default_dense_cap")]
    pub max_dense_order: usize,
    /// Also compute and report the matrix coherence at rank k.
    #[serde(default)]
    pub report_coherence: bool,
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

impl ExperimentSpec {
    pub fn new(input: ExperimentInput, k: usize) -> Self {
        Self {
            input,
            k,
            c_values: Vec::new(),
            methods: Vec::new(),
            repeats: 1,
            base_seed: 0,
            norm: NormKind::Frobenius,
            epsilon: 0.5,
            mu: 1.0,
            splits: nystrom_core::samplers::DEFAULT_SPLITS,
            zero_timings: false,
            force_naive: false,
            max_dense_order: DEFAULT_DENSE_CAP,
            report_coherence: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::parameter("target rank k must be at least 1"));
        }
        if self.c_values.is_empty() {
            return Err(Error::parameter("at least one c value is required"));
        }
        if self.c_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter("c values must be strictly ascending"));
        }
        if self.methods.is_empty() {
            return Err(Error::parameter("at least one method is required"));
        }
        if self.repeats == 0 {
            return Err(Error::parameter("repeats must be at least 1"));
        }
        Ok(())
    }

    /// Loads (or builds) the SPSD operand this spec runs against.
    pub fn load_matrix(&self) -> Result<SpsdMatrix<f64>> {
        let matrix = match &self.input {
            ExperimentInput::Dataset { path, format, kernel: cfg, header, label_col } => {
                cfg.validate()?;
                let data: Dataset<f64> =
                    kernel::load_dataset(path, *format, cfg.normalization, *header, *label_col)?;
                let k = kernel::rbf_kernel(&data, cfg.sigma)?;
                match cfg.sparsify_fraction {
                    Some(f) => SpsdMatrix::Sparse(kernel::sparsify(&k, f)?),
                    None => SpsdMatrix::Dense(k),
                }
            }
            ExperimentInput::Matrix { path, format } => match format {
                MatrixFormat::Csv => {
                    let d = io::read_dense_csv::<f64>(path)?;
                    SpsdMatrix::Dense(nystrom_core::SymmetricMatrix::from_dense_lower(&d)?)
                }
                MatrixFormat::Bin => SpsdMatrix::Dense(io::read_symmetric_binary(path)?),
                MatrixFormat::MatrixMarket => SpsdMatrix::Sparse(io::read_matrix_market(path)?),
            },
            ExperimentInput::Adversarial(spec) => {
                SpsdMatrix::Dense(build_block_adversarial(spec)?)
            }
        };
        if let SpsdMatrix::Dense(d) = &matrix {
            if d.order() > self.max_dense_order {
                return Err(Error::parameter(format!(
                    "dense input of order {} exceeds the cap {}; raise --max-dense-order to override",
                    d.order(),
                    self.max_dense_order
                )));
            }
        }
        Ok(matrix)
    }
}

/// One measured trial of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    pub c: usize,
    pub trial: usize,
    pub seed: u64,
    pub error_ratio: f64,
    pub degenerate: bool,
    pub sampling_s: f64,
    pub intersection_s: f64,
    pub fallback: bool,
}

/// Per-(method, c) aggregate: the minimum ratio over the repeats (the
/// headline statistic of best-of-t runs) plus mean/stdev for honesty, and
/// mean phase timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub c: usize,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub stdev_ratio: f64,
    pub mean_sampling_s: f64,
    pub mean_intersection_s: f64,
}

/// Sweep output: the spec echo, every trial record, and the aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultTable {
    pub spec: ExperimentSpec,
    pub order: usize,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<f64>,
}

impl ResultTable {
    /// Recomputes the aggregates from the records (consistency checks).
    pub fn recompute_aggregates(&self) -> Vec<Aggregate> {
        aggregate(&self.records)
    }
}

fn aggregate(records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.c);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, c)| {
            let cell: Vec<&TrialRecord> =
                records.iter().filter(|r| r.method == method && r.c == c).collect();
            let n = cell.len() as f64;
            let min_ratio =
                cell.iter().map(|r| r.error_ratio).fold(f64::INFINITY, f64::min);
            let mean_ratio = cell.iter().map(|r| r.error_ratio).sum::<f64>() / n;
            let var = cell
                .iter()
                .map(|r| (r.error_ratio - mean_ratio).powi(2))
                .sum::<f64>()
                / n.max(1.0);
            Aggregate {
                method,
                c,
                min_ratio,
                mean_ratio,
                stdev_ratio: var.sqrt(),
                mean_sampling_s: cell.iter().map(|r| r.sampling_s).sum::<f64>() / n,
                mean_intersection_s: cell.iter().map(|r| r.intersection_s).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Runs the sweep: for every (method, c) cell, `repeats` seeded trials with
/// seeds `base_seed + trial`, so trials pair across cells. Trials within a
/// cell run concurrently; records are ordered by (method, c, trial).
pub fn run_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let matrix = spec.load_matrix()?;
    run_sweep_on(spec, &matrix)
}

/// Sweep against an already-loaded operand (tests and the CLI share this).
pub fn run_sweep_on(spec: &ExperimentSpec, matrix: &SpsdMatrix<f64>) -> Result<ResultTable> {
    spec.validate()?;
    let m = matrix.order();
    if let Some(&c) = spec.c_values.iter().find(|&&c| c >= m) {
        return Err(Error::parameter(format!("c = {c} must be smaller than the order {m}")));
    }
    if spec.k >= m {
        return Err(Error::parameter(format!("k = {} must be smaller than the order {m}", spec.k)));
    }

    // Reference tail ||A - A_k|| computed once per sweep.
    let (tail, scale) = reference_tail(matrix, spec.k, spec.norm)?;

    let needs_leverage = spec.methods.iter().any(|ms| ms.sampler == SamplerMethod::Leverage);
    let leverage = if needs_leverage {
        let dense = nystrom_core::SymmetricMatrix::from_dense_lower(&matrix.to_dense())?;
        Some(leverage_scores_symmetric(&dense, spec.k)?)
    } else {
        None
    };

    let coherence = if spec.report_coherence {
        let dense = nystrom_core::SymmetricMatrix::from_dense_lower(&matrix.to_dense())?;
        Some(nystrom_core::linalg::coherence_symmetric(&dense, spec.k)?)
    } else {
        None
    };

    let mut records = Vec::new();
    for method in &spec.methods {
        let intersection = if spec.force_naive
            && method.intersection == IntersectionMethod::ModifiedFast
        {
            IntersectionMethod::ModifiedNaive
        } else {
            method.intersection
        };
        for &c in &spec.c_values {
            let sampler_cfg = SamplerConfig {
                method: method.sampler,
                k: spec.k,
                epsilon: spec.epsilon,
                mu: spec.mu,
                budget: Some(nystrom_core::samplers::BudgetOverride {
                    total: c,
                    splits: spec.splits,
                }),
                delta: 0.25,
                theta: 0.5,
            };
            use rayon::prelude::*;
            let cell: Result<Vec<TrialRecord>> = (0..spec.repeats)
                .into_par_iter()
                .map(|trial| {
                    let seed = RngSeed(spec.base_seed).derive(trial);
                    let t0 = Instant::now();
                    let drawn = sample_columns(matrix, &sampler_cfg, seed, leverage.as_deref())?;
                    let sampling_s = t0.elapsed().as_secs_f64();
                    let t1 = Instant::now();
                    let approx = approximate(matrix, &drawn.columns, intersection)?;
                    let intersection_s = t1.elapsed().as_secs_f64();
                    let residual = residual_norm(matrix, &approx, spec.norm)?;
                    let ratio = error_ratio_from_parts(residual, tail, scale, m);
                    Ok(TrialRecord {
                        method: method.label(),
                        c,
                        trial,
                        seed: seed.0,
                        error_ratio: ratio.value,
                        degenerate: ratio.degenerate,
                        sampling_s: if spec.zero_timings { 0.0 } else { sampling_s },
                        intersection_s: if spec.zero_timings { 0.0 } else { intersection_s },
                        fallback: approx.fallback(),
                    })
                })
                .collect();
            records.extend(cell?);
        }
    }

    let aggregates = aggregate(&records);
    Ok(ResultTable { spec: spec.clone(), order: m, records, aggregates, coherence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nystrom_core::dense::DenseMatrix;
    use nystrom_core::kernel::Normalization;

    fn tiny_spec() -> (ExperimentSpec, SpsdMatrix<f64>) {
        let raw = DenseMatrix::from_fn(40, 2, |i, j| {
            ((i * 13 + 7 * j) % 19) as f64 / 19.0
        });
        let data = Dataset::from_values(raw, Normalization::Minmax).unwrap();
        let k = kernel::rbf_kernel(&data, 0.25).unwrap();
        let mut spec = ExperimentSpec::new(
            ExperimentInput::Adversarial(AdversarialSpec { m: 4, k: 2, alpha: 0.1 }),
            3,
        );
        spec.c_values = vec![6];
        spec.methods = vec![MethodSpec {
            sampler: SamplerMethod::Uniform,
            intersection: IntersectionMethod::ModifiedFast,
        }];
        spec.repeats = 1;
        (spec, SpsdMatrix::Dense(k))
    }

    #[test]
    fn single_trial_sweep_has_one_record() {
        let (spec, matrix) = tiny_spec();
        let table = run_sweep_on(&spec, &matrix).unwrap();
        assert_eq!(table.records.len(), 1);
        assert_eq!(table.aggregates.len(), 1);
        assert_eq!(table.records[0].method, "uniform+modified_fast");
        assert!(table.records[0].error_ratio.is_finite());
    }

    #[test]
    fn aggregates_match_recomputation() {
        let (mut spec, matrix) = tiny_spec();
        spec.repeats = 5;
        spec.c_values = vec![4, 8];
        let table = run_sweep_on(&spec, &matrix).unwrap();
        assert_eq!(table.records.len(), 10);
        let again = table.recompute_aggregates();
        assert_eq!(table.aggregates.len(), again.len());
        for (a, b) in table.aggregates.iter().zip(again.iter()) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.c, b.c);
            assert_eq!(a.min_ratio, b.min_ratio);
            assert_eq!(a.mean_ratio, b.mean_ratio);
        }
        // min aggregate equals the minimum over the records.
        for agg in &table.aggregates {
            let min = table
                .records
                .iter()
                .filter(|r| r.method == agg.method && r.c == agg.c)
                .map(|r| r.error_ratio)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(agg.min_ratio, min);
        }
    }

    #[test]
    fn spec_validation_rejects_bad_grids() {
        let (mut spec, _) = tiny_spec();
        spec.c_values = vec![8, 4];
        assert!(spec.validate().is_err());
        spec.c_values = vec![];
        assert!(spec.validate().is_err());
        spec.c_values = vec![4];
        spec.repeats = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn dense_cap_refuses_large_matrices() {
        let mut spec = ExperimentSpec::new(
            ExperimentInput::Adversarial(AdversarialSpec { m: 64, k: 4, alpha: 0.5 }),
            4,
        );
        spec.c_values = vec![8];
        spec.methods = vec![MethodSpec {
            sampler: SamplerMethod::Uniform,
            intersection: IntersectionMethod::Standard,
        }];
        spec.max_dense_order = 32;
        assert!(spec.load_matrix().is_err());
        spec.max_dense_order = 64;
        assert!(spec.load_matrix().is_ok());
    }

    #[test]
    fn method_spec_parses() {
        let ms: MethodSpec = "uniform_adaptive2+modified_fast".parse().unwrap();
        assert_eq!(ms.sampler, SamplerMethod::UniformAdaptive2);
        assert_eq!(ms.intersection, IntersectionMethod::ModifiedFast);
        assert!("nope".parse::<MethodSpec>().is_err());
        assert_eq!(ms.label(), "uniform_adaptive2+modified_fast");
    }
}
