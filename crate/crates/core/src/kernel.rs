//! RBF kernel construction from tabular datasets, plus magnitude-threshold
//! sparsification.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::io::parse_numeric_row;
use crate::scalar::Scalar;
use crate::sparse::SparseSymmetric;
use crate::symmetric::SymmetricMatrix;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Per-feature normalization applied to a dataset before kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    Zscore,
    /// Scale each feature to [0, 1]. The default: a fixed RBF scale is only
    /// meaningful on bounded-scale data.
    #[default]
    Minmax,
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "zscore" => Ok(Self::Zscore),
            "minmax" => Ok(Self::Minmax),
            other => Err(Error::parameter(format!("unknown normalization '{other}'"))),
        }
    }
}

/// Dataset file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Comma-separated numeric rows.
    Csv,
    /// `label idx:value idx:value ...` with 1-based feature indices; the
    /// label is dropped.
    Libsvm,
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "libsvm" | "libsvm-like" => Ok(Self::Libsvm),
            other => Err(Error::parameter(format!("unknown dataset format '{other}'"))),
        }
    }
}

/// RBF kernel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// RBF scale sigma.
    pub sigma: f64,
    pub normalization: Normalization,
    /// Fraction of entries kept nonzero by [`sparsify`], when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsify_fraction: Option<f64>,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, normalization: Normalization::default(), sparsify_fraction: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::parameter("sigma must be positive"));
        }
        if let Some(f) = self.sparsify_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::parameter("sparsify fraction must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Tabular dataset: one row per instance, one column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    values: DenseMatrix<T>,
    normalization: Normalization,
}

impl<T: Scalar> Dataset<T> {
    /// Wraps raw values and applies the requested normalization.
    pub fn from_values(values: DenseMatrix<T>, normalization: Normalization) -> Result<Self> {
        if values.rows() < 2 {
            return Err(Error::parameter("a dataset needs at least 2 instances"));
        }
        values.validate_finite()?;
        let values = apply_normalization(values, normalization);
        Ok(Self { values, normalization })
    }

    pub fn instances(&self) -> usize {
        self.values.rows()
    }

    pub fn attributes(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &DenseMatrix<T> {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

/// Loads a dataset file. `header` skips the first row; `label_col` drops the
/// given 0-based column (CSV only; the libsvm label is always dropped).
pub fn load_dataset<T: Scalar>(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    normalization: Normalization,
    header: bool,
    label_col: Option<usize>,
) -> Result<Dataset<T>> {
    let raw = match format {
        DatasetFormat::Csv => read_csv_rows::<T>(path, header, label_col)?,
        DatasetFormat::Libsvm => read_libsvm_rows::<T>(path)?,
    };
    Dataset::from_values(raw, normalization)
}

fn read_csv_rows<T: Scalar>(
    path: impl AsRef<Path>,
    header: bool,
    label_col: Option<usize>,
) -> Result<DenseMatrix<T>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (header && lineno == 0) {
            continue;
        }
        let mut row = parse_numeric_row::<T>(trimmed, lineno + 1)?;
        if let Some(label) = label_col {
            if label >= row.len() {
                return Err(Error::data(
                    Some(lineno + 1),
                    format!("label column {label} out of range for {} fields", row.len()),
                ));
            }
            row.remove(label);
        }
        if row.is_empty() {
            return Err(Error::data(Some(lineno + 1), "row has no feature fields"));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::data(
                    Some(lineno + 1),
                    format!("expected {w} fields, found {}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    rows_to_matrix(rows)
}

fn read_libsvm_rows<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut sparse_rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut max_feature = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        // First token is the label; dropped.
        let _label = fields
            .next()
            .ok_or_else(|| Error::data(Some(lineno + 1), "empty record"))?;
        let mut row = Vec::new();
        for field in fields {
            let (idx, val) = field.split_once(':').ok_or_else(|| {
                Error::data(Some(lineno + 1), format!("expected idx:value, found '{field}'"))
            })?;
            let idx: usize = idx.parse().map_err(|_| {
                Error::data(Some(lineno + 1), format!("bad feature index '{idx}'"))
            })?;
            if idx == 0 {
                return Err(Error::data(Some(lineno + 1), "feature indices are 1-based"));
            }
            let val: f64 = val.parse().map_err(|_| {
                Error::data(Some(lineno + 1), format!("non-numeric value '{val}'"))
            })?;
            max_feature = max_feature.max(idx);
            row.push((idx - 1, T::from_f64_c(val)));
        }
        sparse_rows.push(row);
    }
    if sparse_rows.is_empty() {
        return Err(Error::data(None, "dataset holds no rows"));
    }
    let mut m = DenseMatrix::zeros(sparse_rows.len(), max_feature.max(1));
    for (i, row) in sparse_rows.iter().enumerate() {
        for &(j, v) in row {
            m.set(i, j, v);
        }
    }
    m.validate_finite()?;
    Ok(m)
}

fn rows_to_matrix<T: Scalar>(rows: Vec<Vec<T>>) -> Result<DenseMatrix<T>> {
    if rows.is_empty() {
        return Err(Error::data(None, "dataset holds no rows"));
    }
    let r = rows.len();
    let c = rows[0].len();
    let mut m = DenseMatrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m.validate_finite()?;
    Ok(m)
}

fn apply_normalization<T: Scalar>(
    mut values: DenseMatrix<T>,
    normalization: Normalization,
) -> DenseMatrix<T> {
    let m = values.rows();
    if m == 0 {
        return values;
    }
    let inv_m = T::one() / T::from_usize(m).unwrap();
    match normalization {
        Normalization::None => values,
        Normalization::Zscore => {
            for j in 0..values.cols() {
                let col = values.column_mut(j);
                let mean = col.iter().fold(T::zero(), |a, &v| a + v) * inv_m;
                let var = col.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
                    * (T::one() / T::from_usize(m - 1).unwrap());
                let std = var.sqrt();
                if std <= T::eps() * (T::one() + mean.abs()) {
                    col.fill(T::zero());
                } else {
                    for v in col.iter_mut() {
                        *v = (*v - mean) / std;
                    }
                }
            }
            values
        }
        Normalization::Minmax => {
            for j in 0..values.cols() {
                let col = values.column_mut(j);
                let (mut lo, mut hi) = (col[0], col[0]);
                for &v in col.iter() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let span = hi - lo;
                if span <= T::zero() {
                    col.fill(T::zero());
                } else {
                    for v in col.iter_mut() {
                        *v = (*v - lo) / span;
                    }
                }
            }
            values
        }
    }
}

/// Builds the dense RBF kernel `a_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))`.
/// The diagonal is exactly 1 and every entry lies in (0, 1].
pub fn rbf_kernel<T: Scalar>(data: &Dataset<T>, sigma: T) -> Result<SymmetricMatrix<T>> {
    if sigma <= T::zero() {
        return Err(Error::parameter("sigma must be positive"));
    }
    let m = data.instances();
    // Instances as contiguous columns for the pairwise loop.
    let points = data.values().transpose();
    let inv = T::one() / (T::from_f64_c(2.0) * sigma * sigma);

    use rayon::prelude::*;
    let cols: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let xj = points.column(j);
            let mut col = Vec::with_capacity(m - j);
            col.push(T::one()); // zero distance on the diagonal
            for i in (j + 1)..m {
                let xi = points.column(i);
                let mut d2 = T::zero();
                for (&a, &b) in xi.iter().zip(xj.iter()) {
                    let d = a - b;
                    d2 += d * d;
                }
                col.push((-d2 * inv).exp());
            }
            col
        })
        .collect();

    let mut kernel = SymmetricMatrix::zeros(m);
    let packed = kernel.packed_mut();
    let mut at = 0;
    for col in cols {
        packed[at..at + col.len()].copy_from_slice(&col);
        at += col.len();
    }
    Ok(kernel)
}

/// Keeps the largest-magnitude off-diagonal entries so that roughly
/// `nnz_fraction` of all m^2 entries stay nonzero; the diagonal is always
/// kept and magnitude ties are all retained.
pub fn sparsify<T: Scalar>(k: &SymmetricMatrix<T>, nnz_fraction: f64) -> Result<SparseSymmetric<T>> {
    if !(nnz_fraction > 0.0 && nnz_fraction <= 1.0) {
        return Err(Error::parameter("nnz fraction must lie in (0, 1]"));
    }
    let m = k.order();
    let target_entries = nnz_fraction * (m * m) as f64;
    let mut keep_pairs = (((target_entries - m as f64) / 2.0).round()).max(0.0) as usize;
    let max_pairs = m * (m - 1) / 2;
    keep_pairs = keep_pairs.min(max_pairs);
    if target_entries < m as f64 {
        log::warn!(
            "nnz fraction {nnz_fraction} cannot even hold the diagonal; keeping the diagonal anyway"
        );
    }

    // Magnitude threshold = keep_pairs-th largest off-diagonal magnitude.
    let threshold = if keep_pairs == 0 {
        None
    } else {
        let mut mags: Vec<f64> = Vec::with_capacity(max_pairs);
        for j in 0..m {
            for i in (j + 1)..m {
                mags.push(k.get(i, j).abs().as_f64());
            }
        }
        let nth = mags.len() - keep_pairs;
        mags.select_nth_unstable_by(nth, |a, b| a.partial_cmp(b).expect("finite magnitudes"));
        Some(mags[nth])
    };

    let mut triplets: Vec<(usize, usize, T)> = Vec::with_capacity(m + 2 * keep_pairs);
    for j in 0..m {
        let d = k.get(j, j);
        if d != T::zero() {
            triplets.push((j, j, d));
        }
        if let Some(thr) = threshold {
            for i in (j + 1)..m {
                let v = k.get(i, j);
                if v != T::zero() && v.abs().as_f64() >= thr {
                    triplets.push((i, j, v));
                }
            }
        }
    }
    SparseSymmetric::from_triplets(m, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn csv_dataset_no_normalization() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let d: Dataset<f64> =
            load_dataset(&path, DatasetFormat::Csv, Normalization::None, false, None).unwrap();
        assert_eq!(d.instances(), 3);
        assert_eq!(d.attributes(), 2);
        assert_eq!(d.values().get(2, 1), 6.0);
    }

    #[test]
    fn minmax_scales_to_unit_interval() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let d: Dataset<f64> =
            load_dataset(&path, DatasetFormat::Csv, Normalization::Minmax, false, None).unwrap();
        let col0: Vec<f64> = (0..3).map(|i| d.values().get(i, 0)).collect();
        assert_eq!(col0, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn zscore_recomputed_moments() {
        let raw = DenseMatrix::from_rows(&[&[1.0, 10.0], &[2.0, 20.0], &[3.0, 60.0], &[4.0, 30.0]])
            .unwrap();
        let d = Dataset::from_values(raw, Normalization::Zscore).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = (0..4).map(|i| d.values().get(i, j)).collect();
            let mean: f64 = col.iter().sum::<f64>() / 4.0;
            let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
            assert!((var - 1.0).abs() < 1e-10, "column {j} variance {var}");
        }
    }

    #[test]
    fn header_and_label_column_are_dropped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,b,y\n1,2,9\n3,4,8\n").unwrap();
        let d: Dataset<f64> =
            load_dataset(&path, DatasetFormat::Csv, Normalization::None, true, Some(2)).unwrap();
        assert_eq!(d.instances(), 2);
        assert_eq!(d.attributes(), 2);
        assert_eq!(d.values().get(1, 1), 4.0);
    }

    #[test]
    fn non_numeric_cell_reports_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "1,2\n3,x\n").unwrap();
        match load_dataset::<f64>(&path, DatasetFormat::Csv, Normalization::None, false, None) {
            Err(Error::Data { line: Some(2), .. }) => {}
            other => panic!("expected line-2 data error, got {other:?}"),
        }
    }

    #[test]
    fn libsvm_rows_parse() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.svm");
        std::fs::write(&path, "+1 1:0.5 3:2.0\n-1 2:1.0\n").unwrap();
        let d: Dataset<f64> =
            load_dataset(&path, DatasetFormat::Libsvm, Normalization::None, false, None).unwrap();
        assert_eq!(d.instances(), 2);
        assert_eq!(d.attributes(), 3);
        assert_eq!(d.values().get(0, 2), 2.0);
        assert_eq!(d.values().get(1, 1), 1.0);
        assert_eq!(d.values().get(1, 0), 0.0);
    }

    #[test]
    fn rbf_diagonal_is_exactly_one_and_entries_bounded() {
        let raw = DenseMatrix::from_rows(&[&[0.0], &[0.2], &[0.7], &[1.0]]).unwrap();
        let d = Dataset::from_values(raw, Normalization::None).unwrap();
        let k = rbf_kernel(&d, 0.2).unwrap();
        for i in 0..4 {
            assert_eq!(k.get(i, i), 1.0);
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = k.get(i, j);
                assert!(v > 0.0 && v <= 1.0);
            }
        }
        // x=0 vs x=0.2 at sigma=0.2: exp(-0.5).
        assert!((k.get(1, 0) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rbf_large_sigma_limit() {
        let raw =
            DenseMatrix::from_rows(&[&[0.0, 0.3], &[1.0, 0.9], &[0.4, 0.1]]).unwrap();
        let d = Dataset::from_values(raw, Normalization::None).unwrap();
        let k = rbf_kernel(&d, 1e6).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(k.get(i, j) >= 1.0 - 1e-6);
            }
        }
    }

    #[test]
    fn sparsify_keeps_top_magnitudes_and_diagonal() {
        // Off-diagonal magnitudes {0.9, 0.1, 0.5}; keep the top pair only.
        let mut k = SymmetricMatrix::zeros(3);
        for i in 0..3 {
            k.set(i, i, 1.0);
        }
        k.set(1, 0, 0.9);
        k.set(2, 0, 0.1);
        k.set(2, 1, 0.5);
        // Target 5 of 9 entries nonzero: 3 diagonal + one symmetric pair.
        let s = sparsify(&k, 5.0 / 9.0).unwrap();
        assert_eq!(s.get(1, 0), 0.9);
        assert_eq!(s.get(0, 1), 0.9);
        assert_eq!(s.get(2, 0), 0.0);
        assert_eq!(s.get(2, 1), 0.0);
        for i in 0..3 {
            assert_eq!(s.get(i, i), 1.0);
        }
        assert_eq!(s.logical_nnz(), 5);
    }

    #[test]
    fn sparsify_fraction_one_keeps_everything() {
        let k = SymmetricMatrix::from_fn_lower(4, |i, j| 1.0 + (i + j) as f64);
        let s = sparsify(&k, 1.0).unwrap();
        assert_eq!(s.logical_nnz(), 16);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.get(i, j), k.get(i, j));
            }
        }
    }

    #[test]
    fn sparsify_nnz_monotone_in_fraction() {
        let raw = DenseMatrix::from_fn(30, 2, |i, j| ((i * 7 + j * 3) % 13) as f64 / 13.0);
        let d = Dataset::from_values(raw, Normalization::None).unwrap();
        let k = rbf_kernel(&d, 0.3).unwrap();
        let mut last = 0;
        for f in [0.05, 0.1, 0.3, 0.6, 1.0] {
            let s = sparsify(&k, f).unwrap();
            assert!(s.logical_nnz() >= last, "fraction {f}");
            last = s.logical_nnz();
        }
    }

    #[test]
    fn sparsify_hits_target_fraction() {
        let raw = DenseMatrix::from_fn(60, 3, |i, j| {
            (((i * 31 + j * 17) % 97) as f64 / 97.0).powi(2)
        });
        let d = Dataset::from_values(raw, Normalization::Minmax).unwrap();
        let k = rbf_kernel(&d, 0.2).unwrap();
        for target in [0.05, 0.2, 0.5] {
            let s = sparsify(&k, target).unwrap();
            let got = s.logical_nnz() as f64 / (60.0 * 60.0);
            assert!(
                (got - target).abs() <= 0.005,
                "target {target}, achieved {got}"
            );
        }
    }

    #[test]
    fn rbf_kernel_is_positive_semidefinite() {
        // Pseudo-random desk-scale points.
        let raw = DenseMatrix::from_fn(40, 3, |i, j| {
            let h = (i as u64)
                .wrapping_mul(0x9E3779B97F4A7C15)
                .wrapping_add(j as u64)
                .wrapping_mul(6364136223846793005);
            (h >> 11) as f64 / (1u64 << 53) as f64
        });
        let d = Dataset::from_values(raw, Normalization::Minmax).unwrap();
        let k = rbf_kernel(&d, 0.2).unwrap();
        let eigs = crate::linalg::symmetric_eigenvalues(&k).unwrap();
        let max = eigs[0].abs();
        let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8 * max, "smallest eigenvalue {min} vs max {max}");
    }

    #[test]
    fn kernel_config_validation() {
        assert!(KernelConfig::new(0.2).validate().is_ok());
        assert!(KernelConfig::new(0.0).validate().is_err());
        let mut c = KernelConfig::new(1.0);
        c.sparsify_fraction = Some(1.5);
        assert!(c.validate().is_err());
    }
}
