//! Standard and modified Nystrom approximations.
//!
//! Both models share the sampled factor C and differ only in the c x c
//! intersection matrix: `W^+` for the standard model, `C^+ A (C^+)^T` for the
//! modified one. The modified intersection has a naive O(m c^2) + A-multiply
//! path and a fast path that replaces the m x c pseudoinverse with c x c
//! inverses; the two agree whenever W is nonsingular, and the engine falls
//! back to the naive path (recording the fallback) when it is not.

use crate::columns::ColumnSet;
use crate::dense::{block_cols, DenseMatrix};
use crate::error::{Error, Result};
use crate::linalg::{invert_small, pinv, svd, symmetric_eigenvalues, NormKind};
use crate::samplers::{sample_columns, RngSeed, SamplerConfig};
use crate::scalar::Scalar;
use crate::spsd::SymmetricOps;
use crate::symmetric::SymmetricMatrix;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

/// How the intersection matrix is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionMethod {
    Standard,
    ModifiedNaive,
    ModifiedFast,
}

impl std::str::FromStr for IntersectionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "modified_naive" => Ok(Self::ModifiedNaive),
            "modified_fast" | "modified" => Ok(Self::ModifiedFast),
            other => Err(Error::parameter(format!("unknown intersection method '{other}'"))),
        }
    }
}

impl std::fmt::Display for IntersectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Standard => "standard",
            Self::ModifiedNaive => "modified_naive",
            Self::ModifiedFast => "modified_fast",
        };
        f.write_str(s)
    }
}

/// A low-rank approximation `A ~ C U C^T`, held in factored form; the m x m
/// product is only materialized on explicit request.
#[derive(Debug, Clone)]
pub struct NystromApproximation<T: Scalar> {
    columns: ColumnSet,
    c: DenseMatrix<T>,
    u: SymmetricMatrix<T>,
    method: IntersectionMethod,
    fallback: bool,
}

impl<T: Scalar> NystromApproximation<T> {
    pub fn columns(&self) -> &ColumnSet {
        &self.columns
    }

    pub fn c(&self) -> &DenseMatrix<T> {
        &self.c
    }

    pub fn u(&self) -> &SymmetricMatrix<T> {
        &self.u
    }

    /// The method that actually produced U (after any fallback).
    pub fn method(&self) -> IntersectionMethod {
        self.method
    }

    /// True when a singular W downgraded the fast path to the naive one.
    pub fn fallback(&self) -> bool {
        self.fallback
    }

    /// Explicitly materializes `C U C^T` as a dense m x m matrix.
    pub fn materialize(&self) -> Result<DenseMatrix<T>> {
        let uct = self.u.mul_dense(&self.c.transpose())?;
        self.c.matmul(&uct)
    }
}

/// The permuted view of Eq-style partitioning: W on the selected indices,
/// A21 the complement-by-selected block, A22 reachable through the parent.
pub struct PartitionView<'a, T: Scalar, M: SymmetricOps<T> + ?Sized> {
    matrix: &'a M,
    selected: Vec<usize>,
    complement: Vec<usize>,
    w: SymmetricMatrix<T>,
    a21: DenseMatrix<T>,
}

impl<'a, T: Scalar, M: SymmetricOps<T> + ?Sized> PartitionView<'a, T, M> {
    pub fn w(&self) -> &SymmetricMatrix<T> {
        &self.w
    }

    pub fn a21(&self) -> &DenseMatrix<T> {
        &self.a21
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Entry of the (never densified) A22 block.
    pub fn a22_get(&self, i: usize, j: usize) -> T {
        self.matrix.get(self.complement[i], self.complement[j])
    }

    /// Rebuilds the matrix in its original index order from the three blocks,
    /// undoing the permutation.
    pub fn reconstruct_original(&self) -> SymmetricMatrix<T> {
        let m = self.matrix.order();
        let mut pos = vec![(false, 0usize); m];
        for (t, &j) in self.selected.iter().enumerate() {
            pos[j] = (true, t);
        }
        for (t, &j) in self.complement.iter().enumerate() {
            pos[j] = (false, t);
        }
        SymmetricMatrix::from_fn_lower(m, |i, j| {
            let (i_sel, ip) = pos[i];
            let (j_sel, jp) = pos[j];
            match (i_sel, j_sel) {
                (true, true) => self.w.get(ip, jp),
                (false, true) => self.a21.get(ip, jp),
                (true, false) => self.a21.get(jp, ip),
                (false, false) => self.a22_get(ip, jp),
            }
        })
    }
}

/// Splits A against the selected columns: W, A21 and an A22 handle.
pub fn partition<'a, T: Scalar, M: SymmetricOps<T> + ?Sized>(
    a: &'a M,
    columns: &ColumnSet,
) -> Result<PartitionView<'a, T, M>> {
    columns.validate_for_order(a.order())?;
    let selected = columns.indices().to_vec();
    let mut is_selected = vec![false; a.order()];
    for &j in &selected {
        is_selected[j] = true;
    }
    let complement: Vec<usize> = (0..a.order()).filter(|&j| !is_selected[j]).collect();
    let w = a.principal_submatrix(&selected)?;
    let c_mat = a.columns(&selected)?;
    let a21 = c_mat.select_rows(&complement)?;
    Ok(PartitionView { matrix: a, selected, complement, w, a21 })
}

/// Standard intersection matrix `U = W^+`.
pub fn standard_intersection<T: Scalar, M: SymmetricOps<T> + ?Sized>(
    part: &PartitionView<'_, T, M>,
) -> Result<SymmetricMatrix<T>> {
    standard_intersection_from_w(part.w())
}

pub(crate) fn standard_intersection_from_w<T: Scalar>(
    w: &SymmetricMatrix<T>,
) -> Result<SymmetricMatrix<T>> {
    let p = pinv(&w.to_dense(), None)?;
    SymmetricMatrix::from_dense_lower(&p.symmetrized()?)
}

/// Modified intersection matrix by definition: `U = C^+ A (C^+)^T`.
/// The product against A runs through the operand's blockwise multiply.
pub fn modified_intersection_naive<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    c_mat: &DenseMatrix<T>,
) -> Result<SymmetricMatrix<T>> {
    if c_mat.rows() != a.order() {
        return Err(Error::dimension(format!(
            "C has {} rows but A has order {}",
            c_mat.rows(),
            a.order()
        )));
    }
    let cdag = pinv(c_mat, None)?; // c x m
    let g = a.mul_dense(&cdag.transpose())?; // A (C^+)^T, m x c
    let u = cdag.matmul(&g)?;
    SymmetricMatrix::from_dense_lower(&u.symmetrized()?)
}

/// Relative conditioning floor for the fast path: below this the double
/// W^{-1} in T3 amplifies roundoff past usefulness.
fn fast_path_conditioning_floor<T: Scalar>() -> T {
    T::from_f64_c(1e-10).max(T::eps() * T::from_f64_c(1e3))
}

/// Fast modified intersection for nonsingular W:
/// `U = T1 (W + T2 + T2^T + T3) T1^T` with
/// `T0 = A21^T A21`, `T2 = T0 W^{-1}`, `T1 = W^{-1} (I + W^{-1} T2)^{-1}`,
/// `T3 = W^{-1} (A21^T A22 A21) W^{-1}`.
///
/// The complement blocks are reached by zeroing the selected rows of C, so
/// `A21^T A21 = Z^T Z` and `A21^T A22 A21 = Z^T (A Z)`; for sparse A the
/// product A*Z is the only pass over the matrix and no m x m dense product is
/// ever formed.
pub fn modified_intersection_fast<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    columns: &[usize],
) -> Result<SymmetricMatrix<T>> {
    let c = columns.len();
    if c == 0 {
        return Err(Error::parameter("at least one column is required"));
    }
    let w = a.principal_submatrix(columns)?;
    let wd = w.to_dense();

    // Rank (and conditioning) test of W before anything else.
    let f = svd(&wd, None)?;
    let sigma = f.singular_values();
    let cond_ok = f.rank() == c
        && sigma[c - 1] > fast_path_conditioning_floor::<T>() * sigma[0];
    if !cond_ok {
        return Err(Error::Singular(format!(
            "W fails the fast-path rank test (numeric rank {}, order {c})",
            f.rank()
        )));
    }
    let inv_sigma: Vec<T> = sigma.iter().map(|&s| T::one() / s).collect();
    let winv = f.right().scale_columns(&inv_sigma).matmul(&f.left().transpose())?;

    let c_mat = a.columns(columns)?;
    let mut z = c_mat;
    for &j in columns {
        for t in 0..z.cols() {
            z.set(j, t, T::zero());
        }
    }

    let t0 = z.gram(); // A21^T A21
    let az = a.mul_dense(&z)?;
    let mid3 = z.transpose_matmul(&az)?; // A21^T A22 A21

    let t2 = t0.matmul(&winv)?;
    let mut inner = winv.matmul(&t2)?; // W^{-1} T2 = W^{-1} T0 W^{-1}
    for i in 0..c {
        let v = inner.get(i, i);
        inner.set(i, i, v + T::one());
    }
    let t1 = winv.matmul(&invert_small(&inner)?)?;
    let t3 = winv.matmul(&mid3)?.matmul(&winv)?;

    let core = wd
        .add(&t2)?
        .add(&t2.transpose())?
        .add(&t3)?;
    let u = t1.matmul(&core)?.matmul(&t1.transpose())?;
    SymmetricMatrix::from_dense_lower(&u.symmetrized()?)
}

/// Builds the approximation for the requested method. A singular W downgrades
/// `ModifiedFast` to the naive path; the returned approximation then carries
/// `method = ModifiedNaive` and `fallback = true`.
pub fn approximate<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    columns: &ColumnSet,
    method: IntersectionMethod,
) -> Result<NystromApproximation<T>> {
    columns.validate_for_order(a.order())?;
    let c_mat = a.columns(columns.indices())?;
    let (u, used, fallback) = match method {
        IntersectionMethod::Standard => {
            let w = a.principal_submatrix(columns.indices())?;
            (standard_intersection_from_w(&w)?, IntersectionMethod::Standard, false)
        }
        IntersectionMethod::ModifiedNaive => (
            modified_intersection_naive(a, &c_mat)?,
            IntersectionMethod::ModifiedNaive,
            false,
        ),
        IntersectionMethod::ModifiedFast => match modified_intersection_fast(a, columns.indices())
        {
            Ok(u) => (u, IntersectionMethod::ModifiedFast, false),
            Err(Error::Singular(reason)) => {
                log::debug!("fast intersection fell back to naive: {reason}");
                (
                    modified_intersection_naive(a, &c_mat)?,
                    IntersectionMethod::ModifiedNaive,
                    true,
                )
            }
            Err(e) => return Err(e),
        },
    };
    Ok(NystromApproximation { columns: columns.clone(), c: c_mat, u, method: used, fallback })
}

/// `|| A - C U C^T ||` without materializing the approximation beyond one
/// column block at a time (Frobenius), or via power iteration on the implicit
/// residual operator (spectral, accurate to ~1e-10 relative).
pub fn residual_norm<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    approx: &NystromApproximation<T>,
    kind: NormKind,
) -> Result<T> {
    match kind {
        NormKind::Frobenius => residual_frobenius(a, approx),
        NormKind::Spectral => residual_spectral(a, approx),
    }
}

fn residual_frobenius<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    approx: &NystromApproximation<T>,
) -> Result<T> {
    let m = a.order();
    let block = block_cols().max(1);
    let starts: Vec<usize> = (0..m).step_by(block).collect();
    use rayon::prelude::*;
    let partials: Result<Vec<T>> = starts
        .par_iter()
        .map(|&j0| {
            let jn = (j0 + block).min(m);
            let idx: Vec<usize> = (j0..jn).collect();
            // (C U C^T)[:, J] = C * (U * (C[J, :])^T)
            let cj_t = approx.c.select_rows(&idx)?.transpose();
            let v = approx.u.mul_dense(&cj_t)?;
            let p = approx.c.matmul(&v)?;
            let mut acc = T::zero();
            let mut col = vec![T::zero(); m];
            for (local, j) in idx.iter().enumerate() {
                a.write_column(*j, &mut col);
                for (i, &ci) in col.iter().enumerate() {
                    let d = ci - p.get(i, local);
                    acc += d * d;
                }
            }
            Ok(acc)
        })
        .collect();
    let total = partials?.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(total.sqrt())
}

fn residual_spectral<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    approx: &NystromApproximation<T>,
) -> Result<T> {
    let m = a.order();
    // Deterministic pseudo-random start vector.
    let mut x = DenseMatrix::zeros(m, 1);
    let mut state = 0x9E3779B97F4A7C15u64;
    for i in 0..m {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        x.set(i, 0, T::from_f64_c(2.0 * u - 1.0));
    }
    let apply = |x: &DenseMatrix<T>| -> Result<DenseMatrix<T>> {
        let ax = a.mul_dense(x)?;
        let ctx = approx.c.transpose_matmul(x)?;
        let uctx = approx.u.mul_dense(&ctx)?;
        let cux = approx.c.matmul(&uctx)?;
        ax.sub(&cux)
    };
    let mut estimate = T::zero();
    for _ in 0..300 {
        let norm = x.frobenius_norm();
        if norm == T::zero() {
            return Ok(T::zero());
        }
        let xn = x.scale(T::one() / norm);
        let y = apply(&xn)?;
        let new_estimate = y.frobenius_norm();
        let done = (new_estimate - estimate).abs()
            <= T::from_f64_c(1e-12) * new_estimate.max(T::one());
        estimate = new_estimate;
        x = y;
        if done {
            break;
        }
    }
    Ok(estimate)
}

/// Error ratio `||A - C U C^T||_xi / ||A - A_k||_xi`, flagged degenerate when
/// the reference error vanishes relative to `||A||` (A effectively rank <= k);
/// the flagged value is then the absolute residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRatio<T> {
    pub value: T,
    pub degenerate: bool,
}

/// Reference norms for the ratio denominator: `||A - A_k||` and `||A||`.
pub fn reference_tail<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    k: usize,
    kind: NormKind,
) -> Result<(T, T)> {
    let dense = a.to_dense();
    let sym = SymmetricMatrix::from_dense_lower(&dense)?;
    let eigs = symmetric_eigenvalues(&sym)?;
    match kind {
        NormKind::Frobenius => {
            let tail = eigs.iter().skip(k).fold(T::zero(), |acc, &l| acc + l * l).sqrt();
            let scale = eigs.iter().fold(T::zero(), |acc, &l| acc + l * l).sqrt();
            Ok((tail, scale))
        }
        NormKind::Spectral => {
            let tail = eigs.get(k).map_or_else(T::zero, |l| l.abs());
            let scale = eigs.first().map_or_else(T::zero, |l| l.abs());
            Ok((tail, scale))
        }
    }
}

/// Assembles the ratio from a residual and precomputed reference norms.
pub fn error_ratio_from_parts<T: Scalar>(
    residual: T,
    tail: T,
    scale: T,
    order: usize,
) -> ErrorRatio<T> {
    let floor = T::eps() * T::from_usize(order).unwrap() * scale;
    if tail > floor {
        ErrorRatio { value: residual / tail, degenerate: false }
    } else {
        ErrorRatio { value: residual, degenerate: true }
    }
}

pub fn error_ratio<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    approx: &NystromApproximation<T>,
    k: usize,
    kind: NormKind,
) -> Result<ErrorRatio<T>> {
    if k >= a.order() {
        return Err(Error::parameter(format!(
            "target rank {k} must be smaller than the order {}",
            a.order()
        )));
    }
    let residual = residual_norm(a, approx, kind)?;
    let (tail, scale) = reference_tail(a, k, kind)?;
    Ok(error_ratio_from_parts(residual, tail, scale, a.order()))
}

/// One repeat of a best-of-t run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub residual_fro: f64,
    pub sampling_seconds: f64,
    pub intersection_seconds: f64,
    pub fallback: bool,
    pub exact_early_exit: bool,
    pub clamped: bool,
    pub padded: bool,
    pub columns: usize,
}

pub struct BestOfT<T: Scalar> {
    pub best: NystromApproximation<T>,
    pub best_trial: usize,
    pub trials: Vec<TrialOutcome>,
}

/// Runs `t` independent seeded draws of the configured sampler, builds the
/// approximation for each, and keeps the one minimizing the full Frobenius
/// residual. Trials run concurrently with seeds `base_seed + trial`.
pub fn best_of_t<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    sampler: &SamplerConfig,
    method: IntersectionMethod,
    t: usize,
    base_seed: RngSeed,
    leverage_scores: Option<&[T]>,
) -> Result<BestOfT<T>> {
    if t == 0 {
        return Err(Error::parameter("best-of-t needs at least one trial"));
    }
    use rayon::prelude::*;
    let runs: Result<Vec<(TrialOutcome, NystromApproximation<T>)>> = (0..t)
        .into_par_iter()
        .map(|trial| {
            let seed = base_seed.derive(trial);
            let t_sample = Instant::now();
            let drawn = sample_columns(a, sampler, seed, leverage_scores)?;
            let sampling_seconds = t_sample.elapsed().as_secs_f64();
            let t_inter = Instant::now();
            let approx = approximate(a, &drawn.columns, method)?;
            let intersection_seconds = t_inter.elapsed().as_secs_f64();
            let residual = residual_frobenius(a, &approx)?;
            Ok((
                TrialOutcome {
                    trial,
                    seed: seed.0,
                    residual_fro: residual.as_f64(),
                    sampling_seconds,
                    intersection_seconds,
                    fallback: approx.fallback(),
                    exact_early_exit: drawn.exact_early_exit,
                    clamped: drawn.clamped,
                    padded: drawn.padded,
                    columns: drawn.columns.len(),
                },
                approx,
            ))
        })
        .collect();
    let runs = runs?;
    let best_trial = runs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.0.residual_fro.partial_cmp(&b.0.residual_fro).expect("finite residuals")
        })
        .map(|(i, _)| i)
        .expect("at least one trial");
    let mut trials = Vec::with_capacity(t);
    let mut best = None;
    for (i, (outcome, approx)) in runs.into_iter().enumerate() {
        if i == best_trial {
            best = Some(approx);
        }
        trials.push(outcome);
    }
    Ok(BestOfT { best: best.expect("best trial exists"), best_trial, trials })
}

const APPROX_MAGIC: &[u8; 4] = b"NYSA";

/// Serialized approximation: header (method, fallback, seed) + column indices
/// with their stage sizes + U in the dense binary layout.
pub fn write_approximation<T: Scalar>(
    path: impl AsRef<Path>,
    approx: &NystromApproximation<T>,
    seed: u64,
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(APPROX_MAGIC)?;
    let method_tag: u8 = match approx.method {
        IntersectionMethod::Standard => 0,
        IntersectionMethod::ModifiedNaive => 1,
        IntersectionMethod::ModifiedFast => 2,
    };
    w.write_all(&[method_tag, approx.fallback as u8])?;
    w.write_all(&seed.to_le_bytes())?;
    let c = approx.columns.len();
    w.write_all(&(approx.c.rows() as u64).to_le_bytes())?;
    w.write_all(&(c as u64).to_le_bytes())?;
    for &j in approx.columns.indices() {
        w.write_all(&(j as u64).to_le_bytes())?;
    }
    let stages = approx.columns.stage_sizes().unwrap_or(&[]);
    w.write_all(&(stages.len() as u64).to_le_bytes())?;
    for &s in stages {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    let ud = approx.u.to_dense();
    for j in 0..c {
        for &v in ud.column(j) {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header + payload read back from [`write_approximation`]. Rebuilding the
/// full approximation needs the original matrix to re-extract C.
#[derive(Debug, Clone)]
pub struct ApproximationRecord<T: Scalar> {
    pub columns: ColumnSet,
    pub u: SymmetricMatrix<T>,
    pub method: IntersectionMethod,
    pub fallback: bool,
    pub seed: u64,
    pub order: usize,
}

impl<T: Scalar> ApproximationRecord<T> {
    pub fn rebuild(&self, a: &(impl SymmetricOps<T> + ?Sized)) -> Result<NystromApproximation<T>> {
        if a.order() != self.order {
            return Err(Error::dimension(format!(
                "record was built for order {}, matrix has order {}",
                self.order,
                a.order()
            )));
        }
        self.columns.validate_for_order(a.order())?;
        Ok(NystromApproximation {
            columns: self.columns.clone(),
            c: a.columns(self.columns.indices())?,
            u: self.u.clone(),
            method: self.method,
            fallback: self.fallback,
        })
    }
}

pub fn read_approximation<T: Scalar>(path: impl AsRef<Path>) -> Result<ApproximationRecord<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != APPROX_MAGIC {
        return Err(Error::data(None, "bad magic: not a Nystrom approximation file"));
    }
    let mut two = [0u8; 2];
    r.read_exact(&mut two)?;
    let method = match two[0] {
        0 => IntersectionMethod::Standard,
        1 => IntersectionMethod::ModifiedNaive,
        2 => IntersectionMethod::ModifiedFast,
        other => return Err(Error::data(None, format!("unknown method tag {other}"))),
    };
    let fallback = two[1] != 0;
    let seed = read_u64(&mut r)?;
    let order = read_u64(&mut r)? as usize;
    let c = read_u64(&mut r)? as usize;
    let mut indices = Vec::with_capacity(c);
    for _ in 0..c {
        indices.push(read_u64(&mut r)? as usize);
    }
    let n_stages = read_u64(&mut r)? as usize;
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        stages.push(read_u64(&mut r)? as usize);
    }
    let columns = if stages.is_empty() {
        ColumnSet::new(indices)?
    } else {
        ColumnSet::with_stages(indices, stages)?
    };
    let mut ud = DenseMatrix::zeros(c, c);
    let mut buf = [0u8; 8];
    for j in 0..c {
        for i in 0..c {
            r.read_exact(&mut buf)?;
            ud.set(i, j, T::from_f64_c(f64::from_le_bytes(buf)));
        }
    }
    Ok(ApproximationRecord {
        columns,
        u: SymmetricMatrix::from_dense_lower(&ud)?,
        method,
        fallback,
        seed,
        order,
    })
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
