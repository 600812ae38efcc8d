//! Column-selection strategies: uniform, adaptive, leverage-score, the
//! uniform+adaptive-squared scheme, and the adaptive-full baseline.
//!
//! Every sampler is pure given (inputs, seed): the same seed always yields the
//! same [`ColumnSet`]. Independent repeats derive their seeds as
//! `base_seed + trial_index`.
//!
//! The near-optimal selection family built on dual-set sparsification is
//! deliberately not implemented; uniform+adaptive-squared trades a slightly
//! larger column budget for a far simpler procedure with comparable accuracy.

use crate::columns::ColumnSet;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linalg::orthonormal_basis;
use crate::scalar::Scalar;
use crate::spsd::SymmetricOps;
use crate::symmetric::SymmetricMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed for the deterministic sampling RNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed of the i-th independent repeat.
    pub fn derive(self, trial: usize) -> RngSeed {
        RngSeed(self.0.wrapping_add(trial as u64))
    }
}

/// Column-selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    Uniform,
    Adaptive,
    Leverage,
    UniformAdaptive2,
    AdaptiveFull,
}

impl std::str::FromStr for SamplerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "adaptive" => Ok(Self::Adaptive),
            "leverage" => Ok(Self::Leverage),
            "uniform_adaptive2" | "ua2" => Ok(Self::UniformAdaptive2),
            "adaptive_full" => Ok(Self::AdaptiveFull),
            other => Err(Error::parameter(format!("unknown sampler '{other}'"))),
        }
    }
}

impl std::fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Uniform => "uniform",
            Self::Adaptive => "adaptive",
            Self::Leverage => "leverage",
            Self::UniformAdaptive2 => "uniform_adaptive2",
            Self::AdaptiveFull => "adaptive_full",
        };
        f.write_str(s)
    }
}

/// Caller-supplied total budget with per-stage split fractions, used when a
/// sweep fixes c directly instead of deriving it from (k, epsilon, mu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOverride {
    pub total: usize,
    /// Stage fractions; must sum to 1. Default mirrors the c3-dominant
    /// asymptotics of the theorem budgets.
    pub splits: [f64; 3],
}

impl BudgetOverride {
    pub fn new(total: usize) -> Self {
        Self { total, splits: DEFAULT_SPLITS }
    }
}

pub const DEFAULT_SPLITS: [f64; 3] = [0.25, 0.25, 0.5];

/// Sampler configuration, serializable as a flat key-value (TOML) file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    /// Target rank of the reference approximation.
    pub k: usize,
    /// Error parameter in (0, 1].
    pub epsilon: f64,
    /// Coherence surrogate; a user-set constant, not a computed coherence.
    pub mu: f64,
    /// Optional direct budget; absent means theorem budgets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetOverride>,
    /// Uniform-stage analysis parameter, delta in (0, 0.5).
    pub delta: f64,
    /// Uniform-stage analysis parameter, theta in (0, 1).
    pub theta: f64,
}

impl SamplerConfig {
    pub fn new(method: SamplerMethod, k: usize) -> Self {
        Self { method, k, epsilon: 0.5, mu: 1.0, budget: None, delta: 0.25, theta: 0.5 }
    }

    pub fn with_budget(mut self, total: usize) -> Self {
        self.budget = Some(BudgetOverride::new(total));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::parameter("target rank k must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::parameter("epsilon must lie in (0, 1]"));
        }
        if !(self.mu > 0.0) {
            return Err(Error::parameter("mu must be positive"));
        }
        if self.mu < 1.0 {
            // Coherence is >= 1 by definition; smaller surrogates are allowed
            // as a tuning knob but worth flagging.
            log::warn!("mu = {} is below 1, the minimum of a true coherence", self.mu);
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::parameter("delta must lie in (0, 0.5)"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::parameter("theta must lie in (0, 1)"));
        }
        if let Some(b) = &self.budget {
            if b.total == 0 {
                return Err(Error::parameter("budget total must be at least 1"));
            }
            let sum: f64 = b.splits.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::parameter(format!("split fractions sum to {sum}, not 1")));
            }
            if b.splits.iter().any(|&f| f < 0.0) {
                return Err(Error::parameter("split fractions must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// A sampler's output: the chosen columns plus outcome flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub columns: ColumnSet,
    /// The residual hit zero before the budget was spent; the matrix is
    /// reproduced exactly by the columns already chosen.
    pub exact_early_exit: bool,
    /// One or more stage budgets were clamped to the available columns.
    pub clamped: bool,
    /// Leverage sampling ran out of positive scores and padded uniformly.
    pub padded: bool,
}

impl SampleResult {
    fn plain(columns: ColumnSet) -> Self {
        Self { columns, exact_early_exit: false, clamped: false, padded: false }
    }
}

/// Draws `c` distinct indices uniformly over all (m choose c) subsets.
pub fn uniform_sample(m: usize, c: usize, rng: &mut ChaCha8Rng) -> Result<ColumnSet> {
    if c == 0 || c > m {
        return Err(Error::parameter(format!("cannot draw {c} distinct columns out of {m}")));
    }
    // Partial Fisher-Yates: the first c slots are a uniform subset.
    let mut pool: Vec<usize> = (0..m).collect();
    for t in 0..c {
        let pick = rng.gen_range(t..m);
        pool.swap(t, pick);
    }
    let mut indices = pool[..c].to_vec();
    indices.sort_unstable();
    ColumnSet::new(indices)
}

/// Sampling probabilities of the adaptive scheme: `p_j = ||b_j||^2 / ||B||_F^2`.
pub fn adaptive_probabilities<T: Scalar>(residual: &DenseMatrix<T>) -> Result<Vec<T>> {
    probabilities_from_sq_norms(residual.column_sq_norms())
}

pub(crate) fn probabilities_from_sq_norms<T: Scalar>(sq_norms: Vec<T>) -> Result<Vec<T>> {
    let total = sq_norms.iter().fold(T::zero(), |acc, &v| acc + v);
    if total <= T::zero() {
        return Err(Error::ExactResidual);
    }
    Ok(sq_norms.into_iter().map(|v| v / total).collect())
}

/// Squared residual column norms `||a_j - Q Q^T a_j||^2` computed through the
/// Pythagorean split, with one operand product A*Q instead of an explicit
/// residual matrix. Norms that fall below the relative floor are snapped to
/// zero so spanned columns can never be drawn again.
fn residual_column_sq_norms<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    q: &DenseMatrix<T>,
) -> Result<Vec<T>> {
    let col_sq = a.column_sq_norms();
    if q.cols() == 0 {
        return Ok(col_sq);
    }
    let aq = a.mul_dense(q)?;
    let mut out = col_sq.clone();
    for t in 0..aq.cols() {
        let col = aq.column(t);
        for (j, &v) in col.iter().enumerate() {
            out[j] -= v * v;
        }
    }
    // Cancellation noise in col_sq - proj_sq is of order eps * col_sq, so the
    // zero floor must sit above that; 100 eps relative (in squared space)
    // keeps spanned columns at probability zero without touching residuals a
    // sampler could meaningfully act on.
    let floor_sq = T::eps() * T::from_f64_c(1e2);
    for (j, v) in out.iter_mut().enumerate() {
        if *v < col_sq[j] * floor_sq {
            *v = T::zero();
        }
    }
    Ok(out)
}

/// Draws `count` distinct indices, each draw proportional to `weights` among
/// the indices not yet taken. Rejection of duplicates against an i.i.d.
/// proposal is equivalent in law to this renormalized sequential draw.
fn weighted_draw_without_replacement(
    weights: &mut [f64],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let available = weights.iter().filter(|&&w| w > 0.0).count();
    if available < count {
        return Err(Error::Exhausted { available, requested: count });
    }
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0);
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = None;
        for (j, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            u -= w;
            if u <= 0.0 {
                chosen = Some(j);
                break;
            }
        }
        // Rounding can leave u marginally positive after the last positive
        // weight; fall back to it.
        let j = chosen.unwrap_or_else(|| {
            weights
                .iter()
                .enumerate()
                .rev()
                .find(|(_, &w)| w > 0.0)
                .map(|(j, _)| j)
                .expect("positive weight exists")
        });
        picked.push(j);
        weights[j] = 0.0;
    }
    Ok(picked)
}

/// One adaptive round: draws `c_new` fresh columns with probability
/// proportional to the squared residual column norms of `A - P_C A`, where C
/// holds the existing columns. Returns the union set with stage bookkeeping.
pub fn adaptive_sample<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    existing: Option<&ColumnSet>,
    c_new: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ColumnSet> {
    if c_new == 0 {
        return Err(Error::parameter("cannot draw zero columns"));
    }
    let m = a.order();
    let res_sq = match existing {
        None => a.column_sq_norms(),
        Some(set) => {
            set.validate_for_order(m)?;
            let c = a.columns(set.indices())?;
            let q = orthonormal_basis(&c)?;
            residual_column_sq_norms(a, &q)?
        }
    };

    // res_sq sums to the squared Frobenius norm of the residual matrix;
    // spanned columns were already snapped to exactly zero above, so a fully
    // reproduced matrix lands at total == 0 and anything at roundoff scale
    // counts as exact too.
    let total: f64 = res_sq.iter().map(|v| v.as_f64()).sum();
    let fro_sq = a.frobenius_norm().as_f64().powi(2);
    if total <= 100.0 * f64::EPSILON * fro_sq {
        return Err(Error::ExactResidual);
    }

    let mut weights: Vec<f64> = res_sq.iter().map(|v| v.as_f64()).collect();
    if let Some(set) = existing {
        for &j in set.indices() {
            weights[j] = 0.0;
        }
    }
    // Duplicates (against the existing set or within the draw) are rejected
    // and redrawn, collapsed here into renormalized sequential draws; the
    // final set is therefore without replacement rather than i.i.d.
    log::debug!(
        "adaptive round: drawing {c_new} columns without replacement from {} candidates",
        weights.iter().filter(|&&w| w > 0.0).count()
    );
    let fresh = weighted_draw_without_replacement(&mut weights, c_new, rng)?;

    match existing {
        None => ColumnSet::with_stages(fresh, vec![c_new]),
        Some(set) => {
            let mut indices = set.indices().to_vec();
            indices.extend_from_slice(&fresh);
            let mut stages = set.stage_sizes().map_or_else(
                || vec![set.len()],
                |s| s.to_vec(),
            );
            stages.push(c_new);
            ColumnSet::with_stages(indices, stages)
        }
    }
}

/// Leverage-score sampling against a symmetric matrix: computes the rank-k
/// leverage scores and defers to [`leverage_sample_from_scores`]. Sweeps that
/// repeat draws should compute the scores once instead.
pub fn leverage_sample<T: Scalar>(
    a: &SymmetricMatrix<T>,
    k: usize,
    c: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleResult> {
    let scores = crate::linalg::leverage_scores_symmetric(a, k)?;
    leverage_sample_from_scores(&scores, c, rng)
}

/// Leverage-score sampling: `c` distinct indices drawn sequentially without
/// replacement, each draw proportional to the scores among the remaining
/// indices. When fewer than `c` scores are positive the remainder is padded
/// with uniform draws and the result is flagged.
pub fn leverage_sample_from_scores<T: Scalar>(
    scores: &[T],
    c: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleResult> {
    let m = scores.len();
    if c == 0 || c > m {
        return Err(Error::parameter(format!("cannot draw {c} distinct columns out of {m}")));
    }
    let mut weights: Vec<f64> = scores.iter().map(|s| s.as_f64().max(0.0)).collect();
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    let head = positive.min(c);
    let mut indices = weighted_draw_without_replacement(&mut weights, head, rng)?;
    let mut padded = false;
    if head < c {
        padded = true;
        log::warn!(
            "leverage sampling found only {head} positive scores, padding {} uniformly",
            c - head
        );
        let mut uniform_w: Vec<f64> =
            (0..m).map(|j| if indices.contains(&j) { 0.0 } else { 1.0 }).collect();
        let pad = weighted_draw_without_replacement(&mut uniform_w, c - head, rng)?;
        indices.extend_from_slice(&pad);
    }
    Ok(SampleResult {
        columns: ColumnSet::new(indices)?,
        exact_early_exit: false,
        clamped: false,
        padded,
    })
}

/// Ceiling that forgives sub-1e-2 float noise above an integer; the stage
/// constants are themselves rounded to one decimal, so this keeps budgets at
/// the intended integer when the formula lands epsilon above it.
fn budget_ceil(x: f64) -> usize {
    (x - 1e-2).ceil().max(0.0) as usize
}

/// Stage budgets of the uniform+adaptive-squared scheme:
/// `c1 = ceil(8.7 mu k ln(sqrt(5) k))`, `c2 = ceil(10 k / eps)`,
/// `c3 = ceil(2 (c1 + c2) / eps)` (natural logarithm).
pub fn theorem_budget(k: usize, epsilon: f64, mu: f64) -> Result<(usize, usize, usize)> {
    if k == 0 {
        return Err(Error::parameter("target rank k must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::parameter("epsilon must lie in (0, 1]"));
    }
    if !(mu > 0.0) {
        return Err(Error::parameter("mu must be positive"));
    }
    let c1 = budget_ceil(8.7 * mu * k as f64 * (5.0_f64.sqrt() * k as f64).ln());
    let c2 = budget_ceil(10.0 * k as f64 / epsilon);
    let c3 = budget_ceil(2.0 / epsilon * (c1 + c2) as f64);
    Ok((c1, c2, c3))
}

/// Stage budgets in direct-budget mode: the first two stages take
/// `ceil(f_i * total)`, the last stage the remainder. The uniform stage
/// always gets at least one column so the residual is defined.
fn override_budget(b: &BudgetOverride) -> (usize, usize, usize) {
    let total = b.total;
    let c1 = ((b.splits[0] * total as f64).ceil() as usize).clamp(1, total);
    let c2 = ((b.splits[1] * total as f64).ceil() as usize).min(total - c1);
    let c3 = total - c1 - c2;
    (c1, c2, c3)
}

/// The uniform+adaptive-squared column sampler: one uniform stage followed by
/// two adaptive stages against the running residual.
pub fn uniform_adaptive2<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    config: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SampleResult> {
    config.validate()?;
    let budgets = match &config.budget {
        Some(b) => override_budget(b),
        None => theorem_budget(config.k, config.epsilon, config.mu)?,
    };
    staged_sample(a, [budgets.0, budgets.1, budgets.2], rng)
}

/// The adaptive-full baseline: three equal stages c/3 (remainder to the last),
/// one uniform and two adaptive.
pub fn adaptive_full<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    c: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleResult> {
    if c < 3 {
        return Err(Error::parameter("adaptive_full needs a budget of at least 3"));
    }
    let third = c / 3;
    staged_sample(a, [third, third, c - 2 * third], rng)
}

/// Shared three-stage skeleton: uniform stage then two adaptive rounds.
/// Stage budgets are clamped to the remaining columns (with a warning), and a
/// zero residual short-circuits with the exactness flag set.
fn staged_sample<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    requested: [usize; 3],
    rng: &mut ChaCha8Rng,
) -> Result<SampleResult> {
    fn clamp(want: usize, remaining: usize, clamped: &mut bool) -> usize {
        if want > remaining {
            *clamped = true;
            log::warn!("stage budget {want} clamped to {remaining} available columns");
            remaining
        } else {
            want
        }
    }

    let m = a.order();
    let mut clamped = false;
    let mut remaining = m;

    let c1 = clamp(requested[0], remaining, &mut clamped).max(1);
    let mut set = uniform_sample(m, c1, rng)?;
    // Re-tag the uniform stage so the provenance triple is explicit.
    set = ColumnSet::with_stages(set.indices().to_vec(), vec![c1])?;
    remaining -= c1;

    for &want in &requested[1..] {
        if want == 0 {
            continue;
        }
        if remaining == 0 {
            clamped = true;
            log::warn!("stage budget {want} clamped to 0: all columns already selected");
            break;
        }
        let c_stage = clamp(want, remaining, &mut clamped);
        match adaptive_sample(a, Some(&set), c_stage, rng) {
            Ok(next) => {
                set = next;
                remaining -= c_stage;
            }
            Err(Error::ExactResidual) => {
                log::debug!(
                    "residual exhausted after {} columns; early exit with exactness signal",
                    set.len()
                );
                return Ok(SampleResult {
                    columns: set,
                    exact_early_exit: true,
                    clamped,
                    padded: false,
                });
            }
            Err(e) => return Err(e),
        }
    }

    Ok(SampleResult { columns: set, exact_early_exit: false, clamped, padded: false })
}

/// Dispatches a configured sampler. `leverage_scores` must be supplied for the
/// leverage method (they depend only on (A, k), so sweeps compute them once).
pub fn sample_columns<T: Scalar>(
    a: &(impl SymmetricOps<T> + ?Sized),
    config: &SamplerConfig,
    seed: RngSeed,
    leverage_scores: Option<&[T]>,
) -> Result<SampleResult> {
    config.validate()?;
    let mut rng = seed.rng();
    let total_budget = || -> Result<usize> {
        Ok(match &config.budget {
            Some(b) => b.total,
            None => {
                let (c1, c2, c3) = theorem_budget(config.k, config.epsilon, config.mu)?;
                (c1 + c2 + c3).min(a.order())
            }
        })
    };
    match config.method {
        SamplerMethod::Uniform => {
            let c = total_budget()?;
            Ok(SampleResult::plain(uniform_sample(a.order(), c, &mut rng)?))
        }
        SamplerMethod::Adaptive => {
            let c = total_budget()?;
            Ok(SampleResult::plain(adaptive_sample(a, None, c, &mut rng)?))
        }
        SamplerMethod::Leverage => {
            let c = total_budget()?;
            let scores = leverage_scores.ok_or_else(|| {
                Error::parameter("leverage sampling needs precomputed scores".to_string())
            })?;
            leverage_sample_from_scores(scores, c, &mut rng)
        }
        SamplerMethod::UniformAdaptive2 => uniform_adaptive2(a, config, &mut rng),
        SamplerMethod::AdaptiveFull => {
            let c = total_budget()?;
            adaptive_full(a, c, &mut rng)
        }
    }
}
