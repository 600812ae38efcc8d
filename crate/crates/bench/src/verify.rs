//! Named verification suites, runnable from the CLI with fixed seeds.
//!
//! Each suite executes the property checks of one subsystem and reports one
//! pass/fail line per invariant; any failure turns into a nonzero exit.

use crate::synth::random_spd;
use nystrom_core::columns::ColumnSet;
use nystrom_core::dense::DenseMatrix;
use nystrom_core::error::{Error, Result};
use nystrom_core::linalg::{
    best_rank_k, coherence, invert_small, numeric_rank, partitioned_pinv, pinv,
    project_onto_columns, project_onto_columns_rank_k, rank_restricted_residual_sq,
    symmetric_tail_norm, NormKind,
};
use nystrom_core::nystrom::{
    approximate, modified_intersection_naive, residual_norm, IntersectionMethod,
};
use nystrom_core::oracle::{
    adversarial_residual_norm, build_block_adversarial, gen_low_rank_spsd, lower_bound_value,
    single_block_modified_error, AdversarialSpec, LowRankSpec,
};
use nystrom_core::samplers::{theorem_budget, uniform_sample, RngSeed};
use nystrom_core::{Symmetric, SymmetricMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Core,
    Exactness,
    FastPath,
    Adversarial,
    Statistical,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Self::Core),
            "exactness" => Ok(Self::Exactness),
            "fast-path" | "fast_path" => Ok(Self::FastPath),
            "adversarial" => Ok(Self::Adversarial),
            "statistical" => Ok(Self::Statistical),
            other => Err(Error::parameter(format!("unknown suite '{other}'"))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Core => "core",
            Self::Exactness => "exactness",
            Self::FastPath => "fast-path",
            Self::Adversarial => "adversarial",
            Self::Statistical => "statistical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match run() {
        Ok((passed, detail)) => CheckResult { name: name.into(), passed, detail },
        Err(e) => CheckResult { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

fn seeded_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    // Cheap deterministic fill; adequacy, not statistical quality, matters.
    DenseMatrix::from_fn(rows, cols, |i, j| {
        let h = (i as u64)
            .wrapping_mul(6364136223846793005)
            .wrapping_add((j as u64).wrapping_mul(1442695040888963407))
            .wrapping_add(seed.wrapping_mul(2862933555777941757));
        ((h >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}

pub fn run_suite(suite: Suite) -> VerifyReport {
    let checks = match suite {
        Suite::Core => core_suite(),
        Suite::Exactness => exactness_suite(),
        Suite::FastPath => fast_path_suite(),
        Suite::Adversarial => adversarial_suite(),
        Suite::Statistical => statistical_suite(),
    };
    VerifyReport { suite: suite.to_string(), checks }
}

fn core_suite() -> Vec<CheckResult> {
    vec![
        check("matmul-blocked-equals-unblocked", || {
            let a = seeded_dense(40, 30, 1);
            let b = seeded_dense(30, 20, 2);
            let full = a.matmul_blocked(&b, usize::MAX)?;
            let mut worst = 0.0f64;
            for block in [1usize, 3, 7, 16] {
                let got = a.matmul_blocked(&b, block)?;
                worst = worst.max(got.sub(&full)?.max_abs());
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
        }),
        check("pinv-penrose-conditions", || {
            let mut worst = 0.0f64;
            for seed in 0..5u64 {
                let a = seeded_dense(12, 8, 100 + seed);
                let p = pinv(&a, None)?;
                let scale = a.frobenius_norm();
                let apa = a.matmul(&p)?.matmul(&a)?;
                let pap = p.matmul(&a)?.matmul(&p)?;
                let ap = a.matmul(&p)?;
                let pa = p.matmul(&a)?;
                worst = worst
                    .max(apa.sub(&a)?.frobenius_norm() / scale)
                    .max(pap.sub(&p)?.frobenius_norm() / p.frobenius_norm())
                    .max(ap.sub(&ap.transpose())?.frobenius_norm() / scale)
                    .max(pa.sub(&pa.transpose())?.frobenius_norm() / scale);
            }
            Ok((worst < 1e-8, format!("worst relative violation {worst:.2e}")))
        }),
        check("projection-idempotent", || {
            let a = seeded_dense(24, 18, 7);
            let c = seeded_dense(24, 6, 8);
            let once = project_onto_columns(&a, &c)?;
            let twice = project_onto_columns(&once, &c)?;
            let dev = once.sub(&twice)?.max_abs();
            Ok((dev < 1e-10, format!("max deviation {dev:.2e}")))
        }),
        check("projection-monotone-under-augmentation", || {
            let a = seeded_dense(30, 30, 11);
            let c1 = seeded_dense(30, 4, 12);
            let c2 = DenseMatrix::hstack(&[&c1, &seeded_dense(30, 3, 13)])?;
            let r1 = a.sub(&project_onto_columns(&a, &c1)?)?.frobenius_norm();
            let r2 = a.sub(&project_onto_columns(&a, &c2)?)?.frobenius_norm();
            Ok((r2 <= r1 + 1e-10, format!("{r1:.6} -> {r2:.6}")))
        }),
        check("unrestricted-projection-dominates-rank-restricted", || {
            let a = seeded_dense(25, 25, 21);
            let c = seeded_dense(25, 7, 22);
            let full = a.sub(&project_onto_columns(&a, &c)?)?.frobenius_norm();
            let mut ok = true;
            let mut detail = String::new();
            for k in 1..=7 {
                let restricted =
                    a.sub(&project_onto_columns_rank_k(&a, &c, k)?)?.frobenius_norm();
                if full > restricted + 1e-10 {
                    ok = false;
                    detail = format!("violated at k={k}: {full} > {restricted}");
                }
            }
            if ok {
                detail = "holds for k = 1..=7".into();
            }
            Ok((ok, detail))
        }),
        check("coherence-bounds", || {
            let a = seeded_dense(20, 14, 31);
            let mut ok = true;
            for k in 1..=5 {
                let mu = coherence(&a, k)?;
                ok &= mu >= 1.0 - 1e-10 && mu <= 14.0 / k as f64 + 1e-10;
            }
            Ok((ok, "1 <= mu_k <= n/k for k = 1..=5".into()))
        }),
        check("partitioned-pinv-matches-direct", || {
            let w_raw = seeded_dense(6, 6, 41);
            let mut wd = w_raw.gram();
            for i in 0..6 {
                let v = wd.get(i, i);
                wd.set(i, i, v + 1.0);
            }
            let w = Symmetric::from_dense_lower(&wd)?;
            let a21 = seeded_dense(14, 6, 42);
            let fast = partitioned_pinv(&w, &a21)?;
            let direct = pinv(&DenseMatrix::vstack(&[&w.to_dense(), &a21])?, None)?;
            let rel = fast.sub(&direct)?.frobenius_norm() / direct.frobenius_norm();
            Ok((rel < 1e-8, format!("relative difference {rel:.2e}")))
        }),
        check("best-rank-k-beats-perturbed-competitors", || {
            let a = seeded_dense(15, 15, 51);
            let k = 4;
            let ak = best_rank_k(&a, k)?;
            let base = a.sub(&ak)?.frobenius_norm();
            let mut ok = true;
            for seed in 0..100u64 {
                let noise = seeded_dense(15, 15, 1000 + seed).scale(0.05);
                let competitor = best_rank_k(&ak.add(&noise)?, k)?;
                let err = a.sub(&competitor)?.frobenius_norm();
                ok &= base <= err + 1e-10;
            }
            Ok((ok, format!("best rank-{k} error {base:.6} minimal over 100 competitors")))
        }),
    ]
}

fn exactness_suite() -> Vec<CheckResult> {
    let instances = |full_rank: bool| -> Result<(bool, String)> {
        let mut worst: f64 = 0.0;
        let mut min_residual = f64::INFINITY;
        for seed in 0..20u64 {
            let r = 3 + (seed % 5) as usize;
            let c = r + 2 + (seed % 4) as usize;
            let m = 40 + (seed % 3) as usize * 10;
            let lbr = if full_rank { r } else { r - 1 };
            let spec = LowRankSpec { m, r, leading_block_rank: lbr, c };
            let a = gen_low_rank_spsd::<f64>(&spec, RngSeed(900 + seed))?;
            let cols = ColumnSet::new((0..c).collect())?;
            let scale = a.frobenius_norm();
            for method in [IntersectionMethod::Standard, IntersectionMethod::ModifiedNaive] {
                if !full_rank && method == IntersectionMethod::Standard {
                    continue;
                }
                let approx = approximate(&a, &cols, method)?;
                let res = residual_norm(&a, &approx, NormKind::Frobenius)?;
                if full_rank {
                    worst = worst.max(res / scale);
                } else {
                    min_residual = min_residual.min(res);
                }
            }
        }
        if full_rank {
            Ok((worst < 1e-8, format!("worst relative residual {worst:.2e}")))
        } else {
            Ok((min_residual > 1e-6, format!("smallest modified residual {min_residual:.2e}")))
        }
    };
    vec![
        check("exact-reconstruction-when-rank-w-equals-rank-a", || instances(true)),
        check("nonzero-residual-when-rank-w-deficient", || instances(false)),
    ]
}

/// Relative Frobenius difference between two intersection matrices; the
/// fast-path acceptance threshold is 1e-8.
pub fn intersection_rel_diff(u1: &SymmetricMatrix<f64>, u2: &SymmetricMatrix<f64>) -> Result<f64> {
    let diff = u1.to_dense().sub(&u2.to_dense())?.frobenius_norm();
    Ok(diff / u2.to_dense().frobenius_norm().max(f64::MIN_POSITIVE))
}

fn fast_path_suite() -> Vec<CheckResult> {
    vec![
        check("fast-equals-naive-on-random-spsd", || {
            let mut worst = 0.0f64;
            for seed in 0..10u64 {
                let a = random_spd(120, 0.5, 7000 + seed);
                let mut rng = RngSeed(7100 + seed).rng();
                let cols = uniform_sample(120, 12, &mut rng)?;
                let fast = approximate(&a, &cols, IntersectionMethod::ModifiedFast)?;
                if fast.fallback() {
                    return Ok((false, format!("unexpected fallback at seed {seed}")));
                }
                let naive = approximate(&a, &cols, IntersectionMethod::ModifiedNaive)?;
                worst = worst.max(intersection_rel_diff(fast.u(), naive.u())?);
            }
            Ok((worst < 1e-8, format!("max relative difference {worst:.2e}")))
        }),
        check("singular-w-triggers-fallback", || {
            // Two identical columns make W singular.
            let mut a = Symmetric::zeros(4);
            for i in 0..4 {
                a.set(i, i, 1.0);
            }
            a.set(1, 0, 1.0); // columns 0 and 1 now coincide after symmetry
            a.set(0, 0, 1.0);
            a.set(1, 1, 1.0);
            let cols = ColumnSet::new(vec![0, 1])?;
            let approx = approximate(&a, &cols, IntersectionMethod::ModifiedFast)?;
            Ok((
                approx.fallback() && approx.method() == IntersectionMethod::ModifiedNaive,
                format!("fallback={}, method={}", approx.fallback(), approx.method()),
            ))
        }),
        check("t3-sign-fault-is-detected", || {
            // Assemble the fast formula by hand with the T3 term negated and
            // confirm the equality check would flag it.
            let a = random_spd(60, 0.5, 7777);
            let mut rng = RngSeed(7778).rng();
            let cols = uniform_sample(60, 8, &mut rng)?;
            let naive = modified_intersection_naive(&a, &a.columns(cols.indices())?)?;
            let faulty = fast_intersection_with_t3_sign(&a, cols.indices(), -1.0)?;
            let healthy = fast_intersection_with_t3_sign(&a, cols.indices(), 1.0)?;
            let fault_diff = intersection_rel_diff(&faulty, &naive)?;
            let healthy_diff = intersection_rel_diff(&healthy, &naive)?;
            Ok((
                fault_diff > 1e-8 && healthy_diff < 1e-8,
                format!("healthy diff {healthy_diff:.2e}, faulty diff {fault_diff:.2e}"),
            ))
        }),
    ]
}

/// Test-only re-assembly of the fast formula from public primitives, with a
/// sign knob on T3, used to prove the fast-vs-naive comparison catches a
/// perturbed term.
fn fast_intersection_with_t3_sign(
    a: &Symmetric,
    columns: &[usize],
    t3_sign: f64,
) -> Result<SymmetricMatrix<f64>> {
    let c = columns.len();
    let w = a.principal_submatrix(columns)?;
    let winv = invert_small(&w.to_dense())?;
    let mut z = a.columns(columns)?;
    for &j in columns {
        for t in 0..c {
            z.set(j, t, 0.0);
        }
    }
    let t0 = z.gram();
    let az = a.mul_dense(&z)?;
    let mid3 = z.transpose_matmul(&az)?;
    let t2 = t0.matmul(&winv)?;
    let mut inner = winv.matmul(&t2)?;
    for i in 0..c {
        let v = inner.get(i, i);
        inner.set(i, i, v + 1.0);
    }
    let t1 = winv.matmul(&invert_small(&inner)?)?;
    let t3 = winv.matmul(&mid3)?.matmul(&winv)?.scale(t3_sign);
    let core = w.to_dense().add(&t2)?.add(&t2.transpose())?.add(&t3)?;
    let u = t1.matmul(&core)?.matmul(&t1.transpose())?;
    Symmetric::from_dense_lower(&u.symmetrized()?)
}

fn adversarial_suite() -> Vec<CheckResult> {
    vec![
        check("closed-form-matches-brute-force-grid", || {
            let mut worst = 0.0f64;
            let mut points = 0;
            for (pi, &p) in [4usize, 7, 12, 20].iter().enumerate() {
                for (ci, &c) in [1usize, 2, 3].iter().enumerate() {
                    if c >= p {
                        continue;
                    }
                    let alpha = 0.15 + 0.2 * ((pi + ci) % 4) as f64;
                    let spec = AdversarialSpec { m: p, k: 1, alpha };
                    let b = build_block_adversarial::<f64>(&spec)?;
                    let cols = ColumnSet::new((0..c).collect())?;
                    let approx = approximate(&b, &cols, IntersectionMethod::ModifiedNaive)?;
                    let brute = residual_norm(&b, &approx, NormKind::Frobenius)?.powi(2);
                    let closed = single_block_modified_error(p, c, alpha)?;
                    worst = worst.max((brute - closed).abs() / closed.max(1e-300));
                    points += 1;
                }
            }
            Ok((worst < 1e-6, format!("{points} points, worst relative gap {worst:.2e}")))
        }),
        check("spot-value-p2-c1-alpha-half", || {
            let closed = single_block_modified_error(2, 1, 0.5)?;
            let spec = AdversarialSpec { m: 2, k: 1, alpha: 0.5 };
            let b = build_block_adversarial::<f64>(&spec)?;
            let cols = ColumnSet::new(vec![0])?;
            let approx = approximate(&b, &cols, IntersectionMethod::ModifiedNaive)?;
            let brute = residual_norm(&b, &approx, NormKind::Frobenius)?.powi(2);
            let ok = (closed - 0.54).abs() < 1e-10 && (brute - 0.54).abs() < 1e-10;
            Ok((ok, format!("closed {closed}, brute {brute}")))
        }),
        check("residual-identity-matches-eigenvalues", || {
            let mut worst = 0.0f64;
            for (m, k, alpha) in [(60usize, 3usize, 0.7), (100, 4, 0.5), (40, 8, 0.9)] {
                let spec = AdversarialSpec { m, k, alpha };
                let a = build_block_adversarial::<f64>(&spec)?;
                let closed = adversarial_residual_norm::<f64>(&spec)?;
                let eig = symmetric_tail_norm(&a, k, NormKind::Frobenius)?;
                worst = worst.max((closed - eig).abs() / closed);
            }
            Ok((worst < 1e-8, format!("worst relative gap {worst:.2e}")))
        }),
        check("finite-alpha-lower-bound-respected", || {
            let (m, k, c, alpha) = (60usize, 3usize, 12usize, 0.99);
            let spec = AdversarialSpec { m, k, alpha };
            let a = build_block_adversarial::<f64>(&spec)?;
            let bound = lower_bound_value(m, k, c, alpha)?;
            let mut min_err = f64::INFINITY;
            for seed in 0..50u64 {
                let mut rng = RngSeed(3000 + seed).rng();
                let cols = uniform_sample(m, c, &mut rng)?;
                let approx = approximate(&a, &cols, IntersectionMethod::ModifiedFast)?;
                let err = residual_norm(&a, &approx, NormKind::Frobenius)?.powi(2);
                min_err = min_err.min(err);
            }
            Ok((
                min_err >= 0.97 * bound,
                format!("min squared error {min_err:.6e} vs 0.97 * bound {:.6e}", 0.97 * bound),
            ))
        }),
        check("column-choice-exchangeability", || {
            let spec = AdversarialSpec { m: 15, k: 1, alpha: 0.6 };
            let b = build_block_adversarial::<f64>(&spec)?;
            let mut errors = Vec::new();
            for seed in 0..6u64 {
                let mut rng = RngSeed(4000 + seed).rng();
                let cols = uniform_sample(15, 4, &mut rng)?;
                let approx = approximate(&b, &cols, IntersectionMethod::ModifiedNaive)?;
                errors.push(residual_norm(&b, &approx, NormKind::Frobenius)?);
            }
            let spread = errors.iter().cloned().fold(f64::MIN, f64::max)
                - errors.iter().cloned().fold(f64::MAX, f64::min);
            Ok((spread < 1e-10, format!("error spread across subsets {spread:.2e}")))
        }),
    ]
}

/// Flat-leverage SPSD test matrix: top-k eigenspace spanned by k cosine basis
/// vectors (near-flat row norms, so the coherence is close to its minimum),
/// eigenvalues `lambda` on that subspace and `tau` on the complement.
pub fn low_coherence_spsd(m: usize, k: usize, tau: f64) -> (Symmetric, f64, f64) {
    let mut v = DenseMatrix::<f64>::zeros(m, k);
    for t in 0..k {
        let freq = (t * 7 + 3) % m.max(1);
        let scale = (2.0 / m as f64).sqrt();
        for i in 0..m {
            let angle = std::f64::consts::PI * (i as f64 + 0.5) * freq as f64 / m as f64;
            v.set(i, t, scale * angle.cos());
        }
    }
    // Gram-Schmidt touch-up keeps the columns orthonormal to machine
    // precision even for unlucky frequency pairs.
    for t in 0..k {
        for s in 0..t {
            let dot: f64 =
                v.column(t).iter().zip(v.column(s)).map(|(a, b)| a * b).sum();
            let vs: Vec<f64> = v.column(s).to_vec();
            for (x, y) in v.column_mut(t).iter_mut().zip(vs.iter()) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.column(t).iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.column_mut(t) {
            *x /= norm;
        }
    }

    let lambdas: Vec<f64> = (0..k).map(|t| tau * (30.0 - t as f64)).collect();
    let mut a = DenseMatrix::<f64>::zeros(m, m);
    for t in 0..k {
        let col: Vec<f64> = v.column(t).to_vec();
        let w = lambdas[t] - tau;
        for j in 0..m {
            let cj = col[j] * w;
            if cj == 0.0 {
                continue;
            }
            for i in 0..m {
                let val = a.get(i, j) + col[i] * cj;
                a.set(i, j, val);
            }
        }
    }
    for i in 0..m {
        let val = a.get(i, i) + tau;
        a.set(i, i, val);
    }

    // Coherence of the constructed top-k subspace, directly from V_k.
    let mut max_row = 0.0f64;
    for i in 0..m {
        let mut s = 0.0;
        for t in 0..k {
            s += v.get(i, t) * v.get(i, t);
        }
        max_row = max_row.max(s);
    }
    let mu = m as f64 / k as f64 * max_row;
    let tail_sq = tau * tau * (m - k) as f64;
    (Symmetric::from_dense_lower(&a).expect("square"), mu, tail_sq)
}

/// Counts uniform-sampling trials where the rank-restricted residual beats
/// `(1 + 1/(delta theta)) ||A - A_k||_F^2`, with the budget from the uniform
/// column sampling analysis.
pub fn uniform_stage_event_count(
    m: usize,
    k: usize,
    delta: f64,
    theta: f64,
    trials: usize,
    base_seed: u64,
) -> Result<(usize, usize)> {
    let (a, mu, tail_sq) = low_coherence_spsd(m, k, 1.0);
    let c = ((mu * k as f64 * (k as f64 / delta).ln())
        / (theta * theta.ln() - theta + 1.0))
        .ceil() as usize;
    let c = c.min(m - 1).max(k);
    let bound = (1.0 + 1.0 / (delta * theta)) * tail_sq;
    let dense = a.to_dense();
    use rayon::prelude::*;
    let hits: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngSeed(base_seed).derive(t).rng();
            let cols = uniform_sample(m, c, &mut rng)?;
            let c_mat = a.columns(cols.indices())?;
            let res_sq = rank_restricted_residual_sq(&dense, &c_mat, k)?;
            Ok(res_sq <= bound)
        })
        .collect();
    let hits = hits?;
    Ok((hits.iter().filter(|&&h| h).count(), c))
}

fn statistical_suite() -> Vec<CheckResult> {
    vec![
        check("uniform-stage-error-event-frequency", || {
            let trials = 60;
            let (hits, c) = uniform_stage_event_count(400, 8, 0.25, 0.5, trials, 5000)?;
            let needed = (trials as f64 * 0.4).ceil() as usize;
            Ok((
                hits >= needed,
                format!("{hits}/{trials} trials hit the bound (needed {needed}, c = {c})"),
            ))
        }),
        check("theorem-budget-identity", || {
            let mut ok = true;
            for (k, eps, mu) in [(5usize, 0.5f64, 1.0f64), (10, 0.25, 2.0), (2, 1.0, 1.0)] {
                let (c1, c2, c3) = theorem_budget(k, eps, mu)?;
                let direct = (2.0 / eps * (c1 + c2) as f64 - 1e-2).ceil() as usize;
                ok &= c3 == direct;
            }
            Ok((ok, "c3 = ceil(2 (c1 + c2) / eps) before rounding".into()))
        }),
        check("numeric-rank-of-constructed-low-coherence-matrix", || {
            let (a, mu, _) = low_coherence_spsd(200, 6, 1.0);
            let full = numeric_rank(&a.to_dense(), None)?;
            let mu_ok = (1.0..2.5).contains(&mu);
            Ok((full == 200 && mu_ok, format!("rank {full}, constructed coherence {mu:.3}")))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_fresh_build() {
        for suite in [Suite::Core, Suite::Exactness, Suite::FastPath, Suite::Adversarial] {
            let report = run_suite(suite);
            for c in &report.checks {
                assert!(c.passed, "{} / {}: {}", report.suite, c.name, c.detail);
            }
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("fast-path".parse::<Suite>().unwrap(), Suite::FastPath);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
