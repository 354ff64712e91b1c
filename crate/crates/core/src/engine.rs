//! Wald-type tests on quantile contrasts: asymptotic chi-square calibration,
//! studentized permutation calibration, two-sample confidence intervals and
//! the noncentral-chi-square local power approximation.
//!
//! The statistic is S_n = n (T qhat)' (T Sigma_hat T')+ (T qhat) with T the
//! hypothesis projection and Sigma_hat the block-diagonal covariance estimate.
//! The permutation test redraws group memberships from the pooled data with
//! the original group sizes and recomputes *everything* per replicate,
//! including bandwidths and finite-sample corrections, so each permuted
//! statistic is studentized by its own covariance estimate.

use crate::contrasts::{build_hypothesis, HypothesisMatrices, HypothesisSpec};
use crate::error::{Error, Result};
use crate::linalg::{direct_sum, Matrix};
use crate::prob::Probability;
use crate::quantiles::{
    order_statistic_index, quantile_from_sorted, QuantileVector, SampleVector,
};
use crate::rng::replicate_rng;
use crate::specfun::{chisq_cdf, chisq_quantile, noncentral_chisq_cdf, std_normal_quantile};
use crate::variance::{
    bootstrap_weights, pb_params, sigma_bootstrap_sorted, sigma_kernel_sorted, sigma_pb_sorted,
    CovarianceBlocks, EstimatorKind, PbParams,
};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

/// One factorial cell: its factor levels and observations.
#[derive(Debug, Clone)]
pub struct Group {
    pub labels: Vec<String>,
    pub data: SampleVector,
}

/// Factorial observations, one entry per design cell, ordered
/// lexicographically by factor levels. This order defines the layout of the
/// quantile vector and must match the column order of the contrast matrix.
#[derive(Debug, Clone)]
pub struct GroupedSample {
    groups: Vec<Group>,
}

impl GroupedSample {
    /// Wraps unlabeled groups in the given order (single synthetic factor).
    pub fn from_data(data: Vec<SampleVector>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::data("at least one group required"));
        }
        let width = data.len().to_string().len();
        let groups = data
            .into_iter()
            .enumerate()
            .map(|(i, d)| Group {
                labels: vec![format!("{:0width$}", i + 1)],
                data: d,
            })
            .collect();
        Ok(GroupedSample { groups })
    }

    /// Builds from labeled cells: sorts them lexicographically and verifies
    /// that the cells form a complete cross product of the observed factor
    /// levels with no duplicates.
    pub fn from_labeled(cells: Vec<(Vec<String>, SampleVector)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::data("at least one design cell required"));
        }
        let arity = cells[0].0.len();
        if arity == 0 {
            return Err(Error::data("at least one factor label required"));
        }
        if cells.iter().any(|(l, _)| l.len() != arity) {
            return Err(Error::data("inconsistent number of factor labels"));
        }
        let mut groups: Vec<Group> = cells
            .into_iter()
            .map(|(labels, data)| Group { labels, data })
            .collect();
        groups.sort_by(|a, b| a.labels.cmp(&b.labels));
        for pair in groups.windows(2) {
            if pair[0].labels == pair[1].labels {
                return Err(Error::data(format!(
                    "duplicate design cell ({})",
                    pair[0].labels.join(",")
                )));
            }
        }
        // complete cross product of per-factor level sets
        let mut levels: Vec<Vec<String>> = vec![Vec::new(); arity];
        for g in &groups {
            for (j, l) in g.labels.iter().enumerate() {
                if !levels[j].contains(l) {
                    levels[j].push(l.clone());
                }
            }
        }
        let expected: usize = levels.iter().map(Vec::len).product();
        if groups.len() != expected {
            let mut missing = Vec::new();
            let mut combo = vec![0usize; arity];
            'outer: loop {
                let labels: Vec<String> = combo
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| levels[j][i].clone())
                    .collect();
                if !groups.iter().any(|g| g.labels == labels) {
                    missing.push(labels.join(","));
                }
                for j in (0..arity).rev() {
                    combo[j] += 1;
                    if combo[j] < levels[j].len() {
                        continue 'outer;
                    }
                    combo[j] = 0;
                }
                break;
            }
            return Err(Error::data(format!(
                "design is not a complete cross product; empty cell(s): {}",
                missing.join("; ")
            )));
        }
        Ok(GroupedSample { groups })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.data.len()).collect()
    }

    pub fn n_total(&self) -> usize {
        self.groups.iter().map(|g| g.data.len()).sum()
    }

    fn pooled(&self) -> Vec<f64> {
        let mut pool = Vec::with_capacity(self.n_total());
        for g in &self.groups {
            pool.extend_from_slice(g.data.values());
        }
        pool
    }

    fn sorted_groups(&self) -> Vec<Vec<f64>> {
        self.groups.iter().map(|g| g.data.sorted()).collect()
    }
}

/// Which calibration produced a test decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    Asymptotic,
    Permutation,
}

/// Result of a QANOVA test run.
#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df: usize,
    pub p_asymptotic: f64,
    pub crit_asymptotic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_permutation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crit_permutation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_perm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

/// Wald-type statistic n (T q)' (T Sigma T')+ (T q).
///
/// Row-equivalent contrast matrices give identical values because only the
/// unique projection T enters.
pub fn wald_statistic(
    qhat: &QuantileVector,
    cov: &CovarianceBlocks,
    hyp: &HypothesisMatrices,
    n: usize,
) -> Result<f64> {
    let dim = hyp.dim();
    if qhat.values().len() != dim {
        return Err(Error::dimension(format!(
            "quantile vector has length {}, hypothesis expects {dim}",
            qhat.values().len()
        )));
    }
    let sigma = cov.direct_sum();
    if sigma.rows() != dim {
        return Err(Error::dimension(format!(
            "covariance is {}x{}, hypothesis expects {dim}x{dim}",
            sigma.rows(),
            sigma.rows()
        )));
    }
    Ok(wald_from_parts(qhat.values(), &sigma, hyp.projection(), n)?.statistic)
}

struct WaldEval {
    statistic: f64,
    degenerate: bool,
}

fn wald_from_parts(q: &[f64], sigma: &Matrix, t: &Matrix, n: usize) -> Result<WaldEval> {
    let tq = t.mul_vec(q);
    let mid = t.matmul(sigma).matmul(&t.transpose());
    let degenerate = mid
        .data()
        .iter()
        .all(|v| v.abs() <= f64::MIN_POSITIVE);
    let inv = mid.pinv()?;
    let tmp = inv.mul_vec(&tq);
    let quad: f64 = tq.iter().zip(&tmp).map(|(a, b)| a * b).sum();
    Ok(WaldEval {
        statistic: (n as f64 * quad).max(0.0),
        degenerate,
    })
}

/// Precomputed, data-independent pieces of one covariance strategy for fixed
/// group sizes. Inside the permutation loop only the data changes, so
/// bootstrap weights and interval denominators are computed once.
struct CovEvaluator {
    kind: EstimatorKind,
    probs: Vec<Probability>,
    n_total: usize,
    boot_weights: Vec<Vec<Vec<f64>>>, // [group][prob] -> weights over order stats
    pb: Vec<Vec<PbParams>>,           // [group][prob]
}

impl CovEvaluator {
    fn new(
        sizes: &[usize],
        probs: &[Probability],
        kind: EstimatorKind,
        alpha: Probability,
    ) -> Self {
        let n_total = sizes.iter().sum();
        let mut boot_weights = Vec::new();
        let mut pb = Vec::new();
        match kind {
            EstimatorKind::Bootstrap => {
                for &n in sizes {
                    boot_weights
                        .push(probs.iter().map(|&p| bootstrap_weights(n, p)).collect());
                }
            }
            EstimatorKind::IntervalPb => {
                for &n in sizes {
                    pb.push(probs.iter().map(|&p| pb_params(n, p, alpha)).collect());
                }
            }
            EstimatorKind::Kernel => {}
        }
        CovEvaluator {
            kind,
            probs: probs.to_vec(),
            n_total,
            boot_weights,
            pb,
        }
    }

    /// Data-independent warnings (interval-correction fallbacks).
    fn static_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (gi, params) in self.pb.iter().enumerate() {
            for (pp, &p) in params.iter().zip(&self.probs) {
                if pp.fallback {
                    out.push(format!(
                        "group {}: finite-sample correction degenerate at p={} \
                         (l={}, u={}), using alpha",
                        gi + 1,
                        p.value(),
                        pp.l,
                        pp.u
                    ));
                }
            }
        }
        out
    }

    fn block(&self, group: usize, sorted: &[f64]) -> Result<Matrix> {
        match self.kind {
            EstimatorKind::Kernel => sigma_kernel_sorted(sorted, &self.probs, self.n_total),
            EstimatorKind::Bootstrap => Ok(sigma_bootstrap_sorted(
                sorted,
                &self.probs,
                self.n_total,
                &self.boot_weights[group],
            )),
            EstimatorKind::IntervalPb => Ok(sigma_pb_sorted(
                sorted,
                &self.probs,
                self.n_total,
                &self.pb[group],
            )),
        }
    }

    fn sigma(&self, sorted_groups: &[Vec<f64>]) -> Result<Matrix> {
        let blocks: Vec<Matrix> = sorted_groups
            .iter()
            .enumerate()
            .map(|(gi, sorted)| self.block(gi, sorted))
            .collect::<Result<_>>()?;
        Ok(direct_sum(&blocks).expect("square blocks"))
    }
}

fn validate_test_inputs(
    sample: &GroupedSample,
    spec: &HypothesisSpec,
) -> Result<HypothesisMatrices> {
    if spec.design.k() != sample.k() {
        return Err(Error::dimension(format!(
            "hypothesis design has {} groups, sample has {}",
            spec.design.k(),
            sample.k()
        )));
    }
    for g in sample.groups() {
        if g.data.len() < 2 {
            return Err(Error::data(format!(
                "group ({}) has fewer than 2 observations",
                g.labels.join(",")
            )));
        }
    }
    let hyp = build_hypothesis(spec)?;
    if hyp.rank() == 0 {
        return Err(Error::domain("hypothesis matrix has rank 0"));
    }
    Ok(hyp)
}

fn quantvec_from_sorted(sorted_groups: &[Vec<f64>], probs: &[Probability]) -> Vec<f64> {
    let mut q = Vec::with_capacity(sorted_groups.len() * probs.len());
    for sorted in sorted_groups {
        for &p in probs {
            q.push(quantile_from_sorted(sorted, p));
        }
    }
    q
}

struct ObservedStat {
    eval: WaldEval,
    hyp: HypothesisMatrices,
    evaluator: CovEvaluator,
    warnings: Vec<String>,
}

fn observed_statistic(
    sample: &GroupedSample,
    spec: &HypothesisSpec,
    kind: EstimatorKind,
    alpha: Probability,
) -> Result<ObservedStat> {
    let hyp = validate_test_inputs(sample, spec)?;
    let evaluator = CovEvaluator::new(&sample.sizes(), &spec.probs, kind, alpha);
    let sorted_groups = sample.sorted_groups();
    let q = quantvec_from_sorted(&sorted_groups, &spec.probs);
    let sigma = evaluator.sigma(&sorted_groups)?;
    let eval = wald_from_parts(&q, &sigma, hyp.projection(), sample.n_total())?;
    let mut warnings = evaluator.static_warnings();
    if eval.degenerate {
        warnings.push(
            "observed covariance is numerically zero; statistic 0 and p = 1 by convention"
                .to_string(),
        );
    }
    Ok(ObservedStat {
        eval,
        hyp,
        evaluator,
        warnings,
    })
}

/// Asymptotic test: compare S_n against the chi-square(rank T) calibration.
pub fn asymptotic_test(
    sample: &GroupedSample,
    spec: &HypothesisSpec,
    kind: EstimatorKind,
    alpha: Probability,
) -> Result<TestOutcome> {
    let obs = observed_statistic(sample, spec, kind, alpha)?;
    let df = obs.hyp.rank();
    let statistic = obs.eval.statistic;
    Ok(TestOutcome {
        statistic,
        df,
        p_asymptotic: 1.0 - chisq_cdf(statistic, df as u32)?,
        crit_asymptotic: chisq_quantile(alpha.complement(), df as u32)?,
        p_permutation: None,
        crit_permutation: None,
        n_perm: None,
        seed: None,
        warnings: obs.warnings,
    })
}

/// Statistic for one permuted assignment of the pooled data; degenerate
/// covariance estimates map to +inf, which counts against rejection.
fn permuted_statistic(
    pool: &[f64],
    sizes: &[usize],
    probs: &[Probability],
    evaluator: &CovEvaluator,
    t: &Matrix,
    n_total: usize,
) -> Result<(f64, bool)> {
    let mut sorted_groups = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &sz in sizes {
        let mut g = pool[offset..offset + sz].to_vec();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted_groups.push(g);
        offset += sz;
    }
    // replicates must keep the original group sizes
    debug_assert_eq!(offset, pool.len());
    let q = quantvec_from_sorted(&sorted_groups, probs);
    let sigma = evaluator.sigma(&sorted_groups)?;
    let eval = wald_from_parts(&q, &sigma, t, n_total)?;
    if eval.degenerate {
        Ok((f64::INFINITY, true))
    } else {
        Ok((eval.statistic, false))
    }
}

/// Empirical upper quantile of the permutation statistics under the same
/// order-statistic convention as the data quantiles.
fn permutation_critical_value(stats: &mut [f64], level: Probability) -> f64 {
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stats[order_statistic_index(stats.len(), level) - 1]
}

/// Studentized permutation test with `n_perm` random reassignments of the
/// pooled data to groups of the original sizes.
///
/// The Monte-Carlo p-value uses the add-one estimator
/// (1 + #{S_pi >= S_obs}) / (n_perm + 1) and is bit-identical for a fixed
/// seed regardless of the number of worker threads.
pub fn permutation_test(
    sample: &GroupedSample,
    spec: &HypothesisSpec,
    kind: EstimatorKind,
    alpha: Probability,
    n_perm: usize,
    seed: u64,
) -> Result<TestOutcome> {
    if n_perm == 0 {
        return Err(Error::domain("n_perm must be at least 1"));
    }
    let obs = observed_statistic(sample, spec, kind, alpha)?;
    let sizes = sample.sizes();
    let pool = sample.pooled();
    let n_total = sample.n_total();
    let t = obs.hyp.projection();

    let replicates: Vec<(f64, bool)> = (0..n_perm)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b as u64);
            let mut permuted = pool.clone();
            permuted.shuffle(&mut rng);
            permuted_statistic(&permuted, &sizes, &spec.probs, &obs.evaluator, t, n_total)
        })
        .collect::<Result<_>>()?;

    let mut stats: Vec<f64> = replicates.iter().map(|r| r.0).collect();
    let n_degenerate = replicates.iter().filter(|r| r.1).count();
    let exceed = stats.iter().filter(|&&s| s >= obs.eval.statistic).count();
    let p_permutation = (1.0 + exceed as f64) / (n_perm as f64 + 1.0);
    let crit_permutation = permutation_critical_value(&mut stats, alpha.complement());

    let df = obs.hyp.rank();
    let statistic = obs.eval.statistic;
    let mut warnings = obs.warnings;
    if n_degenerate > 0 {
        warnings.push(format!(
            "{n_degenerate} permutation replicate(s) had a numerically zero covariance; \
             their statistics were set to +inf (conservative)"
        ));
    }
    Ok(TestOutcome {
        statistic,
        df,
        p_asymptotic: 1.0 - chisq_cdf(statistic, df as u32)?,
        crit_asymptotic: chisq_quantile(alpha.complement(), df as u32)?,
        p_permutation: Some(p_permutation),
        crit_permutation: Some(crit_permutation),
        n_perm: Some(n_perm),
        seed: Some(seed),
        warnings,
    })
}

/// Upper bound on the number of assignments [`permutation_test_exhaustive`]
/// will enumerate.
pub const MAX_EXHAUSTIVE_ASSIGNMENTS: usize = 2_000_000;

fn count_assignments(sizes: &[usize]) -> Option<usize> {
    // n! / prod(n_i!) evaluated as a product of binomials
    let mut total: usize = 1;
    let mut remaining: usize = sizes.iter().sum();
    for &sz in sizes {
        // C(remaining, sz)
        let mut c: u128 = 1;
        for i in 0..sz {
            c = c.checked_mul((remaining - i) as u128)?;
            c /= (i + 1) as u128;
            if c > MAX_EXHAUSTIVE_ASSIGNMENTS as u128 {
                return None;
            }
        }
        total = total.checked_mul(c as usize)?;
        if total > MAX_EXHAUSTIVE_ASSIGNMENTS {
            return None;
        }
        remaining -= sz;
    }
    Some(total)
}

fn for_each_assignment(pool: &[f64], sizes: &[usize], visit: &mut impl FnMut(&[f64])) {
    // depth-first choice of index subsets per group, in lexicographic order
    fn recurse(
        pool: &[f64],
        sizes: &[usize],
        group: usize,
        available: &mut [usize],
        assigned: &mut Vec<f64>,
        visit: &mut impl FnMut(&[f64]),
    ) {
        if group == sizes.len() {
            visit(assigned);
            return;
        }
        let sz = sizes[group];
        let n_avail = available.len();
        let mut combo: Vec<usize> = (0..sz).collect();
        loop {
            let taken: Vec<usize> = combo.iter().map(|&i| available[i]).collect();
            for &idx in &taken {
                assigned.push(pool[idx]);
            }
            let mut rest: Vec<usize> = Vec::with_capacity(n_avail - sz);
            let mut it = combo.iter().peekable();
            for (i, &v) in available.iter().enumerate() {
                if it.peek() == Some(&&i) {
                    it.next();
                } else {
                    rest.push(v);
                }
            }
            recurse(pool, sizes, group + 1, &mut rest, assigned, visit);
            assigned.truncate(assigned.len() - sz);

            // next combination of sz out of n_avail
            let mut i = sz;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if combo[i] != i + n_avail - sz {
                    break;
                }
            }
            combo[i] += 1;
            for j in i + 1..sz {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    let mut available: Vec<usize> = (0..pool.len()).collect();
    let mut assigned = Vec::with_capacity(pool.len());
    recurse(pool, sizes, 0, &mut available, &mut assigned, visit);
}

/// Permutation test over the complete set of group assignments instead of
/// random draws; the p-value is the exact conditional tail probability
/// #{S_pi >= S_obs} / #assignments, which makes the test finitely exact
/// under exchangeability.
pub fn permutation_test_exhaustive(
    sample: &GroupedSample,
    spec: &HypothesisSpec,
    kind: EstimatorKind,
    alpha: Probability,
) -> Result<TestOutcome> {
    let sizes = sample.sizes();
    let total = count_assignments(&sizes).ok_or_else(|| {
        Error::domain(format!(
            "exhaustive enumeration capped at {MAX_EXHAUSTIVE_ASSIGNMENTS} assignments"
        ))
    })?;
    let obs = observed_statistic(sample, spec, kind, alpha)?;
    let pool = sample.pooled();
    let n_total = sample.n_total();
    let t = obs.hyp.projection();

    let mut stats = Vec::with_capacity(total);
    let mut n_degenerate = 0usize;
    let mut first_err: Option<Error> = None;
    for_each_assignment(&pool, &sizes, &mut |assigned| {
        if first_err.is_some() {
            return;
        }
        match permuted_statistic(assigned, &sizes, &spec.probs, &obs.evaluator, t, n_total) {
            Ok((s, degenerate)) => {
                stats.push(s);
                n_degenerate += usize::from(degenerate);
            }
            Err(e) => first_err = Some(e),
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    debug_assert_eq!(stats.len(), total);

    let exceed = stats.iter().filter(|&&s| s >= obs.eval.statistic).count();
    let p_permutation = exceed as f64 / total as f64;
    let crit_permutation = permutation_critical_value(&mut stats, alpha.complement());

    let df = obs.hyp.rank();
    let statistic = obs.eval.statistic;
    let mut warnings = obs.warnings;
    if n_degenerate > 0 {
        warnings.push(format!(
            "{n_degenerate} enumerated assignment(s) had a numerically zero covariance; \
             their statistics were set to +inf (conservative)"
        ));
    }
    Ok(TestOutcome {
        statistic,
        df,
        p_asymptotic: 1.0 - chisq_cdf(statistic, df as u32)?,
        crit_asymptotic: chisq_quantile(alpha.complement(), df as u32)?,
        p_permutation: Some(p_permutation),
        crit_permutation: Some(crit_permutation),
        n_perm: Some(total),
        seed: None,
        warnings,
    })
}

/// Confidence-interval calibration.
#[derive(Debug, Clone, Copy)]
pub enum CiMethod {
    /// Normal-quantile interval.
    Z,
    /// Permutation interval; `symmetrize` replaces the signed studentized
    /// statistic by its absolute value before taking the upper quantile.
    Permutation {
        n_perm: usize,
        seed: u64,
        symmetrize: bool,
    },
}

/// Two-sample confidence interval for a quantile difference.
#[derive(Debug, Clone, Serialize)]
pub struct CiOutcome {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: &'static str,
    pub level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_perm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

/// Confidence interval for theta = q_2(p) - q_1(p), the difference of the
/// p-quantiles of two groups.
///
/// The permutation variant pools and permutes only these two groups and uses
/// the upper (1 - alpha/2)-quantile of the signed studentized statistic
/// sqrt(n) (q2_pi - q1_pi) / sqrt(s1_pi^2 + s2_pi^2), applied symmetrically
/// around the estimate.
pub fn two_sample_ci(
    g1: &SampleVector,
    g2: &SampleVector,
    p: Probability,
    kind: EstimatorKind,
    alpha: Probability,
    method: CiMethod,
) -> Result<CiOutcome> {
    let n1 = g1.len();
    let n2 = g2.len();
    let n_total = n1 + n2;
    let probs = [p];
    let evaluator = CovEvaluator::new(&[n1, n2], &probs, kind, alpha);
    let mut warnings = evaluator.static_warnings();

    let s1 = g1.sorted();
    let s2 = g2.sorted();
    let q1 = quantile_from_sorted(&s1, p);
    let q2 = quantile_from_sorted(&s2, p);
    let var1 = evaluator.block(0, &s1)?.get(0, 0);
    let var2 = evaluator.block(1, &s2)?.get(0, 0);
    if var1 + var2 <= 0.0 {
        return Err(Error::numeric(
            "both variance estimates are zero; interval undefined",
        ));
    }
    let estimate = q2 - q1;
    let spread = ((var1 + var2) / n_total as f64).sqrt();
    let level = 1.0 - alpha.value();
    let upper_level = Probability::new(1.0 - alpha.value() / 2.0)?;

    match method {
        CiMethod::Z => {
            let z = std_normal_quantile(upper_level);
            Ok(CiOutcome {
                estimate,
                lower: estimate - z * spread,
                upper: estimate + z * spread,
                method: "z",
                level,
                n_perm: None,
                seed: None,
                warnings,
            })
        }
        CiMethod::Permutation {
            n_perm,
            seed,
            symmetrize,
        } => {
            if n_perm == 0 {
                return Err(Error::domain("n_perm must be at least 1"));
            }
            let mut pool = Vec::with_capacity(n_total);
            pool.extend_from_slice(g1.values());
            pool.extend_from_slice(g2.values());
            let replicates: Vec<(f64, bool)> = (0..n_perm)
                .into_par_iter()
                .map(|b| -> Result<(f64, bool)> {
                    let mut rng = replicate_rng(seed, b as u64);
                    let mut permuted = pool.clone();
                    permuted.shuffle(&mut rng);
                    let mut p1 = permuted[..n1].to_vec();
                    let mut p2 = permuted[n1..].to_vec();
                    p1.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    p2.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let v1 = evaluator.block(0, &p1)?.get(0, 0);
                    let v2 = evaluator.block(1, &p2)?.get(0, 0);
                    if v1 + v2 <= 0.0 {
                        return Ok((f64::INFINITY, true));
                    }
                    let diff = quantile_from_sorted(&p2, p) - quantile_from_sorted(&p1, p);
                    let stat = (n_total as f64).sqrt() * diff / (v1 + v2).sqrt();
                    Ok((if symmetrize { stat.abs() } else { stat }, false))
                })
                .collect::<Result<_>>()?;
            let mut stats: Vec<f64> = replicates.iter().map(|r| r.0).collect();
            let n_degenerate = replicates.iter().filter(|r| r.1).count();
            if n_degenerate > 0 {
                warnings.push(format!(
                    "{n_degenerate} permutation replicate(s) had zero variance; \
                     treated as +inf"
                ));
            }
            let c = permutation_critical_value(&mut stats, upper_level);
            let half = c * spread;
            let (lower, upper) = if half >= 0.0 {
                (estimate - half, estimate + half)
            } else {
                (estimate + half, estimate - half)
            };
            Ok(CiOutcome {
                estimate,
                lower,
                upper,
                method: "permutation",
                level,
                n_perm: Some(n_perm),
                seed: Some(seed),
                warnings,
            })
        }
    }
}

/// Asymptotic power of the level-alpha test against a local alternative
/// drifting at rate 1/sqrt(n): the tail of a noncentral chi-square with
/// noncentrality theta' (T Sigma T')+ theta.
pub fn asymptotic_power(
    theta: &[f64],
    sigma: &Matrix,
    hyp: &HypothesisMatrices,
    alpha: Probability,
) -> Result<f64> {
    let dim = hyp.dim();
    if theta.len() != dim {
        return Err(Error::dimension(format!(
            "theta has length {}, hypothesis expects {dim}",
            theta.len()
        )));
    }
    if sigma.rows() != dim || sigma.cols() != dim {
        return Err(Error::dimension(format!(
            "sigma is {}x{}, hypothesis expects {dim}x{dim}",
            sigma.rows(),
            sigma.cols()
        )));
    }
    if sigma.numerical_rank()? != dim {
        return Err(Error::domain("sigma must be positive definite"));
    }
    let t = hyp.projection();
    let mid = t.matmul(sigma).matmul(&t.transpose());
    let inv = mid.pinv()?;
    let tmp = inv.mul_vec(theta);
    let delta: f64 = theta
        .iter()
        .zip(&tmp)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .max(0.0);
    let df = hyp.rank() as u32;
    let crit = chisq_quantile(alpha.complement(), df)?;
    Ok(1.0 - noncentral_chisq_cdf(crit, df, delta)?)
}
