//! Covariance-matrix estimation for vectors of sample quantiles.
//!
//! Three strategies estimate the per-group m x m asymptotic covariance of
//! sqrt(n) times the quantile estimates:
//!
//! * `Kernel` plugs a Gaussian kernel density estimate into the closed-form
//!   covariance, with Silverman's rule-of-thumb bandwidth;
//! * `Bootstrap` uses the closed-form mean squared error of the resampled
//!   quantile (no actual resampling), scaled onto the off-diagonal through
//!   the universal quantile correlation;
//! * `IntervalPb` uses the extended McKean-Schrader / Price-Bonett interval
//!   estimator with its finite-sample level correction.
//!
//! Every block carries the n/n_i factor, so the direct sum of the blocks is
//! exactly the matrix the Wald statistic sandwiches.

use crate::error::{Error, Result};
use crate::linalg::{direct_sum, Matrix};
use crate::prob::{validate_probs, Probability};
use crate::quantiles::{
    order_statistic_index, quantile_from_sorted, SampleVector,
};
use crate::specfun::{binom_cdf, binom_pmf_sum, std_normal_pdf, std_normal_quantile};
use serde::{Deserialize, Serialize};

/// Covariance estimation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Kernel,
    Bootstrap,
    #[serde(rename = "interval")]
    IntervalPb,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Kernel,
        EstimatorKind::Bootstrap,
        EstimatorKind::IntervalPb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Kernel => "kernel",
            EstimatorKind::Bootstrap => "bootstrap",
            EstimatorKind::IntervalPb => "interval",
        }
    }
}

/// Correlation of the limiting quantile process between levels a and b:
/// (min(a,b) - a*b) / sqrt(a(1-a) b(1-b)).
fn quantile_correlation(pa: f64, pb: f64) -> f64 {
    (pa.min(pb) - pa * pb) / ((pa - pa * pa) * (pb - pb * pb)).sqrt()
}

// ---------------------------------------------------------------------------
// kernel estimator
// ---------------------------------------------------------------------------

/// Silverman's rule-of-thumb bandwidth from precomputed sample statistics.
///
/// Fallback chain for a degenerate spread estimate: sd, then |mean|, then 1.
pub(crate) fn silverman_from_stats(sd: f64, iqr: f64, mean: f64, n: usize) -> f64 {
    let mut spread = sd.min(iqr / 1.34);
    if spread == 0.0 {
        spread = if sd > 0.0 {
            sd
        } else if mean.abs() > 0.0 {
            mean.abs()
        } else {
            1.0
        };
    }
    0.9 * spread * (n as f64).powf(-0.2)
}

pub(crate) fn silverman_bandwidth_sorted(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    if n < 2 {
        return Err(Error::domain("bandwidth selection requires n >= 2"));
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let ss: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    let iqr = quantile_from_sorted(sorted, Probability::new(0.75).unwrap())
        - quantile_from_sorted(sorted, Probability::new(0.25).unwrap());
    Ok(silverman_from_stats(sd, iqr, mean, n))
}

/// Gaussian rule-of-thumb bandwidth h = 0.9 min(sd, iqr/1.34) n^(-1/5).
pub fn silverman_bandwidth(xs: &SampleVector) -> Result<f64> {
    silverman_bandwidth_sorted(&xs.sorted())
}

pub(crate) fn kde_at(data: &[f64], x: f64, h: f64) -> f64 {
    let sum: f64 = data.iter().map(|&xj| std_normal_pdf((x - xj) / h)).sum();
    sum / (data.len() as f64 * h)
}

/// Gaussian kernel density estimate at `x` with bandwidth `h`.
pub fn kernel_density_at(xs: &SampleVector, x: f64, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 || !h.is_finite() {
        return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
    }
    Ok(kde_at(xs.values(), x, h))
}

pub(crate) fn sigma_kernel_sorted(
    sorted: &[f64],
    probs: &[Probability],
    n_total: usize,
) -> Result<Matrix> {
    let n_i = sorted.len();
    let h = silverman_bandwidth_sorted(sorted)?;
    let m = probs.len();
    let mut density = Vec::with_capacity(m);
    for &p in probs {
        let q = quantile_from_sorted(sorted, p);
        let f = kde_at(sorted, q, h);
        if f.is_nan() || f <= 0.0 || !f.is_finite() {
            return Err(Error::numeric(format!(
                "kernel density estimate degenerate ({f}) at quantile {q}"
            )));
        }
        density.push(f);
    }
    let scale = n_total as f64 / n_i as f64;
    let mut out = Matrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let pa = probs[a].value();
            let pb = probs[b].value();
            let v = scale * (pa.min(pb) - pa * pb) / (density[a] * density[b]);
            out.set(a, b, v);
            out.set(b, a, v);
        }
    }
    Ok(out)
}

/// Kernel plug-in covariance block for one group: entry (a,b) equals
/// (n/n_i)(p_a ^ p_b - p_a p_b) / (f(q_a) f(q_b)).
pub fn sigma_kernel(
    xs: &SampleVector,
    probs: &[Probability],
    n_total: usize,
) -> Result<Matrix> {
    validate_probs(probs)?;
    sigma_kernel_sorted(&xs.sorted(), probs, n_total)
}

// ---------------------------------------------------------------------------
// bootstrap estimator
// ---------------------------------------------------------------------------

/// Probability that the bootstrapped p-quantile equals the j-th order
/// statistic, for j = 1..n (returned 0-indexed).
///
/// P_j = P(B(n, (j-1)/n) <= c) - P(B(n, j/n) <= c) with c = ceil(n p) - 1;
/// the terms telescope, so the weights always sum to one.
pub fn bootstrap_weights(n: usize, p: Probability) -> Vec<f64> {
    let c = order_statistic_index(n, p) as i64 - 1;
    let nf = n as f64;
    let mut upper = 1.0; // P(B(n, 0) <= c)
    let mut weights = Vec::with_capacity(n);
    for j in 1..=n {
        let lower = binom_cdf(c, n as u64, j as f64 / nf)
            .expect("binomial argument in [0,1] by construction");
        weights.push((upper - lower).max(0.0));
        upper = lower;
    }
    weights
}

pub(crate) fn bootstrap_sd_sorted(sorted: &[f64], p: Probability, weights: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert_eq!(weights.len(), n);
    let qhat = quantile_from_sorted(sorted, p);
    let mse: f64 = sorted
        .iter()
        .zip(weights)
        .map(|(&x, &w)| (x - qhat).powi(2) * w)
        .sum();
    (n as f64 * mse).sqrt()
}

/// Closed-form bootstrap standard deviation of the scaled sample quantile:
/// the square root of E(n (q* - q)^2 | X).
pub fn bootstrap_sd(xs: &SampleVector, p: Probability) -> f64 {
    let sorted = xs.sorted();
    let weights = bootstrap_weights(sorted.len(), p);
    bootstrap_sd_sorted(&sorted, p, &weights)
}

fn scale_matrix_from_sds(
    sds: &[f64],
    probs: &[Probability],
    n_total: usize,
    n_i: usize,
) -> Matrix {
    let m = probs.len();
    let scale = n_total as f64 / n_i as f64;
    let mut out = Matrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let rho = quantile_correlation(probs[a].value(), probs[b].value());
            let v = scale * sds[a] * sds[b] * rho;
            out.set(a, b, v);
            out.set(b, a, v);
        }
    }
    out
}

pub(crate) fn sigma_bootstrap_sorted(
    sorted: &[f64],
    probs: &[Probability],
    n_total: usize,
    weights_per_prob: &[Vec<f64>],
) -> Matrix {
    let sds: Vec<f64> = probs
        .iter()
        .zip(weights_per_prob)
        .map(|(&p, w)| bootstrap_sd_sorted(sorted, p, w))
        .collect();
    scale_matrix_from_sds(&sds, probs, n_total, sorted.len())
}

/// Bootstrap covariance block: diagonal from [`bootstrap_sd`], off-diagonal
/// through the universal quantile correlation.
pub fn sigma_bootstrap(
    xs: &SampleVector,
    probs: &[Probability],
    n_total: usize,
) -> Result<Matrix> {
    validate_probs(probs)?;
    let sorted = xs.sorted();
    let weights: Vec<Vec<f64>> = probs
        .iter()
        .map(|&p| bootstrap_weights(sorted.len(), p))
        .collect();
    Ok(sigma_bootstrap_sorted(&sorted, probs, n_total, &weights))
}

// ---------------------------------------------------------------------------
// interval-based (McKean-Schrader / Price-Bonett) estimator
// ---------------------------------------------------------------------------

/// Order-statistic limits of the binomial interval around the p-quantile:
/// l = 1 v floor(np - z sqrt(n p(1-p))), u = n ^ floor(np + z sqrt(n p(1-p))).
pub fn pb_interval_limits(n: usize, p: Probability, alpha: Probability) -> (usize, usize) {
    let z = std_normal_quantile(
        Probability::new(1.0 - alpha.value() / 2.0).expect("1 - alpha/2 inside (0,1)"),
    );
    let nf = n as f64;
    let pv = p.value();
    let half_width = z * (nf * pv * (1.0 - pv)).sqrt();
    let l = ((nf * pv - half_width).floor().max(1.0) as usize).min(n);
    let u = ((nf * pv + half_width).floor().min(nf) as usize).max(l);
    (l, u)
}

/// Finite-sample level correction for the interval estimator:
/// 1 minus the binomial mass strictly inside (l, u).
///
/// Returns `alpha` unchanged for group sizes above 100, and falls back to
/// `alpha` when the summation range is empty (the correction would
/// degenerate to 1 and the normal quantile to 0).
pub fn pb_alpha_star(
    n: usize,
    p: Probability,
    alpha: Probability,
    l: usize,
    u: usize,
) -> Probability {
    if n > 100 || l + 1 > u.saturating_sub(1) {
        return alpha;
    }
    let inside = binom_pmf_sum((l + 1) as i64, (u - 1) as i64, n as u64, p.value())
        .expect("summation arguments validated");
    Probability::new((1.0 - inside).clamp(1e-15, 1.0 - 1e-15))
        .expect("clamped into the open interval")
}

/// Data-independent pieces of the interval estimator for one (n, p, alpha).
#[derive(Debug, Clone)]
pub(crate) struct PbParams {
    pub l: usize,
    pub u: usize,
    pub denom: f64,
    pub fallback: bool,
}

pub(crate) fn pb_params(n: usize, p: Probability, alpha: Probability) -> PbParams {
    let (l, u) = pb_interval_limits(n, p, alpha);
    let fallback = n <= 100 && l + 1 > u.saturating_sub(1);
    let alpha_star = pb_alpha_star(n, p, alpha, l, u);
    let z = std_normal_quantile(
        Probability::new(1.0 - alpha_star.value() / 2.0).expect("inside (0,1)"),
    );
    let denom = 2.0 * z + 2.0 / (n as f64).sqrt();
    PbParams {
        l,
        u,
        denom,
        fallback,
    }
}

pub(crate) fn pb_sd_sorted(sorted: &[f64], params: &PbParams) -> f64 {
    let n = sorted.len() as f64;
    n.sqrt() * (sorted[params.u - 1] - sorted[params.l - 1]) / params.denom
}

/// Extended McKean-Schrader / Price-Bonett standard deviation of the scaled
/// p-quantile: sqrt(n) (X_(u) - X_(l)) / (2 z_{alpha*/2} + 2 n^{-1/2}).
pub fn pb_sd(xs: &SampleVector, p: Probability, alpha: Probability) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::domain("interval estimator requires n >= 2"));
    }
    let sorted = xs.sorted();
    Ok(pb_sd_sorted(&sorted, &pb_params(n, p, alpha)))
}

pub(crate) fn sigma_pb_sorted(
    sorted: &[f64],
    probs: &[Probability],
    n_total: usize,
    params: &[PbParams],
) -> Matrix {
    let sds: Vec<f64> = params.iter().map(|pp| pb_sd_sorted(sorted, pp)).collect();
    scale_matrix_from_sds(&sds, probs, n_total, sorted.len())
}

/// Interval-based covariance block, same correlation template as the
/// bootstrap block with [`pb_sd`] supplying the scale.
pub fn sigma_pb(
    xs: &SampleVector,
    probs: &[Probability],
    alpha: Probability,
    n_total: usize,
) -> Result<Matrix> {
    validate_probs(probs)?;
    if xs.len() < 2 {
        return Err(Error::domain("interval estimator requires n >= 2"));
    }
    let sorted = xs.sorted();
    let params: Vec<PbParams> = probs
        .iter()
        .map(|&p| pb_params(sorted.len(), p, alpha))
        .collect();
    Ok(sigma_pb_sorted(&sorted, probs, n_total, &params))
}

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

/// Per-group covariance blocks, each already carrying its n/n_i factor.
#[derive(Debug, Clone)]
pub struct CovarianceBlocks {
    blocks: Vec<Matrix>,
    n_total: usize,
    group_sizes: Vec<usize>,
    warnings: Vec<String>,
}

impl CovarianceBlocks {
    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn block(&self, group: usize) -> &Matrix {
        &self.blocks[group]
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Block-diagonal view used by the Wald statistic.
    pub fn direct_sum(&self) -> Matrix {
        direct_sum(&self.blocks).expect("covariance blocks are square by construction")
    }

    pub(crate) fn from_parts(
        blocks: Vec<Matrix>,
        n_total: usize,
        group_sizes: Vec<usize>,
        warnings: Vec<String>,
    ) -> Self {
        CovarianceBlocks {
            blocks,
            n_total,
            group_sizes,
            warnings,
        }
    }
}

/// Estimates all per-group blocks with the selected strategy.
pub fn assemble_covariance(
    groups: &[SampleVector],
    probs: &[Probability],
    kind: EstimatorKind,
    alpha: Probability,
) -> Result<CovarianceBlocks> {
    validate_probs(probs)?;
    if groups.is_empty() {
        return Err(Error::domain("at least one group required"));
    }
    let group_sizes: Vec<usize> = groups.iter().map(SampleVector::len).collect();
    let n_total: usize = group_sizes.iter().sum();
    let mut blocks = Vec::with_capacity(groups.len());
    let mut warnings = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let sorted = g.sorted();
        let attach = |e: Error| match e {
            Error::Domain(m) => Error::Domain(format!("group {}: {m}", i + 1)),
            Error::Numeric(m) => Error::Numeric(format!("group {}: {m}", i + 1)),
            other => other,
        };
        let block = match kind {
            EstimatorKind::Kernel => {
                sigma_kernel_sorted(&sorted, probs, n_total).map_err(attach)?
            }
            EstimatorKind::Bootstrap => {
                let weights: Vec<Vec<f64>> = probs
                    .iter()
                    .map(|&p| bootstrap_weights(sorted.len(), p))
                    .collect();
                sigma_bootstrap_sorted(&sorted, probs, n_total, &weights)
            }
            EstimatorKind::IntervalPb => {
                if sorted.len() < 2 {
                    return Err(attach(Error::domain(
                        "interval estimator requires n >= 2",
                    )));
                }
                let params: Vec<PbParams> = probs
                    .iter()
                    .map(|&p| pb_params(sorted.len(), p, alpha))
                    .collect();
                for (pp, &p) in params.iter().zip(probs) {
                    if pp.fallback {
                        warnings.push(format!(
                            "group {}: finite-sample correction degenerate at p={} \
                             (l={}, u={}), using alpha",
                            i + 1,
                            p.value(),
                            pp.l,
                            pp.u
                        ));
                    }
                }
                sigma_pb_sorted(&sorted, probs, n_total, &params)
            }
        };
        blocks.push(block);
    }
    Ok(CovarianceBlocks::from_parts(
        blocks,
        n_total,
        group_sizes,
        warnings,
    ))
}
