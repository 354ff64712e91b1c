//! Monte-Carlo harness for size and power studies of the quantile tests.
//!
//! A scenario cell fixes a data-generating process X_ij = mu_i + sigma_i
//! (eps_ij - m_i), where m_i is the median of the error distribution, plus a
//! hypothesis and the estimator/method grid. The runner reports rejection
//! rates with binomial standard errors. Replicates are partitioned across
//! workers by index, so reported numbers do not depend on the thread count.

use crate::contrasts::{build_hypothesis, Design, Effect, HypothesisSpec};
use crate::engine::{
    asymptotic_test, permutation_test, GroupedSample, TestMethod,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::prob::Probability;
use crate::quantiles::SampleVector;
use crate::rng::{derive_seed, replicate_rng, standard_normal};
use crate::specfun::chisq_quantile;
use crate::variance::EstimatorKind;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Error distribution of the simulated observations before centering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorDistribution {
    Normal,
    StudentT { df: u32 },
    ChiSquared { df: u32 },
    LogNormal,
}

impl ErrorDistribution {
    /// Population median, used to center the errors.
    pub fn median(&self) -> Result<f64> {
        match *self {
            ErrorDistribution::Normal | ErrorDistribution::StudentT { .. } => Ok(0.0),
            ErrorDistribution::LogNormal => Ok(1.0),
            ErrorDistribution::ChiSquared { df } => {
                chisq_quantile(Probability::new(0.5)?, df)
            }
        }
    }

    /// One draw from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ErrorDistribution::Normal => standard_normal(rng),
            ErrorDistribution::StudentT { df } => {
                let z = standard_normal(rng);
                let mut v = 0.0;
                for _ in 0..df {
                    let w = standard_normal(rng);
                    v += w * w;
                }
                z / (v / f64::from(df)).sqrt()
            }
            ErrorDistribution::ChiSquared { df } => {
                let mut v = 0.0;
                for _ in 0..df {
                    let w = standard_normal(rng);
                    v += w * w;
                }
                v
            }
            ErrorDistribution::LogNormal => standard_normal(rng).exp(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ErrorDistribution::Normal => "normal".to_string(),
            ErrorDistribution::StudentT { df } => format!("t{df}"),
            ErrorDistribution::ChiSquared { df } => format!("chisq{df}"),
            ErrorDistribution::LogNormal => "lognormal".to_string(),
        }
    }

    /// Parses the labels produced by [`ErrorDistribution::label`].
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(ErrorDistribution::Normal),
            "lognormal" => Ok(ErrorDistribution::LogNormal),
            _ => {
                if let Some(df) = s.strip_prefix("chisq") {
                    let df: u32 = df
                        .parse()
                        .map_err(|_| Error::domain(format!("unknown distribution '{s}'")))?;
                    return Ok(ErrorDistribution::ChiSquared { df });
                }
                if let Some(df) = s.strip_prefix('t') {
                    let df: u32 = df
                        .parse()
                        .map_err(|_| Error::domain(format!("unknown distribution '{s}'")))?;
                    return Ok(ErrorDistribution::StudentT { df });
                }
                Err(Error::domain(format!("unknown distribution '{s}'")))
            }
        }
    }
}

/// One Monte-Carlo cell: data-generating process, hypothesis and test grid.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub distribution: ErrorDistribution,
    pub sizes: Vec<usize>,
    pub scales: Vec<f64>,
    pub shifts: Vec<f64>,
    /// Alternative magnitude for reporting; 0 under the null.
    pub delta: f64,
    pub hypothesis: HypothesisSpec,
    pub estimators: Vec<EstimatorKind>,
    pub methods: Vec<TestMethod>,
    pub n_sim: usize,
    pub n_perm: usize,
    pub alpha: Probability,
    pub seed: u64,
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        let k = self.hypothesis.design.k();
        if self.sizes.len() != k || self.scales.len() != k || self.shifts.len() != k {
            return Err(Error::domain(format!(
                "sizes/scales/shifts must all have length {k}"
            )));
        }
        if self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::domain("every group needs at least 2 observations"));
        }
        if self.n_sim == 0 || self.n_perm == 0 {
            return Err(Error::domain("n_sim and n_perm must be at least 1"));
        }
        if self.estimators.is_empty() || self.methods.is_empty() {
            return Err(Error::domain("at least one estimator and method required"));
        }
        build_hypothesis(&self.hypothesis)?;
        Ok(())
    }
}

/// Rejection rate of one (estimator, method) combination in one cell.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub scenario: String,
    pub distribution: String,
    pub sizes: String,
    pub sigmas: String,
    pub delta: f64,
    pub estimator: &'static str,
    pub method: &'static str,
    pub rate: f64,
    pub se: f64,
    pub nsim: usize,
    pub nperm: usize,
    pub seed: u64,
}

/// Result of running one scenario cell.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub rows: Vec<RateRow>,
    pub elapsed_seconds: f64,
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("|")
}

fn join_f64(v: &[f64]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("|")
}

const DATASET_TAG: u64 = 0x01;
const PERMUTATION_TAG: u64 = 0x02;

/// Dataset for one simulation replicate: group i holds n_i draws of
/// mu_i + sigma_i (eps - m), deterministic in (seed, replicate).
pub fn generate_dataset(cfg: &ScenarioConfig, replicate: u64) -> Result<GroupedSample> {
    let center = cfg.distribution.median()?;
    let mut rng = replicate_rng(derive_seed(cfg.seed, DATASET_TAG), replicate);
    let mut data = Vec::with_capacity(cfg.sizes.len());
    for ((&n, &scale), &shift) in cfg.sizes.iter().zip(&cfg.scales).zip(&cfg.shifts) {
        let values: Vec<f64> = (0..n)
            .map(|_| shift + scale * (cfg.distribution.sample(&mut rng) - center))
            .collect();
        data.push(SampleVector::new(values)?);
    }
    GroupedSample::from_data(data)
}

/// Runs one scenario cell and reports rejection rates per estimator/method.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let start = Instant::now();
    let combos: Vec<(EstimatorKind, TestMethod)> = cfg
        .estimators
        .iter()
        .flat_map(|&e| cfg.methods.iter().map(move |&m| (e, m)))
        .collect();
    let needs_permutation = cfg.methods.contains(&TestMethod::Permutation);
    let alpha = cfg.alpha;

    let per_replicate: Vec<Vec<bool>> = (0..cfg.n_sim as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<bool>> {
            let dataset = generate_dataset(cfg, r)?;
            let perm_seed = derive_seed(derive_seed(cfg.seed, PERMUTATION_TAG), r);
            let mut rejected = Vec::with_capacity(combos.len());
            for &est in &cfg.estimators {
                // one covariance pass when permutations are requested: the
                // permutation outcome carries the asymptotic decision too
                let outcome = if needs_permutation {
                    permutation_test(
                        &dataset,
                        &cfg.hypothesis,
                        est,
                        alpha,
                        cfg.n_perm,
                        perm_seed,
                    )?
                } else {
                    asymptotic_test(&dataset, &cfg.hypothesis, est, alpha)?
                };
                for &m in &cfg.methods {
                    let reject = match m {
                        TestMethod::Asymptotic => outcome.statistic > outcome.crit_asymptotic,
                        TestMethod::Permutation => {
                            outcome.p_permutation.expect("permutation ran") <= alpha.value()
                        }
                    };
                    rejected.push(reject);
                }
            }
            Ok(rejected)
        })
        .collect::<Result<_>>()
        .map_err(|e| Error::Numeric(format!("scenario '{}': {e}", cfg.name)))?;

    let mut rows = Vec::with_capacity(combos.len());
    for (ci, &(est, method)) in combos.iter().enumerate() {
        let hits = per_replicate.iter().filter(|r| r[ci]).count();
        let rate = hits as f64 / cfg.n_sim as f64;
        let se = (rate * (1.0 - rate) / cfg.n_sim as f64).sqrt();
        rows.push(RateRow {
            scenario: cfg.name.clone(),
            distribution: cfg.distribution.label(),
            sizes: join_usize(&cfg.sizes),
            sigmas: join_f64(&cfg.scales),
            delta: cfg.delta,
            estimator: est.label(),
            method: match method {
                TestMethod::Asymptotic => "asymptotic",
                TestMethod::Permutation => "permutation",
            },
            rate,
            se,
            nsim: cfg.n_sim,
            nperm: cfg.n_perm,
            seed: cfg.seed,
        });
    }
    Ok(ScenarioReport {
        rows,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Renders rate rows as CSV with a fixed header; no timestamps, so reruns
/// with the same seed are byte-identical.
pub fn rates_to_csv(rows: &[RateRow]) -> String {
    let mut out = String::from(
        "scenario,distribution,sizes,sigmas,delta,estimator,method,rate,se,nsim,nperm,seed\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.distribution,
            r.sizes,
            r.sigmas,
            r.delta,
            r.estimator,
            r.method,
            r.rate,
            r.se,
            r.nsim,
            r.nperm,
            r.seed
        ));
    }
    out
}

/// Global knobs shared by all cells of a built-in scenario.
#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    pub n_sim: usize,
    pub n_perm: usize,
    pub alpha: Probability,
    pub seed: u64,
}

impl SimParams {
    /// Desk-scale defaults: 1000 simulation runs, 499 permutations.
    pub fn desk_scale(seed: u64) -> Self {
        SimParams {
            n_sim: 1000,
            n_perm: 499,
            alpha: Probability::new(0.05).unwrap(),
            seed,
        }
    }

    /// The full-scale settings used for the reference tables:
    /// 5000 runs and 1999 permutations.
    pub fn full_scale(seed: u64) -> Self {
        SimParams {
            n_sim: 5000,
            n_perm: 1999,
            alpha: Probability::new(0.05).unwrap(),
            seed,
        }
    }
}

/// Names accepted by [`builtin_scenario`].
pub fn builtin_scenario_names() -> &'static [&'static str] {
    &[
        "table1",
        "table2",
        "table3-power",
        "table5-interaction",
        "table6-threequantile",
        "iqr-increasing-n",
    ]
}

const N1: [usize; 4] = [15, 15, 15, 15];
const N2: [usize; 4] = [10, 10, 20, 20];
const SIGMA1: [f64; 4] = [1.0, 1.0, 1.0, 1.0];
const SIGMA2: [f64; 4] = [1.0, 1.25, 1.5, 1.75];
const SIGMA3: [f64; 4] = [1.75, 1.5, 1.25, 1.0];

fn median_main_effect() -> Result<HypothesisSpec> {
    HypothesisSpec::new(
        Design::TwoWay { a: 2, b: 2 },
        Effect::MainA,
        vec![Probability::new(0.5)?],
        vec![1.0],
    )
}

fn median_interaction() -> Result<HypothesisSpec> {
    HypothesisSpec::new(
        Design::TwoWay { a: 2, b: 2 },
        Effect::Interaction,
        vec![Probability::new(0.5)?],
        vec![1.0],
    )
}

/// Simultaneous test of the factor-A main effect in the 25%, 50% and 75%
/// quantiles of a 2x2 design: H = H_A kron I_3.
fn three_quantile_main_effect() -> Result<HypothesisSpec> {
    let base = build_hypothesis(&median_main_effect()?)?.contrast().clone();
    let lifted = base.kron(&Matrix::identity(3));
    HypothesisSpec::new(
        Design::TwoWay { a: 2, b: 2 },
        Effect::Custom(lifted),
        vec![
            Probability::new(0.25)?,
            Probability::new(0.5)?,
            Probability::new(0.75)?,
        ],
        vec![],
    )
}

struct CellBuilder {
    params: SimParams,
    cells: Vec<ScenarioConfig>,
}

impl CellBuilder {
    fn new(params: SimParams) -> Self {
        CellBuilder {
            params,
            cells: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        distribution: ErrorDistribution,
        sizes: &[usize],
        scales: &[f64],
        shifts: &[f64],
        delta: f64,
        hypothesis: HypothesisSpec,
        methods: Vec<TestMethod>,
    ) {
        let index = self.cells.len() as u64;
        self.cells.push(ScenarioConfig {
            name: name.to_string(),
            distribution,
            sizes: sizes.to_vec(),
            scales: scales.to_vec(),
            shifts: shifts.to_vec(),
            delta,
            hypothesis,
            estimators: EstimatorKind::ALL.to_vec(),
            methods,
            n_sim: self.params.n_sim,
            n_perm: self.params.n_perm,
            alpha: self.params.alpha,
            seed: derive_seed(self.params.seed, 0x1000 + index),
        });
    }
}

/// Builds the cell list of a named built-in scenario.
pub fn builtin_scenario(name: &str, params: SimParams) -> Result<Vec<ScenarioConfig>> {
    let both = vec![TestMethod::Asymptotic, TestMethod::Permutation];
    let mut b = CellBuilder::new(params);
    match name {
        // 2x2 median main-effect null across distributions and pairings
        "table1" | "table5-interaction" => {
            let hyp = if name == "table1" {
                median_main_effect()?
            } else {
                median_interaction()?
            };
            let dists = [
                ErrorDistribution::Normal,
                ErrorDistribution::StudentT { df: 3 },
                ErrorDistribution::LogNormal,
                ErrorDistribution::ChiSquared { df: 3 },
            ];
            let settings: [(&[usize], &[f64]); 5] = [
                (&N1, &SIGMA1),
                (&N1, &SIGMA2),
                (&N2, &SIGMA1),
                (&N2, &SIGMA2),
                (&N2, &SIGMA3),
            ];
            for dist in dists {
                for (sizes, scales) in settings {
                    b.push(
                        name,
                        dist,
                        sizes,
                        scales,
                        &[0.0; 4],
                        0.0,
                        hyp.clone(),
                        both.clone(),
                    );
                }
            }
        }
        // 4-sample equal-IQR null, homoscedastic only
        "table2" => {
            let hyp = HypothesisSpec::oneway_iqr(4)?;
            let dists = [
                ErrorDistribution::Normal,
                ErrorDistribution::StudentT { df: 2 },
                ErrorDistribution::StudentT { df: 3 },
                ErrorDistribution::LogNormal,
                ErrorDistribution::ChiSquared { df: 3 },
            ];
            for dist in dists {
                for sizes in [&N1, &N2] {
                    b.push(
                        name,
                        dist,
                        sizes,
                        &SIGMA1,
                        &[0.0; 4],
                        0.0,
                        hyp.clone(),
                        both.clone(),
                    );
                }
            }
        }
        // shift alternatives mu = (0,0,0,delta) for the median main effect
        "table3-power" => {
            let hyp = median_main_effect()?;
            let dists = [
                ErrorDistribution::Normal,
                ErrorDistribution::StudentT { df: 2 },
                ErrorDistribution::StudentT { df: 3 },
                ErrorDistribution::LogNormal,
            ];
            for dist in dists {
                for step in 0..7u32 {
                    let delta = f64::from(3 * step) / 10.0;
                    b.push(
                        name,
                        dist,
                        &N2,
                        &SIGMA1,
                        &[0.0, 0.0, 0.0, delta],
                        delta,
                        hyp.clone(),
                        both.clone(),
                    );
                }
            }
        }
        // simultaneous three-quantile main effect at the data-analysis sizes
        "table6-threequantile" => {
            let hyp = three_quantile_main_effect()?;
            let dists = [
                ErrorDistribution::Normal,
                ErrorDistribution::LogNormal,
                ErrorDistribution::StudentT { df: 3 },
                ErrorDistribution::ChiSquared { df: 3 },
            ];
            for dist in dists {
                b.push(
                    name,
                    dist,
                    &[8, 13, 12, 11],
                    &SIGMA1,
                    &[0.0; 4],
                    0.0,
                    hyp.clone(),
                    both.clone(),
                );
            }
        }
        // asymptotic-test size for growing balanced samples (IQR null)
        "iqr-increasing-n" => {
            let hyp = HypothesisSpec::oneway_iqr(4)?;
            for dist in [ErrorDistribution::Normal, ErrorDistribution::LogNormal] {
                for n1 in [15usize, 25, 50, 100, 150, 200] {
                    b.push(
                        name,
                        dist,
                        &[n1; 4],
                        &SIGMA1,
                        &[0.0; 4],
                        0.0,
                        hyp.clone(),
                        vec![TestMethod::Asymptotic],
                    );
                }
            }
        }
        other => {
            return Err(Error::domain(format!(
                "unknown scenario '{other}'; available: {}",
                builtin_scenario_names().join(", ")
            )))
        }
    }
    Ok(b.cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn normal_mean_sanity() {
        let mut rng = replicate_rng(5, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| ErrorDistribution::Normal.sample(&mut rng))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn lognormal_median_is_one() {
        let mut rng = replicate_rng(6, 0);
        let n = 1_000_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| ErrorDistribution::LogNormal.sample(&mut rng))
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = draws[n / 2];
        assert!((med - 1.0).abs() < 0.01, "median {med}");
        assert_eq!(ErrorDistribution::LogNormal.median().unwrap(), 1.0);
    }

    #[test]
    fn chisq3_median_reference() {
        let med = ErrorDistribution::ChiSquared { df: 3 }.median().unwrap();
        assert!((med - 2.36597).abs() < 1e-4, "median {med}");
    }

    #[test]
    fn distribution_labels_round_trip() {
        let all = [
            ErrorDistribution::Normal,
            ErrorDistribution::StudentT { df: 2 },
            ErrorDistribution::StudentT { df: 3 },
            ErrorDistribution::ChiSquared { df: 3 },
            ErrorDistribution::LogNormal,
        ];
        for d in all {
            assert_eq!(ErrorDistribution::parse(&d.label()).unwrap(), d);
        }
        assert!(ErrorDistribution::parse("cauchy").is_err());
    }

    fn null_config(n_sim: usize, n_perm: usize) -> ScenarioConfig {
        ScenarioConfig {
            name: "smoke".to_string(),
            distribution: ErrorDistribution::Normal,
            sizes: vec![10, 10],
            scales: vec![1.0, 1.0],
            shifts: vec![0.0, 0.0],
            delta: 0.0,
            hypothesis: HypothesisSpec::oneway_median(2).unwrap(),
            estimators: vec![EstimatorKind::Bootstrap],
            methods: vec![TestMethod::Asymptotic, TestMethod::Permutation],
            n_sim,
            n_perm,
            alpha: prob(0.05),
            seed: 99,
        }
    }

    #[test]
    fn datasets_are_deterministic_and_centered() {
        let cfg = null_config(10, 9);
        let a = generate_dataset(&cfg, 3).unwrap();
        let b = generate_dataset(&cfg, 3).unwrap();
        let c = generate_dataset(&cfg, 4).unwrap();
        assert_eq!(a.groups()[0].data.values(), b.groups()[0].data.values());
        assert_ne!(a.groups()[0].data.values(), c.groups()[0].data.values());

        // group medians approximate the configured shifts
        for dist in [
            ErrorDistribution::Normal,
            ErrorDistribution::StudentT { df: 2 },
            ErrorDistribution::StudentT { df: 3 },
            ErrorDistribution::ChiSquared { df: 3 },
            ErrorDistribution::LogNormal,
        ] {
            let mut cfg = null_config(1, 1);
            cfg.distribution = dist;
            cfg.sizes = vec![100_000, 2];
            cfg.scales = vec![1.5, 1.0];
            cfg.shifts = vec![-0.7, 0.0];
            let data = generate_dataset(&cfg, 0).unwrap();
            let med = crate::quantiles::sample_quantile(
                &data.groups()[0].data,
                prob(0.5),
            );
            assert!(
                (med + 0.7).abs() < 0.02,
                "{}: median {med}",
                dist.label()
            );
        }
    }

    #[test]
    fn null_rejection_rate_near_alpha_and_thread_invariant() {
        let cfg = null_config(200, 99);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_scenario(&cfg).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(rates_to_csv(&a.rows), rates_to_csv(&b.rows));

        let perm_rate = a
            .rows
            .iter()
            .find(|r| r.method == "permutation")
            .unwrap()
            .rate;
        // 3 binomial SEs around alpha at n_sim = 200
        let se = (0.05_f64 * 0.95 / 200.0).sqrt();
        assert!(
            (perm_rate - 0.05).abs() <= 3.0 * se + 1e-12,
            "rate {perm_rate}"
        );
        // SE column consistent with the binomial formula
        for row in &a.rows {
            let expected = (row.rate * (1.0 - row.rate) / row.nsim as f64).sqrt();
            assert!((row.se - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn builtin_scenario_shapes() {
        let params = SimParams {
            n_sim: 10,
            n_perm: 9,
            alpha: prob(0.05),
            seed: 1,
        };
        assert_eq!(builtin_scenario("table1", params).unwrap().len(), 20);
        let t2 = builtin_scenario("table2", params).unwrap();
        assert_eq!(t2.len(), 10);
        assert!(t2.iter().all(|c| c.scales == SIGMA1));
        let t3 = builtin_scenario("table3-power", params).unwrap();
        assert_eq!(t3.len(), 28);
        let deltas: Vec<f64> = t3.iter().take(7).map(|c| c.delta).collect();
        assert_eq!(deltas, vec![0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8]);
        assert_eq!(
            builtin_scenario("table6-threequantile", params).unwrap()[0].sizes,
            vec![8, 13, 12, 11]
        );
        assert_eq!(builtin_scenario("iqr-increasing-n", params).unwrap().len(), 12);
        assert!(builtin_scenario("table7", params).is_err());

        // distinct cells get distinct derived seeds
        let cells = builtin_scenario("table1", params).unwrap();
        let mut seeds: Vec<u64> = cells.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), cells.len());
    }
}
