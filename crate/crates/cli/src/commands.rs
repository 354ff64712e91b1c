//! Resolution of merged arguments into typed run configurations and the
//! execution of each subcommand. Reports contain every field needed to
//! reproduce the run; no timestamps, so identical inputs give identical
//! bytes.

use crate::args::{CiArgs, PowerArgs, SimulateArgs, TestArgs, VerifyArgs};
use crate::errors::{CliError, CliResult};
use crate::ingest::{ingest_csv, IngestedData};
use crate::output::{render, OutputFormat, Rendered};
use qanova::contrasts::{build_hypothesis, Design, Effect, HypothesisSpec};
use qanova::engine::{
    asymptotic_test, permutation_test, two_sample_ci, CiMethod, CiOutcome, TestOutcome,
};
use qanova::linalg::Matrix;
use qanova::prob::Probability;
use qanova::quantiles::SampleVector;
use qanova::simharness::{builtin_scenario, run_scenario, RateRow, SimParams};
use qanova::variance::EstimatorKind;
use serde::Serialize;
use std::path::{Path, PathBuf};

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::config(format!("--{flag} is required")))
}

/// Inner message of a core error, for re-wrapping as a config error.
fn core_msg(e: qanova::Error) -> String {
    match e {
        qanova::Error::Domain(m)
        | qanova::Error::Dimension(m)
        | qanova::Error::Numeric(m)
        | qanova::Error::Data(m) => m,
    }
}

fn parse_probability(value: f64, what: &str) -> CliResult<Probability> {
    Probability::new(value)
        .map_err(|_| CliError::config(format!("{what} must lie strictly in (0,1), got {value}")))
}

fn parse_probs(values: &[f64]) -> CliResult<Vec<Probability>> {
    let probs: Vec<Probability> = values
        .iter()
        .map(|&v| parse_probability(v, "each probability"))
        .collect::<CliResult<_>>()?;
    qanova::prob::validate_probs(&probs)
        .map_err(|e| CliError::config(core_msg(e)))?;
    Ok(probs)
}

fn parse_estimator(name: &str) -> CliResult<EstimatorKind> {
    match name {
        "kernel" => Ok(EstimatorKind::Kernel),
        "bootstrap" => Ok(EstimatorKind::Bootstrap),
        "interval" => Ok(EstimatorKind::IntervalPb),
        other => Err(CliError::config(format!(
            "unknown estimator '{other}' (expected kernel, bootstrap or interval)"
        ))),
    }
}

fn parse_effect(name: &str) -> CliResult<Effect> {
    match name {
        "group" => Ok(Effect::Group),
        "mainA" => Ok(Effect::MainA),
        "mainB" => Ok(Effect::MainB),
        "interaction" => Ok(Effect::Interaction),
        other => Err(CliError::config(format!(
            "unknown effect '{other}' (expected group, mainA, mainB or interaction)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunMethod {
    Asymptotic,
    Permutation,
    Both,
}

impl RunMethod {
    fn parse(name: &str) -> CliResult<Self> {
        match name {
            "asymptotic" => Ok(RunMethod::Asymptotic),
            "permutation" => Ok(RunMethod::Permutation),
            "both" => Ok(RunMethod::Both),
            other => Err(CliError::config(format!(
                "unknown method '{other}' (expected asymptotic, permutation or both)"
            ))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            RunMethod::Asymptotic => "asymptotic",
            RunMethod::Permutation => "permutation",
            RunMethod::Both => "both",
        }
    }

    fn wants_permutation(self) -> bool {
        !matches!(self, RunMethod::Asymptotic)
    }
}

fn read_matrix_file(path: &Path) -> CliResult<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| {
        CliError::config(format!(
            "{}: expected a JSON array of equal-length rows: {e}",
            path.display()
        ))
    })?;
    Matrix::from_rows(&rows).map_err(|e| CliError::config(core_msg(e)))
}

fn infer_design(levels: &[Vec<String>]) -> CliResult<Design> {
    match levels {
        [one] => Ok(Design::OneWay { groups: one.len() }),
        [a, b] => Ok(Design::TwoWay {
            a: a.len(),
            b: b.len(),
        }),
        _ => Err(CliError::config(
            "one or two factor columns supported; encode higher-way designs \
             through a custom contrast on the flattened one-way layout",
        )),
    }
}

#[derive(Serialize)]
struct GroupInfo {
    labels: Vec<String>,
    n: usize,
}

#[derive(Serialize)]
struct EstimatorResult {
    estimator: &'static str,
    outcome: TestOutcome,
}

#[derive(Serialize)]
pub struct TestReport {
    command: &'static str,
    data: String,
    factors: Vec<String>,
    value: String,
    design: Design,
    effect: String,
    probs: Vec<f64>,
    coefs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contrast: Option<Vec<Vec<f64>>>,
    alpha: f64,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    nperm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    groups: Vec<GroupInfo>,
    results: Vec<EstimatorResult>,
}

struct ResolvedTest {
    data: PathBuf,
    factors: Vec<String>,
    value: String,
    effect_name: String,
    contrast: Option<Matrix>,
    probs: Vec<Probability>,
    coefs: Vec<f64>,
    estimators: Vec<EstimatorKind>,
    method: RunMethod,
    alpha: Probability,
    nperm: usize,
    seed: Option<u64>,
}

fn resolve_test(args: TestArgs) -> CliResult<ResolvedTest> {
    let args = args.merged()?;
    let data = require(args.data, "data")?;
    let factors = require(args.factors, "factors")?;
    let value = require(args.value, "value")?;
    let probs = parse_probs(&require(args.probs, "probs")?)?;
    let contrast = match &args.contrast_file {
        Some(path) => {
            if args.effect.is_some() {
                return Err(CliError::config(
                    "--effect and --contrast-file are mutually exclusive",
                ));
            }
            Some(read_matrix_file(path)?)
        }
        None => None,
    };
    let effect_name = match (&contrast, args.effect) {
        (Some(_), _) => "custom".to_string(),
        (None, Some(e)) => e,
        (None, None) => return Err(CliError::config("--effect or --contrast-file is required")),
    };
    let coefs = match args.coefs {
        Some(c) => {
            if contrast.is_some() {
                return Err(CliError::config(
                    "--coefs does not apply to a custom contrast matrix",
                ));
            }
            c
        }
        None if probs.len() == 1 || contrast.is_some() => vec![1.0],
        None => {
            return Err(CliError::config(
                "--coefs is required when more than one probability is given \
                 (e.g. --coefs -1,1 for IQRs)",
            ))
        }
    };
    let estimators = match args.estimator {
        Some(names) => names
            .iter()
            .map(|n| parse_estimator(n))
            .collect::<CliResult<Vec<_>>>()?,
        None => vec![EstimatorKind::Bootstrap],
    };
    let method = RunMethod::parse(args.method.as_deref().unwrap_or("both"))?;
    let alpha = parse_probability(args.alpha.unwrap_or(0.05), "--alpha")?;
    let nperm = args.nperm.unwrap_or(1999);
    if method.wants_permutation() && args.seed.is_none() {
        return Err(CliError::config(
            "--seed is required for permutation methods (no silent entropy)",
        ));
    }
    Ok(ResolvedTest {
        data,
        factors,
        value,
        effect_name,
        contrast,
        probs,
        coefs,
        estimators,
        method,
        alpha,
        nperm,
        seed: args.seed,
    })
}

fn run_resolved_test(cfg: &ResolvedTest) -> CliResult<TestReport> {
    let IngestedData { sample, levels } = ingest_csv(&cfg.data, &cfg.factors, &cfg.value)?;
    let design = infer_design(&levels)?;
    let effect = match &cfg.contrast {
        Some(m) => Effect::Custom(m.clone()),
        None => parse_effect(&cfg.effect_name)?,
    };
    let spec = HypothesisSpec::new(design, effect, cfg.probs.clone(), cfg.coefs.clone())
        .map_err(|e| CliError::config(core_msg(e)))?;
    build_hypothesis(&spec).map_err(|e| CliError::config(core_msg(e)))?;

    let mut results = Vec::new();
    for &est in &cfg.estimators {
        let outcome = if cfg.method.wants_permutation() {
            permutation_test(
                &sample,
                &spec,
                est,
                cfg.alpha,
                cfg.nperm,
                cfg.seed.expect("validated"),
            )?
        } else {
            asymptotic_test(&sample, &spec, est, cfg.alpha)?
        };
        results.push(EstimatorResult {
            estimator: est.label(),
            outcome,
        });
    }
    Ok(TestReport {
        command: "test",
        data: cfg.data.display().to_string(),
        factors: cfg.factors.clone(),
        value: cfg.value.clone(),
        design,
        effect: cfg.effect_name.clone(),
        probs: cfg.probs.iter().map(|p| p.value()).collect(),
        coefs: cfg.coefs.clone(),
        contrast: cfg.contrast.as_ref().map(|m| {
            (0..m.rows())
                .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
                .collect()
        }),
        alpha: cfg.alpha.value(),
        method: cfg.method.label(),
        nperm: cfg.method.wants_permutation().then_some(cfg.nperm),
        seed: cfg.seed,
        groups: sample
            .groups()
            .iter()
            .map(|g| GroupInfo {
                labels: g.labels.clone(),
                n: g.data.len(),
            })
            .collect(),
        results,
    })
}

pub fn cmd_test(args: TestArgs) -> CliResult<Rendered> {
    let format = OutputFormat::parse(args.format.as_deref())?;
    let out = args.out.clone();
    let cfg = resolve_test(args)?;
    let report = run_resolved_test(&cfg)?;
    render(&report, format, test_csv(&report), test_text(&report), out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn test_csv(report: &TestReport) -> String {
    let mut s = String::from(
        "estimator,statistic,df,p_asymptotic,crit_asymptotic,\
         p_permutation,crit_permutation,nperm,seed\n",
    );
    for r in &report.results {
        let o = &r.outcome;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.estimator,
            o.statistic,
            o.df,
            o.p_asymptotic,
            o.crit_asymptotic,
            opt(o.p_permutation),
            opt(o.crit_permutation),
            o.n_perm.map_or(String::new(), |v| v.to_string()),
            o.seed.map_or(String::new(), |v| v.to_string()),
        ));
    }
    s
}

fn test_text(report: &TestReport) -> String {
    let mut s = format!(
        "QANOVA test: effect {} at quantiles {:?} (alpha {})\n",
        report.effect, report.probs, report.alpha
    );
    for g in &report.groups {
        s.push_str(&format!("  group ({}): n = {}\n", g.labels.join(","), g.n));
    }
    for r in &report.results {
        let o = &r.outcome;
        s.push_str(&format!(
            "  [{}] S = {:.6}, df = {}, p_asym = {:.6}",
            r.estimator, o.statistic, o.df, o.p_asymptotic
        ));
        if let Some(p) = o.p_permutation {
            s.push_str(&format!(", p_perm = {p:.6}"));
        }
        s.push('\n');
        for w in &o.warnings {
            s.push_str(&format!("    warning: {w}\n"));
        }
    }
    s
}

#[derive(Serialize)]
pub struct CiReport {
    command: &'static str,
    data: String,
    factor: String,
    value: String,
    groups: Vec<String>,
    prob: f64,
    estimator: &'static str,
    level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetrize: Option<bool>,
    outcome: CiOutcome,
}

pub fn cmd_ci(args: CiArgs) -> CliResult<Rendered> {
    let args = args.merged()?;
    let format = OutputFormat::parse(args.format.as_deref())?;
    let out = args.out.clone();
    let data = require(args.data, "data")?;
    let factors = require(args.factors, "factors")?;
    if factors.len() != 1 {
        return Err(CliError::config(
            "ci expects exactly one factor column identifying the groups",
        ));
    }
    let value = require(args.value, "value")?;
    let group_names = require(args.groups, "groups")?;
    if group_names.len() != 2 || group_names[0] == group_names[1] {
        return Err(CliError::config(
            "--groups needs two distinct factor levels, e.g. --groups a,b",
        ));
    }
    let prob = parse_probability(require(args.prob, "prob")?, "--prob")?;
    let estimator = parse_estimator(args.estimator.as_deref().unwrap_or("bootstrap"))?;
    let level = args.level.unwrap_or(0.95);
    let alpha = parse_probability(1.0 - level, "--level complement")?;
    let method_name = args.method.as_deref().unwrap_or("z");
    let method = match method_name {
        "z" => CiMethod::Z,
        "permutation" => {
            let seed = args.seed.ok_or_else(|| {
                CliError::config("--seed is required for the permutation method")
            })?;
            CiMethod::Permutation {
                n_perm: args.nperm.unwrap_or(1999),
                seed,
                symmetrize: args.symmetrize,
            }
        }
        other => {
            return Err(CliError::config(format!(
                "unknown ci method '{other}' (expected z or permutation)"
            )))
        }
    };

    let ingested = ingest_csv(&data, &factors, &value)?;
    let find = |name: &str| -> CliResult<SampleVector> {
        ingested
            .sample
            .groups()
            .iter()
            .find(|g| g.labels[0] == name)
            .map(|g| g.data.clone())
            .ok_or_else(|| {
                CliError::data(format!(
                    "group '{name}' not found; available: {}",
                    ingested.levels[0].join(", ")
                ))
            })
    };
    let g1 = find(&group_names[0])?;
    let g2 = find(&group_names[1])?;
    let outcome = two_sample_ci(&g1, &g2, prob, estimator, alpha, method)?;

    let report = CiReport {
        command: "ci",
        data: data.display().to_string(),
        factor: factors[0].clone(),
        value,
        groups: group_names,
        prob: prob.value(),
        estimator: estimator.label(),
        level,
        symmetrize: matches!(method, CiMethod::Permutation { .. }).then_some(args.symmetrize),
        outcome,
    };
    let csv = format!(
        "method,estimator,prob,estimate,lower,upper,level,nperm,seed\n\
         {},{},{},{},{},{},{},{},{}\n",
        report.outcome.method,
        report.estimator,
        report.prob,
        report.outcome.estimate,
        report.outcome.lower,
        report.outcome.upper,
        report.level,
        report.outcome.n_perm.map_or(String::new(), |v| v.to_string()),
        report.outcome.seed.map_or(String::new(), |v| v.to_string()),
    );
    let text = format!(
        "{}% {} CI for q_{}({}) - q_{}({}): estimate {:.6}, [{:.6}, {:.6}]\n",
        report.level * 100.0,
        report.outcome.method,
        report.prob,
        report.groups[1],
        report.prob,
        report.groups[0],
        report.outcome.estimate,
        report.outcome.lower,
        report.outcome.upper
    );
    render(&report, format, csv, text, out)
}

#[derive(Serialize)]
pub struct SimulateReport {
    command: &'static str,
    scenario: String,
    nsim: usize,
    nperm: usize,
    alpha: f64,
    seed: u64,
    rows: Vec<RateRow>,
}

pub fn cmd_simulate(args: SimulateArgs) -> CliResult<Rendered> {
    let args = args.merged()?;
    let format = OutputFormat::parse_with_default(args.format.as_deref(), OutputFormat::Csv)?;
    let out = args.out.clone();
    let scenario = require(args.scenario, "scenario")?;
    let seed = require(args.seed, "seed")?;
    let alpha = parse_probability(args.alpha.unwrap_or(0.05), "--alpha")?;
    let mut params = if args.full_scale {
        SimParams::full_scale(seed)
    } else {
        SimParams::desk_scale(seed)
    };
    params.alpha = alpha;
    if let Some(nsim) = args.nsim {
        params.n_sim = nsim;
    }
    if let Some(nperm) = args.nperm {
        params.n_perm = nperm;
    }
    let cells =
        builtin_scenario(&scenario, params).map_err(|e| CliError::config(core_msg(e)))?;
    let mut rows = Vec::new();
    for cell in &cells {
        rows.extend(run_scenario(cell)?.rows);
    }
    let report = SimulateReport {
        command: "simulate",
        scenario,
        nsim: params.n_sim,
        nperm: params.n_perm,
        alpha: alpha.value(),
        seed,
        rows,
    };
    let csv = qanova::simharness::rates_to_csv(&report.rows);
    let mut text = format!(
        "scenario {} (nsim {}, nperm {}, alpha {}, seed {})\n",
        report.scenario, report.nsim, report.nperm, report.alpha, report.seed
    );
    for r in &report.rows {
        text.push_str(&format!(
            "  {} {} n=({}) sigma=({}) delta={} {}/{}: {:.4} (se {:.4})\n",
            r.distribution,
            r.scenario,
            r.sizes,
            r.sigmas,
            r.delta,
            r.estimator,
            r.method,
            r.rate,
            r.se
        ));
    }
    render(&report, format, csv, text, out)
}

#[derive(Serialize)]
pub struct PowerReport {
    command: &'static str,
    design: Design,
    effect: String,
    probs: Vec<f64>,
    coefs: Vec<f64>,
    theta: Vec<f64>,
    alpha: f64,
    df: usize,
    delta: f64,
    power: f64,
}

fn parse_design(text: &str) -> CliResult<Design> {
    let bad = || {
        CliError::config(format!(
            "invalid design '{text}' (expected oneway:K or twoway:AxB)"
        ))
    };
    let (kind, dims) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "oneway" => {
            let groups: usize = dims.parse().map_err(|_| bad())?;
            if groups == 0 {
                return Err(bad());
            }
            Ok(Design::OneWay { groups })
        }
        "twoway" => {
            let (a, b) = dims.split_once('x').ok_or_else(bad)?;
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.parse().map_err(|_| bad())?;
            if a == 0 || b == 0 {
                return Err(bad());
            }
            Ok(Design::TwoWay { a, b })
        }
        _ => Err(bad()),
    }
}

pub fn cmd_power(args: PowerArgs) -> CliResult<Rendered> {
    let args = args.merged()?;
    let format = OutputFormat::parse(args.format.as_deref())?;
    let out = args.out.clone();
    let design = parse_design(&require(args.design, "design")?)?;
    let effect_name = require(args.effect, "effect")?;
    let effect = parse_effect(&effect_name)?;
    let probs = parse_probs(&require(args.probs, "probs")?)?;
    let coefs = match args.coefs {
        Some(c) => c,
        None if probs.len() == 1 => vec![1.0],
        None => {
            return Err(CliError::config(
                "--coefs is required when more than one probability is given",
            ))
        }
    };
    let theta = require(args.theta, "theta")?;
    let alpha = parse_probability(args.alpha.unwrap_or(0.05), "--alpha")?;
    let dim = design.k() * probs.len();
    if theta.len() != dim {
        return Err(CliError::config(format!(
            "--theta needs k*m = {dim} entries, got {}",
            theta.len()
        )));
    }
    let sigma = match (args.sigma_diag, args.sigma_file) {
        (Some(diag), None) => {
            if diag.len() != dim {
                return Err(CliError::config(format!(
                    "--sigma-diag needs k*m = {dim} entries, got {}",
                    diag.len()
                )));
            }
            let mut m = Matrix::zeros(dim, dim);
            for (i, v) in diag.iter().enumerate() {
                m.set(i, i, *v);
            }
            m
        }
        (None, Some(path)) => read_matrix_file(&path)?,
        _ => {
            return Err(CliError::config(
                "exactly one of --sigma-diag and --sigma-file is required",
            ))
        }
    };
    let spec = HypothesisSpec::new(design, effect, probs.clone(), coefs.clone())
        .map_err(|e| CliError::config(core_msg(e)))?;
    let hyp = build_hypothesis(&spec).map_err(|e| CliError::config(core_msg(e)))?;
    let power = qanova::engine::asymptotic_power(&theta, &sigma, &hyp, alpha)?;

    // noncentrality for the report
    let t = hyp.projection();
    let mid = t.matmul(&sigma).matmul(&t.transpose());
    let inv = mid.pinv().map_err(CliError::from)?;
    let tmp = inv.mul_vec(&theta);
    let delta: f64 = theta.iter().zip(&tmp).map(|(a, b)| a * b).sum();

    let report = PowerReport {
        command: "power",
        design,
        effect: effect_name,
        probs: probs.iter().map(|p| p.value()).collect(),
        coefs,
        theta,
        alpha: alpha.value(),
        df: hyp.rank(),
        delta,
        power,
    };
    let csv = format!(
        "effect,df,delta,alpha,power\n{},{},{},{},{}\n",
        report.effect, report.df, report.delta, report.alpha, report.power
    );
    let text = format!(
        "asymptotic power of the level-{} test ({}, df {}): {:.6} \
         (noncentrality {:.6})\n",
        report.alpha, report.effect, report.df, report.power, report.delta
    );
    render(&report, format, csv, text, out)
}

pub fn cmd_verify(args: VerifyArgs) -> CliResult<Rendered> {
    let text = std::fs::read_to_string(&args.report).map_err(|e| {
        CliError::data(format!("cannot read report {}: {e}", args.report.display()))
    })?;
    let report: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("invalid report JSON: {e}")))?;
    if report["command"] != "test" {
        return Err(CliError::config(
            "verify only supports reports produced by `qanova test`",
        ));
    }
    let str_vec = |v: &serde_json::Value| -> Option<Vec<String>> {
        v.as_array()?
            .iter()
            .map(|x| x.as_str().map(str::to_string))
            .collect()
    };
    let f64_vec = |v: &serde_json::Value| -> Option<Vec<f64>> {
        v.as_array()?.iter().map(serde_json::Value::as_f64).collect()
    };
    let missing = |what: &str| CliError::data(format!("report lacks field '{what}'"));

    let factors = str_vec(&report["factors"]).ok_or_else(|| missing("factors"))?;
    let value = report["value"].as_str().ok_or_else(|| missing("value"))?;
    let effect_name = report["effect"].as_str().ok_or_else(|| missing("effect"))?;
    let probs = parse_probs(&f64_vec(&report["probs"]).ok_or_else(|| missing("probs"))?)?;
    let coefs = f64_vec(&report["coefs"]).ok_or_else(|| missing("coefs"))?;
    let alpha = parse_probability(
        report["alpha"].as_f64().ok_or_else(|| missing("alpha"))?,
        "alpha",
    )?;
    let method = RunMethod::parse(report["method"].as_str().ok_or_else(|| missing("method"))?)?;
    let nperm = report["nperm"].as_u64().map(|v| v as usize);
    let seed = report["seed"].as_u64();
    let contrast = match &report["contrast"] {
        serde_json::Value::Null => None,
        rows => {
            let rows: Vec<Vec<f64>> = rows
                .as_array()
                .and_then(|r| r.iter().map(f64_vec).collect())
                .ok_or_else(|| missing("contrast"))?;
            Some(Matrix::from_rows(&rows).map_err(|e| CliError::data(e.to_string()))?)
        }
    };
    let results = report["results"]
        .as_array()
        .ok_or_else(|| missing("results"))?;
    let estimators: Vec<String> = results
        .iter()
        .map(|r| {
            r["estimator"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| missing("results[].estimator"))
        })
        .collect::<CliResult<_>>()?;

    let cfg = ResolvedTest {
        data: args.data.clone(),
        factors,
        value: value.to_string(),
        effect_name: effect_name.to_string(),
        contrast,
        probs,
        coefs,
        estimators: estimators
            .iter()
            .map(|e| parse_estimator(e))
            .collect::<CliResult<_>>()?,
        method,
        alpha,
        nperm: nperm.unwrap_or(1999),
        seed,
    };
    let fresh = run_resolved_test(&cfg)?;

    for (stored, recomputed) in results.iter().zip(&fresh.results) {
        let field = |name: &str| stored["outcome"][name].as_f64();
        let stat = field("statistic").ok_or_else(|| missing("outcome.statistic"))?;
        if stat != recomputed.outcome.statistic {
            return Err(CliError::Mismatch(format!(
                "estimator {}: statistic {} in report, {} recomputed",
                recomputed.estimator, stat, recomputed.outcome.statistic
            )));
        }
        if field("p_asymptotic") != Some(recomputed.outcome.p_asymptotic) {
            return Err(CliError::Mismatch(format!(
                "estimator {}: asymptotic p-value differs",
                recomputed.estimator
            )));
        }
        if field("p_permutation") != recomputed.outcome.p_permutation {
            return Err(CliError::Mismatch(format!(
                "estimator {}: permutation p-value differs",
                recomputed.estimator
            )));
        }
    }
    Ok(Rendered::plain(format!(
        "verification OK: {} result(s) reproduced from {}\n",
        fresh.results.len(),
        args.data.display()
    )))
}
