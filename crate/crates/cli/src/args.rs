//! Command-line surface and JSON config-file merging.
//!
//! Every flag is optional at the clap layer; a `--config file.json` supplies
//! defaults with the same field names, and explicit flags override the file.
//! Validation into strongly typed run configurations happens afterwards.

use crate::errors::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "qanova",
    version,
    about = "Permutation and asymptotic Wald-type tests for quantile contrasts \
             in factorial designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test a null hypothesis on quantile contrasts of grouped CSV data.
    Test(TestArgs),
    /// Confidence interval for a two-group quantile difference.
    Ci(CiArgs),
    /// Run a built-in Monte-Carlo scenario and report rejection rates.
    Simulate(SimulateArgs),
    /// Asymptotic local power from a noncentral chi-square approximation.
    Power(PowerArgs),
    /// Re-run the test stored in a JSON report and compare the results.
    Verify(VerifyArgs),
}

macro_rules! merge_from_file {
    ($args:ident, $file:ident; $($field:ident),* $(,)?) => {
        $( if $args.$field.is_none() { $args.$field = $file.$field; } )*
    };
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct TestArgs {
    /// JSON file with default values for the other flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV file with one observation per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Factor column names (one or two), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Value column name.
    #[arg(long)]
    pub value: Option<String>,
    /// Hypothesis: group, mainA, mainB or interaction.
    #[arg(long)]
    pub effect: Option<String>,
    /// Quantile probabilities, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    /// Coefficients combining the quantiles of a group (default 1 for one
    /// probability).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coefs: Option<Vec<f64>>,
    /// JSON file with a custom contrast matrix (nested array of rows).
    #[arg(long)]
    pub contrast_file: Option<PathBuf>,
    /// Covariance estimators: kernel, bootstrap, interval (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub estimator: Option<Vec<String>>,
    /// Calibration: asymptotic, permutation or both.
    #[arg(long)]
    pub method: Option<String>,
    /// Test level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of permutation replicates.
    #[arg(long)]
    pub nperm: Option<usize>,
    /// Seed for the permutation streams; required for permutation methods.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output format: json, csv or text.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl TestArgs {
    pub fn merged(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.clone() {
            let file: TestArgs = read_config(&path)?;
            merge_from_file!(self, file;
                data, factors, value, effect, probs, coefs, contrast_file,
                estimator, method, alpha, nperm, seed, format, out);
        }
        Ok(self)
    }
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct CiArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV file with one observation per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Single factor column identifying the groups.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Value column name.
    #[arg(long)]
    pub value: Option<String>,
    /// The two factor levels to compare; the interval is for
    /// quantile(second) - quantile(first).
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// Quantile probability (0.5 for the median difference).
    #[arg(long)]
    pub prob: Option<f64>,
    /// Covariance estimator: kernel, bootstrap or interval.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Calibration: z or permutation.
    #[arg(long)]
    pub method: Option<String>,
    /// Confidence level (e.g. 0.95).
    #[arg(long)]
    pub level: Option<f64>,
    /// Number of permutation replicates.
    #[arg(long)]
    pub nperm: Option<usize>,
    /// Seed for the permutation streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the absolute value of the studentized statistic instead of the
    /// signed upper quantile.
    #[arg(long)]
    #[serde(default)]
    pub symmetrize: bool,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CiArgs {
    pub fn merged(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.clone() {
            let file: CiArgs = read_config(&path)?;
            merge_from_file!(self, file;
                data, factors, value, groups, prob, estimator, method, level,
                nperm, seed, format, out);
            self.symmetrize = self.symmetrize || file.symmetrize;
        }
        Ok(self)
    }
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Built-in scenario name (see `qanova simulate --scenario help`).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Simulation replicates per cell (desk-scale default 1000).
    #[arg(long)]
    pub nsim: Option<usize>,
    /// Permutation replicates per test (desk-scale default 499).
    #[arg(long)]
    pub nperm: Option<usize>,
    /// Nominal test level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Master seed; cell seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the reference-table settings (5000 runs, 1999 permutations).
    #[arg(long)]
    #[serde(default)]
    pub full_scale: bool,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn merged(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.clone() {
            let file: SimulateArgs = read_config(&path)?;
            merge_from_file!(self, file; scenario, nsim, nperm, alpha, seed, format, out);
            self.full_scale = self.full_scale || file.full_scale;
        }
        Ok(self)
    }
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct PowerArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Design: "oneway:K" or "twoway:AxB".
    #[arg(long)]
    pub design: Option<String>,
    /// Hypothesis: group, mainA, mainB or interaction.
    #[arg(long)]
    pub effect: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coefs: Option<Vec<f64>>,
    /// Local drift of the contrasted quantile vector, length k*m.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// Diagonal of the limiting covariance, length k*m.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma_diag: Option<Vec<f64>>,
    /// JSON file with the full k*m x k*m covariance (nested array of rows).
    #[arg(long)]
    pub sigma_file: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PowerArgs {
    pub fn merged(mut self) -> CliResult<Self> {
        if let Some(path) = self.config.clone() {
            let file: PowerArgs = read_config(&path)?;
            merge_from_file!(self, file;
                design, effect, probs, coefs, theta, sigma_diag, sigma_file,
                alpha, format, out);
        }
        Ok(self)
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// JSON report produced by `qanova test`.
    #[arg(long)]
    pub report: PathBuf,
    /// The CSV file the report was computed from.
    #[arg(long)]
    pub data: PathBuf,
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}
