//! QANOVA: permutation and asymptotic Wald-type tests for null hypotheses on
//! linear contrasts of population quantiles (medians, IQRs, multi-quantile
//! profiles) in general heteroscedastic factorial designs.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`] — self-contained special functions (normal, chi-square,
//!   noncentral chi-square, binomial tails);
//! * [`linalg`] — small dense matrices, Kronecker products, direct sums and
//!   the SVD-based Moore-Penrose pseudo-inverse;
//! * [`quantiles`] — order-statistic sample quantiles and ECDFs;
//! * [`contrasts`] — hypothesis matrices H and projections T for one- and
//!   two-way designs;
//! * [`variance`] — kernel, bootstrap and interval-based covariance
//!   estimators for quantile vectors;
//! * [`engine`] — the Wald-type statistic, asymptotic and permutation tests,
//!   confidence intervals and local power;
//! * [`simharness`] — Monte-Carlo scenario runner for size and power studies;
//! * [`rng`] — reproducible, thread-count-independent random streams.

pub mod contrasts;
pub mod error;
pub mod engine;
pub mod linalg;
pub mod prob;
pub mod quantiles;
pub mod rng;
pub mod simharness;
pub mod specfun;
pub mod variance;

pub use contrasts::{Design, Effect, HypothesisSpec};
pub use engine::{CiMethod, CiOutcome, GroupedSample, TestMethod, TestOutcome};
pub use error::{Error, Result};
pub use prob::Probability;
pub use quantiles::SampleVector;
pub use variance::EstimatorKind;
