//! Empirical distribution functions and order-statistic sample quantiles.
//!
//! The quantile convention is the inverse-ECDF ("type 1") definition: the
//! p-quantile of a sample of size n is the ceil(n*p)-th order statistic.
//! Interpolating variants deliberately do not appear here; the bootstrap
//! weights and interval estimators in [`crate::variance`] assume exact order
//! statistics.

use crate::error::{Error, Result};
use crate::prob::{validate_probs, Probability};

/// A nonempty vector of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample must contain at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample values must be finite"));
        }
        Ok(SampleVector(values))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// A sorted copy; the original data is never mutated.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// The 1-based order-statistic index ceil(n * p).
///
/// Products within a few ulps of an integer are snapped to that integer
/// before the ceiling, so p = 0.1 with n = 20 yields index 2 rather than 3
/// even though fl(0.1) sits fractionally above one tenth.
pub(crate) fn order_statistic_index(n: usize, p: Probability) -> usize {
    let t = n as f64 * p.value();
    let nearest = t.round();
    let idx = if (t - nearest).abs() <= 4.0 * f64::EPSILON * t {
        nearest
    } else {
        t.ceil()
    };
    (idx as usize).clamp(1, n)
}

/// Quantile of already-sorted data under the type-1 convention.
pub(crate) fn quantile_from_sorted(sorted: &[f64], p: Probability) -> f64 {
    sorted[order_statistic_index(sorted.len(), p) - 1]
}

/// Sample quantile: the ceil(n*p)-th order statistic.
pub fn sample_quantile(xs: &SampleVector, p: Probability) -> f64 {
    quantile_from_sorted(&xs.sorted(), p)
}

/// Empirical distribution function at `t`: the fraction of values <= t.
pub fn ecdf_eval(xs: &SampleVector, t: f64) -> f64 {
    let count = xs.values().iter().filter(|&&x| x <= t).count();
    count as f64 / xs.len() as f64
}

/// Group-major vector of sample quantiles: all probabilities for group 1,
/// then all for group 2, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileVector {
    values: Vec<f64>,
    n_groups: usize,
    n_probs: usize,
}

impl QuantileVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_probs(&self) -> usize {
        self.n_probs
    }

    /// Quantile of group `i` at probability index `r`.
    pub fn get(&self, i: usize, r: usize) -> f64 {
        self.values[i * self.n_probs + r]
    }

    pub(crate) fn from_sorted_groups(sorted_groups: &[Vec<f64>], probs: &[Probability]) -> Self {
        let mut values = Vec::with_capacity(sorted_groups.len() * probs.len());
        for sorted in sorted_groups {
            for &p in probs {
                values.push(quantile_from_sorted(sorted, p));
            }
        }
        QuantileVector {
            values,
            n_groups: sorted_groups.len(),
            n_probs: probs.len(),
        }
    }
}

/// Pooled quantile vector over all groups, ordered group-major.
pub fn quantile_vector(groups: &[SampleVector], probs: &[Probability]) -> Result<QuantileVector> {
    validate_probs(probs)?;
    if groups.is_empty() {
        return Err(Error::domain("at least one group required"));
    }
    let sorted: Vec<Vec<f64>> = groups.iter().map(SampleVector::sorted).collect();
    Ok(QuantileVector::from_sorted_groups(&sorted, probs))
}

pub fn sample_mean(xs: &SampleVector) -> f64 {
    xs.values().iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n-1) sample standard deviation; requires n >= 2.
pub fn sample_sd(xs: &SampleVector) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::domain("standard deviation requires n >= 2"));
    }
    let mean = sample_mean(xs);
    let ss: f64 = xs.values().iter().map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (n as f64 - 1.0)).sqrt())
}

/// Interquartile range under the type-1 quantile convention.
pub fn sample_iqr(xs: &SampleVector) -> f64 {
    let sorted = xs.sorted();
    let q3 = quantile_from_sorted(&sorted, Probability::new(0.75).unwrap());
    let q1 = quantile_from_sorted(&sorted, Probability::new(0.25).unwrap());
    q3 - q1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn sample(v: &[f64]) -> SampleVector {
        SampleVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_formula_instantiations() {
        assert_eq!(sample_quantile(&sample(&[1.0, 2.0, 3.0]), prob(0.5)), 2.0);
        assert_eq!(sample_quantile(&sample(&[1.0, 2.0, 3.0, 4.0]), prob(0.5)), 2.0);
        assert_eq!(sample_quantile(&sample(&[1.0, 2.0, 3.0, 4.0]), prob(0.25)), 1.0);
        assert_eq!(sample_quantile(&sample(&[1.0, 2.0, 3.0, 4.0]), prob(0.75)), 3.0);
    }

    #[test]
    fn order_index_survives_inexact_products() {
        // 20 * 0.05 rounds above 1.0 in f64; the true product is exactly 1
        assert_eq!(order_statistic_index(20, prob(0.05)), 1);
        assert_eq!(order_statistic_index(3, prob(0.5)), 2);
        for n in 1..=200usize {
            for num in 1..=9usize {
                let p = prob(num as f64 / 10.0);
                let idx = order_statistic_index(n, p);
                // brute integer check: smallest j with j >= n*p, i.e. 10j >= n*num
                let expected = (1..=n).find(|j| 10 * j >= n * num).unwrap();
                assert_eq!(idx, expected, "n={n} p={}", p.value());
            }
        }
    }

    #[test]
    fn ecdf_step_function() {
        let xs = sample(&[1.0, 2.0, 3.0]);
        assert_eq!(ecdf_eval(&xs, 2.0), 2.0 / 3.0);
        assert_eq!(ecdf_eval(&xs, 0.5), 0.0);
        assert_eq!(ecdf_eval(&xs, 3.0), 1.0);
        assert_eq!(ecdf_eval(&xs, 99.0), 1.0);
    }

    #[test]
    fn quantile_vector_layout() {
        let g = sample(&(1..=10).map(|v| v as f64).collect::<Vec<_>>());
        let qv = quantile_vector(&[g], &[prob(0.25), prob(0.5), prob(0.75)]).unwrap();
        assert_eq!(qv.values(), &[3.0, 5.0, 8.0]);

        let g1 = sample(&[1.0, 2.0, 3.0, 4.0]);
        let g2 = sample(&[10.0, 11.0, 12.0, 13.0]);
        let qv = quantile_vector(&[g1.clone(), g2], &[prob(0.5)]).unwrap();
        assert_eq!(qv.values(), &[2.0, 11.0]);
        assert_eq!(qv.get(1, 0), 11.0);

        assert!(quantile_vector(&[g1], &[prob(0.75), prob(0.25)]).is_err());
    }

    #[test]
    fn sd_and_iqr() {
        let constant = sample(&[4.0; 6]);
        assert_eq!(sample_sd(&constant).unwrap(), 0.0);
        assert_eq!(sample_iqr(&constant), 0.0);

        assert_eq!(sample_iqr(&sample(&[1.0, 2.0, 3.0, 4.0])), 2.0);
        assert!((sample_sd(&sample(&[0.0, 2.0])).unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(sample_sd(&sample(&[1.0])).is_err());
        assert!(SampleVector::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn quantile_invariant_under_shuffling(
            mut values in proptest::collection::vec(-1e6..1e6f64, 1..40),
            rot in 0usize..40,
            num in 1usize..20,
        ) {
            let p = prob(num as f64 / 20.0);
            let before = sample_quantile(&sample(&values), p);
            let r = rot % values.len();
            values.rotate_left(r);
            values.reverse();
            let after = sample_quantile(&sample(&values), p);
            prop_assert_eq!(before, after);
        }

        #[test]
        fn quantile_affine_equivariance(
            values in proptest::collection::vec(-100.0..100.0f64, 1..30),
            a in 0.01..50.0f64,
            b in -50.0..50.0f64,
            num in 1usize..20,
        ) {
            let p = prob(num as f64 / 20.0);
            let base = sample_quantile(&sample(&values), p);
            let mapped: Vec<f64> = values.iter().map(|x| a * x + b).collect();
            let got = sample_quantile(&sample(&mapped), p);
            prop_assert!((got - (a * base + b)).abs() <= 1e-9 * (1.0 + got.abs()));
        }

        #[test]
        fn quantile_is_generalized_ecdf_inverse(
            values in proptest::collection::vec(-100.0..100.0f64, 1..30),
            num in 1usize..32,
        ) {
            // dyadic p keeps both evaluation routes exact
            let p = prob(num as f64 / 32.0);
            let xs = sample(&values);
            let q = sample_quantile(&xs, p);
            // q = inf{ t : ecdf(t) >= p }: ecdf reaches p at q ...
            prop_assert!(ecdf_eval(&xs, q) >= p.value());
            // ... and not at any observed point strictly below q
            for &x in xs.values() {
                if x < q {
                    prop_assert!(ecdf_eval(&xs, x) < p.value());
                }
            }
        }
    }
}
