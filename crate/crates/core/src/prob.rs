//! Probability newtype: a real number strictly inside (0, 1).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A probability strictly between 0 and 1.
///
/// Used for quantile levels and test levels. The open-interval invariant is
/// enforced at construction so downstream numerics never have to re-check it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    /// Wraps `value`, requiring `0 < value < 1`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie strictly in (0,1), got {value}"
            )))
        }
    }

    /// The underlying value.
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The complementary probability `1 - p`.
    #[inline]
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Checks that `probs` is nonempty and strictly increasing.
pub fn validate_probs(probs: &[Probability]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::domain("at least one quantile probability required"));
    }
    for pair in probs.windows(2) {
        if pair[0].value() >= pair[1].value() {
            return Err(Error::domain(format!(
                "quantile probabilities must be strictly increasing, got {} then {}",
                pair[0].value(),
                pair[1].value()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_boundary_and_outside_values() {
        for bad in [0.0, 1.0, -0.2, 1.5, f64::NAN, f64::INFINITY] {
            assert!(Probability::new(bad).is_err(), "accepted {bad}");
        }
        assert_eq!(Probability::new(0.5).unwrap().value(), 0.5);
    }

    #[test]
    fn validates_strictly_increasing() {
        let p = |v| Probability::new(v).unwrap();
        assert!(validate_probs(&[p(0.25), p(0.5), p(0.75)]).is_ok());
        assert!(validate_probs(&[p(0.5), p(0.5)]).is_err());
        assert!(validate_probs(&[p(0.75), p(0.25)]).is_err());
        assert!(validate_probs(&[]).is_err());
    }
}
