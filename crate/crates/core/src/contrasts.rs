//! Hypothesis matrices for quantile contrasts in factorial designs.
//!
//! A contrast matrix H (rows summing to zero) encodes the null hypothesis
//! H q = 0 on the group-major quantile vector q. One-way group effects and
//! two-way main/interaction effects are built from centering matrices and
//! Kronecker products; arbitrary hypotheses enter through [`Effect::Custom`].
//! Every hypothesis is normalized to the projection T = H'(HH')+ H, which is
//! symmetric, idempotent and unique for the row space of H.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::prob::{validate_probs, Probability};
use serde::{Deserialize, Serialize};

/// Factorial layout of the groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Design {
    /// k groups of a single factor.
    OneWay { groups: usize },
    /// a x b crossed layout; groups ordered lexicographically by (level of A,
    /// level of B), matching the column order of the quantile vector.
    TwoWay { a: usize, b: usize },
}

impl Design {
    /// Total number of groups (cells).
    pub fn k(&self) -> usize {
        match *self {
            Design::OneWay { groups } => groups,
            Design::TwoWay { a, b } => a * b,
        }
    }
}

/// Which effect the null hypothesis removes.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    /// No group effect in a one-way layout.
    Group,
    /// No main effect of factor A in a two-way layout.
    MainA,
    /// No main effect of factor B in a two-way layout.
    MainB,
    /// No A x B interaction effect in a two-way layout.
    Interaction,
    /// A user-supplied contrast matrix with k*m columns, already spanning
    /// the quantile dimension (no coefficient lift is applied).
    Custom(Matrix),
}

/// Full specification of a QANOVA null hypothesis.
#[derive(Debug, Clone)]
pub struct HypothesisSpec {
    pub design: Design,
    pub effect: Effect,
    pub probs: Vec<Probability>,
    /// Coefficients combining the m quantiles of each group into the scalar
    /// the contrast acts on, e.g. (-1, 1) with probs (0.25, 0.75) for IQRs.
    pub coefs: Vec<f64>,
}

impl HypothesisSpec {
    pub fn new(
        design: Design,
        effect: Effect,
        probs: Vec<Probability>,
        coefs: Vec<f64>,
    ) -> Result<Self> {
        validate_probs(&probs)?;
        if design.k() == 0 {
            return Err(Error::domain("design must contain at least one group"));
        }
        match effect {
            Effect::Custom(ref h) => {
                if h.cols() != design.k() * probs.len() {
                    return Err(Error::dimension(format!(
                        "custom contrast has {} columns, expected k*m = {}",
                        h.cols(),
                        design.k() * probs.len()
                    )));
                }
            }
            _ => {
                if coefs.len() != probs.len() {
                    return Err(Error::dimension(format!(
                        "coefficient vector length {} does not match {} probabilities",
                        coefs.len(),
                        probs.len()
                    )));
                }
                if coefs.iter().all(|&c| c == 0.0) {
                    return Err(Error::domain("coefficient vector must be nonzero"));
                }
            }
        }
        match (&design, &effect) {
            (Design::OneWay { .. }, Effect::MainA | Effect::MainB | Effect::Interaction) => {
                return Err(Error::domain(
                    "main and interaction effects require a two-way design",
                ))
            }
            (Design::TwoWay { .. }, Effect::Group) => {
                return Err(Error::domain(
                    "the group effect applies to one-way designs; use mainA, mainB or interaction",
                ))
            }
            _ => {}
        }
        Ok(HypothesisSpec {
            design,
            effect,
            probs,
            coefs,
        })
    }

    /// Convenience constructor for a one-way median hypothesis.
    pub fn oneway_median(groups: usize) -> Result<Self> {
        HypothesisSpec::new(
            Design::OneWay { groups },
            Effect::Group,
            vec![Probability::new(0.5)?],
            vec![1.0],
        )
    }

    /// Convenience constructor for a one-way equal-IQR hypothesis.
    pub fn oneway_iqr(groups: usize) -> Result<Self> {
        HypothesisSpec::new(
            Design::OneWay { groups },
            Effect::Group,
            vec![Probability::new(0.25)?, Probability::new(0.75)?],
            vec![-1.0, 1.0],
        )
    }
}

/// Built hypothesis: contrast H, projection T and their common rank.
#[derive(Debug, Clone)]
pub struct HypothesisMatrices {
    h: Matrix,
    t: Matrix,
    rank: usize,
}

impl HypothesisMatrices {
    pub fn contrast(&self) -> &Matrix {
        &self.h
    }

    pub fn projection(&self) -> &Matrix {
        &self.t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension of the quantile vector the hypothesis acts on (k*m).
    pub fn dim(&self) -> usize {
        self.t.rows()
    }
}

/// Centering matrix P_k = I_k - J_k/k: symmetric, idempotent, rank k-1.
pub fn centering_matrix(k: usize) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    let off = 1.0 / k as f64;
    for r in 0..k {
        for c in 0..k {
            m.set(r, c, if r == c { 1.0 - off } else { -off });
        }
    }
    m
}

/// Scaled all-ones matrix J_k / k.
fn averaging_matrix(k: usize) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    let v = 1.0 / k as f64;
    for r in 0..k {
        for c in 0..k {
            m.set(r, c, v);
        }
    }
    m
}

/// Projection T = H'(HH')+ H onto the row space of H.
pub fn projection_t(h: &Matrix) -> Result<Matrix> {
    let ht = h.transpose();
    let hht = h.matmul(&ht);
    Ok(ht.matmul(&hht.pinv()?).matmul(h))
}

fn base_effect_matrix(design: Design, effect: &Effect) -> Matrix {
    match (design, effect) {
        (Design::OneWay { groups }, Effect::Group) => centering_matrix(groups),
        (Design::TwoWay { a, b }, Effect::MainA) => {
            centering_matrix(a).kron(&averaging_matrix(b))
        }
        (Design::TwoWay { a, b }, Effect::MainB) => {
            averaging_matrix(a).kron(&centering_matrix(b))
        }
        (Design::TwoWay { a, b }, Effect::Interaction) => {
            centering_matrix(a).kron(&centering_matrix(b))
        }
        _ => unreachable!("combination rejected by HypothesisSpec::new"),
    }
}

/// Maximum absolute row sum, used to verify the contrast property H 1 = 0.
fn max_abs_row_sum(h: &Matrix) -> f64 {
    (0..h.rows())
        .map(|r| (0..h.cols()).map(|c| h.get(r, c)).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Builds H, T and the rank for a hypothesis specification.
///
/// For built-in effects the contrast is the base effect matrix lifted by the
/// coefficient row vector, H = H_base kron c'; with m = 1 and c = (1) the
/// lift is the identity operation.
pub fn build_hypothesis(spec: &HypothesisSpec) -> Result<HypothesisMatrices> {
    let h = match &spec.effect {
        Effect::Custom(h) => {
            let scale = h
                .data()
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()))
                .max(1.0);
            if max_abs_row_sum(h) > 1e-10 * scale {
                return Err(Error::domain(
                    "not a contrast matrix: rows must sum to zero",
                ));
            }
            h.clone()
        }
        _ => {
            let base = base_effect_matrix(spec.design, &spec.effect);
            let coef_row = Matrix::new(1, spec.coefs.len(), spec.coefs.clone())?;
            base.kron(&coef_row)
        }
    };
    let t = projection_t(&h)?;
    let rank = t.numerical_rank()?;
    debug_assert_eq!(rank, h.numerical_rank().unwrap());
    Ok(HypothesisMatrices { h, t, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn centering_matrix_properties() {
        let p1 = centering_matrix(1);
        assert_eq!(p1.get(0, 0), 0.0);

        let p2 = centering_matrix(2);
        let expected =
            Matrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        assert!(max_abs_diff(&p2, &expected) < 1e-15);

        for k in 1..=10 {
            let p = centering_matrix(k);
            // P 1 = 0
            let ones = vec![1.0; k];
            assert!(p.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
            // P^2 = P
            assert!(max_abs_diff(&p.matmul(&p), &p) < 1e-12);
        }
    }

    #[test]
    fn iqr_hypothesis_matches_reference_contrast() {
        // H = P_4 kron (-1, 1)
        let spec = HypothesisSpec::oneway_iqr(4).unwrap();
        let built = build_hypothesis(&spec).unwrap();
        let expected = centering_matrix(4).kron(&Matrix::new(1, 2, vec![-1.0, 1.0]).unwrap());
        assert!(max_abs_diff(built.contrast(), &expected) < 1e-15);
        assert_eq!(built.rank(), 3);
    }

    #[test]
    fn interaction_hypothesis_two_by_two() {
        let spec = HypothesisSpec::new(
            Design::TwoWay { a: 2, b: 2 },
            Effect::Interaction,
            vec![prob(0.5)],
            vec![1.0],
        )
        .unwrap();
        let built = build_hypothesis(&spec).unwrap();
        let expected = centering_matrix(2).kron(&centering_matrix(2));
        assert!(max_abs_diff(built.contrast(), &expected) < 1e-15);
        assert_eq!(built.rank(), 1);
    }

    #[test]
    fn projection_of_centering_matrix_is_itself() {
        for k in 2..=6 {
            let p = centering_matrix(k);
            let t = projection_t(&p).unwrap();
            assert!(max_abs_diff(&t, &p) < 1e-10);
        }
        let id = Matrix::identity(5);
        assert!(max_abs_diff(&projection_t(&id).unwrap(), &id) < 1e-12);
    }

    #[test]
    fn projection_invariant_to_row_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = centering_matrix(3).kron(&Matrix::new(1, 2, vec![-1.0, 1.0]).unwrap());
        let t = projection_t(&h).unwrap();
        for _ in 0..10 {
            let mut scaled = h.clone();
            for r in 0..h.rows() {
                let d: f64 = rng.gen_range(0.1..5.0);
                for c in 0..h.cols() {
                    scaled.set(r, c, d * h.get(r, c));
                }
            }
            let ts = projection_t(&scaled).unwrap();
            assert!(max_abs_diff(&t, &ts) < 1e-10);
        }
    }

    #[test]
    fn built_hypotheses_are_proper_projections() {
        let cases: Vec<HypothesisSpec> = vec![
            HypothesisSpec::oneway_median(4).unwrap(),
            HypothesisSpec::oneway_iqr(5).unwrap(),
            HypothesisSpec::new(
                Design::TwoWay { a: 2, b: 3 },
                Effect::MainA,
                vec![prob(0.5)],
                vec![1.0],
            )
            .unwrap(),
            HypothesisSpec::new(
                Design::TwoWay { a: 3, b: 2 },
                Effect::MainB,
                vec![prob(0.25), prob(0.75)],
                vec![-1.0, 1.0],
            )
            .unwrap(),
            HypothesisSpec::new(
                Design::TwoWay { a: 3, b: 4 },
                Effect::Interaction,
                vec![prob(0.5)],
                vec![1.0],
            )
            .unwrap(),
        ];
        for spec in &cases {
            let built = build_hypothesis(spec).unwrap();
            let t = built.projection();
            let dim = built.dim();
            // H 1 = 0 and T 1 = 0
            let ones = vec![1.0; dim];
            assert!(built
                .contrast()
                .mul_vec(&ones)
                .iter()
                .all(|v| v.abs() < 1e-10));
            assert!(t.mul_vec(&ones).iter().all(|v| v.abs() < 1e-10));
            // T symmetric idempotent
            assert!(max_abs_diff(t, &t.transpose()) < 1e-10);
            assert!(max_abs_diff(&t.matmul(t), t) < 1e-10);
            // null spaces of H and T coincide on random vectors
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..200 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let hx: f64 = built
                    .contrast()
                    .mul_vec(&x)
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0, f64::max);
                let tx: f64 = t.mul_vec(&x).iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert_eq!(hx < 1e-9, tx < 1e-9);
            }
        }
    }

    #[test]
    fn expected_ranks() {
        for (a, b) in [(2usize, 2usize), (2, 3), (3, 4)] {
            let main_a = build_hypothesis(
                &HypothesisSpec::new(
                    Design::TwoWay { a, b },
                    Effect::MainA,
                    vec![prob(0.5)],
                    vec![1.0],
                )
                .unwrap(),
            )
            .unwrap();
            assert_eq!(main_a.rank(), a - 1);
            let inter = build_hypothesis(
                &HypothesisSpec::new(
                    Design::TwoWay { a, b },
                    Effect::Interaction,
                    vec![prob(0.5)],
                    vec![1.0],
                )
                .unwrap(),
            )
            .unwrap();
            assert_eq!(inter.rank(), (a - 1) * (b - 1));
        }
        for k in 2..=6 {
            let built = build_hypothesis(&HypothesisSpec::oneway_median(k).unwrap()).unwrap();
            assert_eq!(built.rank(), k - 1);
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        // non-contrast custom matrix
        let bad = Matrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let spec = HypothesisSpec::new(
            Design::OneWay { groups: 4 },
            Effect::Custom(bad),
            vec![prob(0.5)],
            vec![],
        )
        .unwrap();
        let err = build_hypothesis(&spec).unwrap_err();
        assert!(err.to_string().contains("not a contrast matrix"));

        // wrong custom width
        let h = Matrix::zeros(1, 3);
        assert!(HypothesisSpec::new(
            Design::OneWay { groups: 4 },
            Effect::Custom(h),
            vec![prob(0.5)],
            vec![],
        )
        .is_err());

        // effect/design mismatches
        assert!(HypothesisSpec::new(
            Design::OneWay { groups: 4 },
            Effect::MainA,
            vec![prob(0.5)],
            vec![1.0],
        )
        .is_err());
        assert!(HypothesisSpec::new(
            Design::TwoWay { a: 2, b: 2 },
            Effect::Group,
            vec![prob(0.5)],
            vec![1.0],
        )
        .is_err());

        // coefficient length mismatch
        assert!(HypothesisSpec::new(
            Design::OneWay { groups: 3 },
            Effect::Group,
            vec![prob(0.25), prob(0.75)],
            vec![1.0],
        )
        .is_err());
    }
}
