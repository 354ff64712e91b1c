//! Independent oracles shared by the oracle and acceptance suites.
#![allow(dead_code)] // each test binary uses its own subset

//!
//! Nothing in here calls the implementation paths it is used to check:
//! the normal CDF comes from the erf Maclaurin series, the chi-square CDF
//! from quadrature of the density, bootstrap weights from brute-force
//! enumeration of all resamples, and binomial tails from integer binomial
//! coefficients.

/// erf via its Maclaurin series; accurate to ~1e-13 for |x| <= 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -x * x / k;
        let contribution = term / (2.0 * k + 1.0);
        sum += contribution;
        if contribution.abs() < 1e-18 * sum.abs().max(1e-300) || k > 500.0 {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

pub fn normal_cdf_oracle(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Standard normal quantile by bisection against the series CDF.
pub fn normal_quantile_oracle(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (-9.0_f64, 9.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_oracle(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gamma(df/2) for integer df >= 1 in closed form.
fn gamma_half_integer(df: u32) -> f64 {
    if df.is_multiple_of(2) {
        // (df/2 - 1)!
        (1..df / 2).map(f64::from).product()
    } else {
        // Gamma(1/2 + k) = sqrt(pi) (2k)! / (4^k k!)
        let k = (df - 1) / 2;
        let mut value = std::f64::consts::PI.sqrt();
        for i in 0..k {
            value *= 0.5 + f64::from(i);
        }
        value
    }
}

/// Chi-square CDF by composite Simpson quadrature after substituting
/// t = u^2, which removes the df = 1 endpoint singularity.
pub fn chisq_cdf_quadrature(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let norm = 2.0 / (2.0_f64.powf(f64::from(df) / 2.0) * gamma_half_integer(df));
    let integrand = |u: f64| norm * u.powi(df as i32 - 1) * (-0.5 * u * u).exp();
    let upper = x.sqrt();
    let panels = 20_000;
    let h = upper / panels as f64;
    let mut sum = integrand(0.0) + integrand(upper);
    for i in 1..panels {
        let u = i as f64 * h;
        sum += integrand(u) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (sum * h / 3.0).min(1.0)
}

/// Chi-square quantile by bisection against the quadrature CDF.
pub fn chisq_quantile_oracle(p: f64, df: u32) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let mut hi = 1.0_f64;
    while chisq_cdf_quadrature(hi, df) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0_f64;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if chisq_cdf_quadrature(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Distribution of the resampled order-statistic index by enumerating all
/// n^n bootstrap index tuples; `p` must make n*p exact (dyadic levels).
pub fn bootstrap_weights_enumeration(n: usize, p: f64) -> Vec<f64> {
    assert!((1..=8).contains(&n));
    let c = (n as f64 * p).ceil() as usize; // 1-based order statistic
    let total = (n as u64).pow(n as u32);
    let mut counts = vec![0u64; n];
    let mut tuple = vec![0usize; n];
    for _ in 0..total {
        // the c-th smallest entry of the index tuple
        let mut sorted = tuple.clone();
        sorted.sort_unstable();
        counts[sorted[c - 1]] += 1;
        // odometer increment in base n
        for slot in tuple.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Binomial CDF from exact integer coefficients (n <= 62 to keep u128 safe).
pub fn binom_cdf_exact(k: i64, n: u32, p: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if k as u32 >= n {
        return 1.0;
    }
    let mut choose: u128 = 1;
    let mut sum = 0.0;
    for j in 0..=k as u32 {
        if j > 0 {
            choose = choose * u128::from(n - j + 1) / u128::from(j);
        }
        sum += choose as f64 * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    sum.min(1.0)
}
