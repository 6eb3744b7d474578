use super::MetricsError;

const MAX_CF_TERMS: usize = 300;
const CF_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
/// Bracket width at which quantile bisection stops.
const QUANTILE_TOLERANCE: f64 = 1e-12;

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_CF_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `I_x(a, b)` for `a, b > 0` and `x` in `[0, 1]`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = libm::exp(a * libm::log(x) + b * libm::log1p(-x) - ln_beta(a, b));
    // The fraction converges fast only below the mean; use the symmetry
    // I_x(a, b) = 1 - I_{1-x}(b, a) above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Inverse of the Beta(a, b) CDF by bisection.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > QUANTILE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> Result<(f64, f64), MetricsError> {
    if n == 0 {
        return Err(MetricsError::InvalidParameter("n must be >= 1"));
    }
    if k > n {
        return Err(MetricsError::InvalidParameter("k must not exceed n"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::InvalidParameter("alpha must be in (0, 1)"));
    }
    let (kf, nf) = (k as f64, n as f64);
    let low = if k == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, kf, nf - kf + 1.0)
    };
    let high = if k == n {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, kf + 1.0, nf - kf)
    };
    Ok((low, high))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_conventions() {
        assert_eq!(clopper_pearson(10, 10, 0.05).unwrap().1, 1.0);
        assert_eq!(clopper_pearson(0, 10, 0.05).unwrap().0, 0.0);
    }

    #[test]
    fn zero_successes_closed_form() {
        let (_, high) = clopper_pearson(0, 10, 0.05).unwrap();
        let closed = 1.0 - libm::pow(0.025, 0.1);
        assert!((high - closed).abs() < 1e-9, "{high} vs {closed}");
        assert!((high - 0.3085).abs() < 1e-4);
    }

    #[test]
    fn seven_of_ten() {
        let (lo, hi) = clopper_pearson(7, 10, 0.05).unwrap();
        assert!((lo - 0.348).abs() < 1e-3, "{lo}");
        assert!((hi - 0.933).abs() < 1e-3, "{hi}");
    }

    #[test]
    fn incomplete_beta_special_cases() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a.
        for x in [0.1, 0.5, 0.93] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0) - x).abs() < 1e-14);
            assert!((regularized_incomplete_beta(x, 3.0, 1.0) - x * x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(clopper_pearson(1, 0, 0.05).is_err());
        assert!(clopper_pearson(3, 2, 0.05).is_err());
        assert!(clopper_pearson(1, 2, 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn wider_confidence_nests(n in 1u64..200, k_frac in 0.0f64..=1.0) {
            let k = (k_frac * n as f64).round() as u64;
            let (lo95, hi95) = clopper_pearson(k, n, 0.05).unwrap();
            let (lo99, hi99) = clopper_pearson(k, n, 0.01).unwrap();
            proptest::prop_assert!(lo99 <= lo95 + 1e-12 && hi95 <= hi99 + 1e-12);
            let p = k as f64 / n as f64;
            proptest::prop_assert!(lo95 <= p + 1e-12 && p <= hi95 + 1e-12);
        }
    }
}
