//! Goodness-of-fit helpers used to check noise distributions.

/// CDF of `Laplace(0, scale)`.
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// CDF of the difference of two independent `Laplace(0, scale)` variables.
pub fn laplace_difference_cdf(x: f64, scale: f64) -> f64 {
    // Density (b + |x|) e^{-|x|/b} / (4 b^2); tail mass (2b + |x|) e^{-|x|/b} / (4b).
    let a = x.abs();
    let tail = (2.0 * scale + a) * (-a / scale).exp() / (4.0 * scale);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic `D = sup |F_n − F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value of a KS statistic `d` over `n` samples
/// (Kolmogorov distribution with Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Runs a KS test and returns `(D, p)`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let d = ks_statistic(samples, cdf);
    (d, ks_pvalue(d, samples.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_cdf_basics() {
        assert_eq!(laplace_cdf(0.0, 2.0), 0.5);
        assert!((laplace_cdf(1.0, 1.0) - (1.0 - 0.5 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((laplace_cdf(-3.0, 1.5) + laplace_cdf(3.0, 1.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn difference_cdf_matches_numeric_convolution() {
        // Trapezoid integration of the convolved density as an independent check.
        let b = 1.3;
        let pdf = |x: f64| (b + x.abs()) * (-x.abs() / b).exp() / (4.0 * b * b);
        let mut acc = 0.0;
        let h = 1e-3;
        let mut x = -40.0;
        while x < 1.7 {
            acc += 0.5 * (pdf(x) + pdf(x + h)) * h;
            x += h;
        }
        assert!((acc - laplace_difference_cdf(x, b)).abs() < 1e-5);
    }

    #[test]
    fn ks_pvalue_reference_points() {
        // Kolmogorov distribution: P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.010.
        let n = 1_000_000;
        assert!((ks_pvalue(1.36 / (n as f64).sqrt(), n) - 0.0494).abs() < 1e-3);
        assert!((ks_pvalue(1.63 / (n as f64).sqrt(), n) - 0.0098).abs() < 1e-3);
        assert_eq!(ks_pvalue(0.0, 10), 1.0);
    }

    #[test]
    fn ks_statistic_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) <= 0.5 / n as f64 + 1e-12);
    }
}
