//! Small estimators and goodness-of-fit statistics for Monte Carlo output.

/// Standard error of a proportion `p` estimated from `n` trials.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fraction of `sorted` strictly greater than `x`.
pub fn fraction_above(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let at_or_below = sorted.partition_point(|&v| v <= x);
    (sorted.len() - at_or_below) as f64 / sorted.len() as f64
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference CDF, checked at the
/// sample points from both sides. `sorted` may contain `+inf` entries.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        if !x.is_finite() {
            break;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Largest gap between an empirical CCDF and reference values on a grid.
pub fn max_ccdf_gap(sorted: &[f64], grid: &[f64], reference: &[f64]) -> f64 {
    grid.iter()
        .zip(reference)
        .map(|(&x, &r)| (fraction_above(sorted, x) - r).abs())
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic; both inputs sorted ascending.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample KS rejection threshold at level `alpha`:
/// `sqrt(-ln(alpha / 2) / 2) * sqrt((n + m) / (n m))`.
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson statistic `sum (O - E)^2 / E`.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_stderr_values() {
        assert_eq!(binomial_stderr(0.0, 10), 0.0);
        assert!((binomial_stderr(0.5, 100) - 0.05).abs() < 1e-15);
        assert!(binomial_stderr(0.5, 0).is_nan());
    }

    #[test]
    fn mean_stderr_small() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fraction_above_ties_and_inf() {
        let s = [1.0, 2.0, 2.0, 3.0, f64::INFINITY];
        assert_eq!(fraction_above(&s, 0.0), 1.0);
        assert_eq!(fraction_above(&s, 2.0), 0.4);
        assert_eq!(fraction_above(&s, 10.0), 0.2);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let n = 1000;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_one_sample(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_known() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
        let c = ks_two_sample_critical(0.01, 100_000, 100_000);
        assert!((c / (2.0f64 / 100_000.0).sqrt() - 1.6276).abs() < 1e-3);
    }

    #[test]
    fn chi_square_zero_on_match() {
        assert_eq!(chi_square(&[5, 5], &[5.0, 5.0]), 0.0);
        assert_eq!(chi_square(&[6, 4], &[5.0, 5.0]), 0.4);
    }
}
