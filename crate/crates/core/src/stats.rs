//! Small statistics helpers shared by tests and diagnostics:
//! Kolmogorov–Smirnov distances, the asymptotic Kolmogorov tail, an
//! Anderson–Darling statistic against a fully specified normal, and a
//! least-squares line fit.

/// One-sample Kolmogorov–Smirnov distance against a cdf.
pub fn ks_distance_to_cdf<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let c = cdf(x);
        let hi = (i as f64 + 1.0) / n - c;
        let lo = c - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let gap = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        d = d.max(gap);
    }
    d
}

/// Asymptotic Kolmogorov tail: `P(sup |B(t)| > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Approximate two-sample KS p-value.
pub fn ks_two_sample_pvalue(a: &mut [f64], b: &mut [f64]) -> f64 {
    let d = ks_distance_two_sample(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    kolmogorov_tail(ne.sqrt() * d)
}

/// Anderson–Darling statistic of `sample` against the standard normal
/// with both parameters fixed (case-0 critical value at 1% is 3.857).
pub fn anderson_darling_standard_normal(sample: &mut [f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let z = normal.cdf(sample[i]).clamp(1e-300, 1.0 - 1e-16);
        let zr = normal.cdf(sample[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
        s += (2.0 * i as f64 + 1.0) * (z.ln() + (1.0 - zr).ln());
    }
    -nf - s / nf
}

/// Ordinary least squares for `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, slope_stderr)`; the standard error uses
/// the usual residual variance estimate and is zero when fewer than
/// three points are given or the fit is exact.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2, "need at least two points");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    assert!(sxx > 0.0, "degenerate abscissae");
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if x.len() < 3 {
        return (slope, intercept, 0.0);
    }
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let r = v - (intercept + slope * u);
            r * r
        })
        .sum();
    let var = ss_res / (n - 2.0);
    (slope, intercept, (var / sxx).sqrt())
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_uniform_sample_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sample: Vec<f64> = (0..20000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_distance_to_cdf(&mut sample, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.015, "d = {d}");
    }

    #[test]
    fn ks_two_sample_same_distribution_has_large_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>()).collect();
        assert!(ks_two_sample_pvalue(&mut a, &mut b) > 0.01);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.5, 3.5, 5.5, 7.5];
        let (slope, intercept, se) = fit_line(&x, &y);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept + 0.5).abs() < 1e-12);
        assert!(se < 1e-12);
    }
}
