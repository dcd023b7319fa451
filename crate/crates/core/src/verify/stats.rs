//! Sample statistics: covariance with standard errors, Kolmogorov–Smirnov
//! distances and log-log trend fits.

use crate::error::{invalid, Error, Result};
use crate::sim::MCEstimate;

/// Minimum number of pairs accepted by [`estimate_covariance`].
pub const MIN_COVARIANCE_PAIRS: usize = 1000;

/// Unbiased sample covariance with a delta-method standard error.
pub fn estimate_covariance(a: &[f64], b: &[f64], seed: u64) -> Result<MCEstimate> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let m = a.len();
    if m < MIN_COVARIANCE_PAIRS {
        return Err(invalid(
            "samples",
            format!("need at least {MIN_COVARIANCE_PAIRS} pairs, got {m}"),
        ));
    }
    let mf = m as f64;
    let ma = a.iter().sum::<f64>() / mf;
    let mb = b.iter().sum::<f64>() / mf;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let cov = prods.iter().sum::<f64>() / (mf - 1.0);
    let spread = prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (mf - 1.0);
    Ok(MCEstimate {
        mean: cov,
        std_err: (spread / mf).sqrt(),
        reps: m,
        seed,
        warning: None,
    })
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_emp - F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    let s = sorted(samples);
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("samples", "both sample sets must be nonempty"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample critical value `c(alpha) sqrt((n + m) / (n m))`
/// with `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(invalid("points", "need at least two points for a slope"));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(invalid("points", format!("log-log fit needs positive finite values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "abscissae are all equal"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normal::std_normal_cdf;
    use crate::rng::Stream;

    fn normals(seed: u64, m: usize) -> Vec<f64> {
        let mut s = Stream::new(seed, 99, 0, 0);
        (0..m).map(|_| s.normal()).collect()
    }

    #[test]
    fn covariance_of_identical_and_independent() {
        let a = normals(1, 5000);
        let b = normals(2, 5000);
        let same = estimate_covariance(&a, &a, 0).unwrap();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64;
        assert!((same.mean - var).abs() < 1e-12);
        let ind = estimate_covariance(&a, &b, 0).unwrap();
        assert!(ind.mean.abs() <= 4.0 * ind.std_err);
        assert!(matches!(estimate_covariance(&a, &b[..10], 0), Err(Error::SizeMismatch { .. })));
        assert!(estimate_covariance(&a[..999], &b[..999], 0).is_err());
    }

    #[test]
    fn ks_self_consistency() {
        let a = normals(3, 10_000);
        let d = ks_distance(&a, std_normal_cdf).unwrap();
        assert!(d < 0.03, "d = {d}");
        let constant = vec![0.0; 100];
        assert!(ks_distance(&constant, std_normal_cdf).unwrap() >= 0.5);
        assert!(ks_distance(&[], std_normal_cdf).is_err());
    }

    #[test]
    fn ks_two_sample_cases() {
        let a = normals(4, 3000);
        let b = normals(5, 3000);
        assert!(ks_two_sample(&a, &b).unwrap() < ks_two_sample_critical(0.01, 3000, 3000));
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = b.iter().map(|x| x + 100.0).collect();
        assert_eq!(ks_two_sample(&a, &shifted).unwrap(), 1.0);
        assert!((ks_two_sample_critical(0.01, 1, 1) / 2f64.sqrt() - 1.627_624).abs() < 1e-6);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 0.7).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0]).is_err());
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }
}
