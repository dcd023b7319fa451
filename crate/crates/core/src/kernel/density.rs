//! Law of the median `M_n(1)` of `n` standard normals.

use super::normal::{ln_std_normal_cdf, ln_std_normal_pdf};
use super::quadrature::{integrate, QuadOptions};
use crate::error::{invalid, Result};

/// Rank of the median among `n` values, `floor((n + 1) / 2)`.
pub fn median_rank(n: usize) -> usize {
    (n + 1) / 2
}

pub fn ln_choose(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(invalid("n", "need at least one particle"));
    }
    Ok(())
}

/// Density of `M_n(1)`: `k C(n,k) Phi(x)^{k-1} Phi(-x)^{n-k} phi(x)`.
pub fn median_density(n: usize, x: f64) -> Result<f64> {
    check_n(n)?;
    Ok(ln_median_density(n, x).exp())
}

fn ln_median_density(n: usize, x: f64) -> f64 {
    let k = median_rank(n);
    let mut ln = (k as f64).ln() + ln_choose(n, k) + ln_std_normal_pdf(x);
    if k > 1 {
        ln += (k - 1) as f64 * ln_std_normal_cdf(x).0;
    }
    if n > k {
        ln += (n - k) as f64 * ln_std_normal_cdf(-x).0;
    }
    ln
}

/// Approximate standard deviation of `M_n(1)`, used to place quadrature breakpoints.
pub fn median_scale(n: usize) -> f64 {
    (std::f64::consts::FRAC_PI_2 / n as f64).sqrt().min(1.0)
}

fn density_breaks(n: usize) -> (f64, Vec<f64>) {
    let s = median_scale(n);
    let bound = (40.0 * s).min(40.0);
    let mut breaks = vec![0.0];
    for m in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        breaks.push(m * s);
        breaks.push(-m * s);
    }
    (bound, breaks)
}

const DENSITY_QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-300,
    rel_tol: 1e-12,
    max_intervals: 4000,
};

/// `P(M_n(1) <= x)` by quadrature of the density.
pub fn median_cdf(n: usize, x: f64) -> Result<f64> {
    check_n(n)?;
    let (bound, mut breaks) = density_breaks(n);
    let lo = (-bound).min(x - 4.0 * median_scale(n));
    if x <= -bound {
        breaks.clear();
    }
    let r = integrate(|t| ln_median_density(n, t).exp(), lo, x, &breaks, DENSITY_QUAD)?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// `P(M_n(1) <= x)` through the binomial count of particles below `x`.
pub fn median_cdf_binomial(n: usize, x: f64) -> Result<f64> {
    check_n(n)?;
    let k = median_rank(n);
    let lp = ln_std_normal_cdf(x).0;
    let lq = ln_std_normal_cdf(-x).0;
    let terms: Vec<f64> = (k..=n)
        .map(|j| ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq)
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok((max + sum.ln()).exp().min(1.0))
}

/// Integral of the density over the real line.
pub fn median_density_mass(n: usize) -> Result<f64> {
    check_n(n)?;
    let (bound, breaks) = density_breaks(n);
    let r = integrate(|t| ln_median_density(n, t).exp(), -bound, bound, &breaks, DENSITY_QUAD)?;
    Ok(r.value)
}

/// Left side and bound shape of the polynomial tail estimate for `X_n(1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TailCheck {
    /// `P(X_n(1) < -y)`
    pub lhs: f64,
    /// `y^{-kappa}`
    pub rhs_shape: f64,
}

pub fn tail_bound_check(n: usize, y: f64, kappa: f64) -> Result<TailCheck> {
    if n < 3 || n % 2 == 0 {
        return Err(invalid("n", format!("tail check needs odd n >= 3, got {n}")));
    }
    if !(y > 0.0) {
        return Err(invalid("y", format!("need y > 0, got {y}")));
    }
    if !(kappa > 2.0) {
        return Err(invalid("kappa", format!("need kappa > 2, got {kappa}")));
    }
    let lhs = median_cdf(n, -y / (n as f64).sqrt())?;
    Ok(TailCheck {
        lhs,
        rhs_shape: y.powf(-kappa),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normal::std_normal_pdf;

    #[test]
    fn single_particle_is_standard_normal() {
        for &x in &[-3.0, -0.5, 0.0, 1.2] {
            assert!((median_density(1, x).unwrap() - std_normal_pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn three_particles_at_zero() {
        let v = median_density(3, 0.0).unwrap();
        assert!((v - 1.5 * std_normal_pdf(0.0)).abs() < 1e-14);
        assert!((v - 0.598_413_420_602_149_1).abs() < 1e-14);
    }

    #[test]
    fn odd_n_is_symmetric() {
        for &x in &[0.1, 0.7, 2.0] {
            let a = median_density(5, x).unwrap();
            let b = median_density(5, -x).unwrap();
            assert!((a - b).abs() < 1e-15 * a.max(1.0));
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for n in [1usize, 3, 5, 11, 101, 1001] {
            let m = median_density_mass(n).unwrap();
            assert!((m - 1.0).abs() < 1e-9, "n={n} mass={m}");
        }
    }

    #[test]
    fn quadrature_cdf_matches_binomial_count() {
        for n in [3usize, 4, 11, 1001] {
            let s = median_scale(n);
            for m in [-6.0, -2.0, -0.5, 0.0, 1.0, 3.0] {
                let x = m * s;
                let a = median_cdf(n, x).unwrap();
                let b = median_cdf_binomial(n, x).unwrap();
                assert!((a - b).abs() < 1e-11 + 1e-9 * b, "n={n} x={x} {a} {b}");
            }
        }
    }

    #[test]
    fn tail_check_limits() {
        let far = tail_bound_check(1001, 200.0, 3.0).unwrap();
        assert!(far.lhs < 1e-300);
        let near = tail_bound_check(3, 1e-9, 3.0).unwrap();
        assert!((near.lhs - 0.5).abs() < 1e-8);
        assert!(tail_bound_check(4, 1.0, 3.0).is_err());
        assert!(tail_bound_check(5, 1.0, 2.0).is_err());
        assert!(median_density(0, 0.0).is_err());
    }
}
