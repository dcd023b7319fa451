//! Standard normal primitives.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};

/// `ln(sqrt(2 pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// `1 / sqrt(2 pi)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this point `Phi(x)` is evaluated through its asymptotic series in
/// log space; the direct value is within a few decades of underflow.
pub const LOG_CDF_ASYMPTOTIC_BELOW: f64 = -37.0;

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

pub fn ln_std_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `ln Phi(x)` together with a flag that is set when the asymptotic tail
/// series had to be used.
pub fn ln_std_normal_cdf(x: f64) -> (f64, bool) {
    if x < LOG_CDF_ASYMPTOTIC_BELOW {
        // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
        let z = 1.0 / (x * x);
        let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
        (ln_std_normal_pdf(x) - (-x).ln() + series.ln(), true)
    } else if x > 0.0 {
        ((-std_normal_cdf(-x)).ln_1p(), false)
    } else {
        (std_normal_cdf(x).ln(), false)
    }
}

/// Gaussian tail bound `e^{-x^2/2} / (x sqrt(2 pi))`, an upper bound for `Phi(-x)`.
pub fn mills_upper_bound(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid("x", format!("Mills bound needs x > 0, got {x}")));
    }
    Ok((-0.5 * x * x).exp() / (x * (2.0 * PI).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(40.0) - 1.0).abs() <= 1e-15);
        // mpmath ncdf(-1) at 40 digits
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() <= 1e-15);
        assert!((std_normal_cdf(-5.0) - 2.866_515_718_791_939e-7).abs() <= 1e-20);
    }

    #[test]
    fn log_cdf_matches_direct_value_and_tail_series() {
        for &x in &[-36.9, -20.0, -3.0, 0.0, 2.0, 9.0] {
            let (l, degraded) = ln_std_normal_cdf(x);
            assert!(!degraded);
            assert!((l - std_normal_cdf(x).ln()).abs() < 1e-12 * (1.0 + l.abs()));
        }
        // both branches should agree around the switch point
        let x = -37.0 - 1e-9;
        let (a, da) = ln_std_normal_cdf(x);
        let (_, db) = ln_std_normal_cdf(-37.0 + 1e-9);
        assert!(da && !db);
        assert!((a - std_normal_cdf(x).ln()).abs() < 1e-9);
        // mpmath log(ncdf(-40))
        let (l, _) = ln_std_normal_cdf(-40.0);
        assert!((l - (-804.608_442_013_753_8)).abs() < 1e-9);
    }

    #[test]
    fn mills_bound() {
        let b = mills_upper_bound(1.0).unwrap();
        assert!((b - 0.241_970_724_519_143_35).abs() < 1e-15);
        assert!(b >= std_normal_cdf(-1.0));
        let b10 = mills_upper_bound(10.0).unwrap();
        assert!(b10 > 0.0 && b10 < 1e-22);
        assert!(mills_upper_bound(0.0).is_err());
        assert!(mills_upper_bound(-1.0).is_err());
    }
}
