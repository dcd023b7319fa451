//! Covariance of the Gaussian limit of the scaled median process.

use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Result};

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(invalid(name, format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `E[X(s) X(t)] = sqrt(st) * asin(min(s,t) / sqrt(st))`.
pub fn limit_covariance(s: f64, t: f64) -> Result<f64> {
    check_time("s", s)?;
    check_time("t", t)?;
    let st = s * t;
    if st == 0.0 {
        return Ok(0.0);
    }
    let root = st.sqrt();
    // rounding can push the ratio a hair above 1
    let arg = (s.min(t) / root).clamp(-1.0, 1.0);
    Ok(root * arg.asin())
}

/// `E|X(t) - X(s)|^2` for `0 <= s <= t`.
pub fn increment_variance(s: f64, t: f64) -> Result<f64> {
    check_time("s", s)?;
    check_time("t", t)?;
    if s > t {
        return Err(invalid("s", format!("need s <= t, got s = {s}, t = {t}")));
    }
    if s == t {
        return Ok(0.0);
    }
    if s == 0.0 {
        return Ok(FRAC_PI_2 * t);
    }
    let arg = (s / t).sqrt().clamp(0.0, 1.0);
    Ok(FRAC_PI_2 * t + FRAC_PI_2 * s - 2.0 * (s * t).sqrt() * arg.asin())
}

/// Covariance of fractional Brownian motion with Hurst index `hurst`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.abs().powf(h2) + t.abs().powf(h2) - (t - s).abs().powf(h2))
}
