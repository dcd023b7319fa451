//! Second-order expansions of `psi` and `p1` around the origin with
//! certified remainder bounds.

use std::f64::consts::PI;

use serde::Serialize;

use super::conditional::regime_exponent;
use super::normal::INV_SQRT_2PI;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub value: f64,
    /// Certified bound on `|exact - value|` when `valid`.
    pub remainder_bound: f64,
    pub valid: bool,
    /// Exponent with `y = delta^(1/2 + alpha)` (p1 expansion only).
    pub alpha: Option<f64>,
    /// Exponent with `x = -delta^(1/4 + beta)` (p1 expansion only).
    pub beta: Option<f64>,
}

impl ExpansionResult {
    fn invalid() -> Self {
        ExpansionResult {
            value: f64::NAN,
            remainder_bound: f64::INFINITY,
            valid: false,
            alpha: None,
            beta: None,
        }
    }
}

/// Expansion of `psi(x, y, delta)`:
///
/// `1/2 - atan(sqrt d)/(2 pi) + x/sqrt(2 pi) + y/(2 sqrt(2 pi))
///  + sqrt(d)/(4 pi) (x+y)^2 - y^2/(4 pi sqrt d)`
///
/// with remainder at most
/// `(|x|+|y|)^3 + |x| y^2 (|x|+|y|)/sqrt d + y^4/d^{3/2} + d^{3/2}(x+y)^2 + d(|x|+|y|)`
/// for all real `x, y`.
pub fn psi_expansion(x: f64, y: f64, delta: f64) -> Result<ExpansionResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    if !x.is_finite() || !y.is_finite() {
        return Ok(ExpansionResult::invalid());
    }
    let sd = delta.sqrt();
    let s = x + y;
    let value = 0.5 - sd.atan() / (2.0 * PI) + x * INV_SQRT_2PI + 0.5 * y * INV_SQRT_2PI
        + sd / (4.0 * PI) * s * s
        - y * y / (4.0 * PI * sd);
    let (ax, ay) = (x.abs(), y.abs());
    let l1 = ax + ay;
    let remainder_bound = l1.powi(3)
        + ax * ay * ay / sd * l1
        + ay.powi(4) / (delta * sd)
        + delta * sd * s * s
        + delta * l1;
    Ok(ExpansionResult {
        value,
        remainder_bound,
        valid: remainder_bound.is_finite(),
        alpha: None,
        beta: None,
    })
}

/// Expansion of `p1(x, y, delta)`:
///
/// `1 - atan(sqrt d)/pi + y/sqrt(2 pi) + sqrt(d)/(2 pi) (x+y)^2 - y^2/(2 pi sqrt d)`
///
/// valid for `0 < d < 1` and `0 < y <= -x <= 1`, where with
/// `y = d^(1/2+alpha)` and `x = -d^(1/4+beta)` the remainder is at most
/// `150 (d^(3/4+3 beta) + d^(3/4 + 2 min(alpha,0) + beta) + d^(1/2+4 alpha))`.
pub fn p1_expansion(x: f64, y: f64, delta: f64) -> Result<ExpansionResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    let hypotheses = delta < 1.0 && y > 0.0 && y <= -x && -x <= 1.0;
    if !hypotheses {
        return Ok(ExpansionResult::invalid());
    }
    let alpha = match regime_exponent(y, delta) {
        Some(a) => a,
        None => return Ok(ExpansionResult::invalid()),
    };
    let beta = (-x).ln() / delta.ln() - 0.25;
    let sd = delta.sqrt();
    let s = x + y;
    let value = 1.0 - sd.atan() / PI + y * INV_SQRT_2PI + sd / (2.0 * PI) * s * s
        - y * y / (2.0 * PI * sd);
    let remainder_bound = 150.0
        * (delta.powf(0.75 + 3.0 * beta)
            + delta.powf(0.75 + 2.0 * alpha.min(0.0) + beta)
            + delta.powf(0.5 + 4.0 * alpha));
    Ok(ExpansionResult {
        value,
        remainder_bound,
        valid: true,
        alpha: Some(alpha),
        beta: Some(beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::conditional::{p1, psi};

    #[test]
    fn psi_expansion_at_origin_is_exact() {
        for &d in &[1e-6, 0.01, 1.0, 3.0] {
            let e = psi_expansion(0.0, 0.0, d).unwrap();
            assert_eq!(e.remainder_bound, 0.0);
            assert!((e.value - (0.5 - d.sqrt().atan() / (2.0 * PI))).abs() < 1e-16);
            assert!((psi(0.0, 0.0, d).unwrap() - e.value).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_certificate_on_small_grid() {
        for &x in &[-0.2, -0.05, 0.0, 0.05, 0.2] {
            for &y in &[-0.2, -0.05, 0.0, 0.05, 0.2] {
                for &d in &[1e-3, 1e-2, 0.5] {
                    let e = psi_expansion(x, y, d).unwrap();
                    let err = (psi(x, y, d).unwrap() - e.value).abs();
                    assert!(err <= e.remainder_bound + 1e-10, "x={x} y={y} d={d}");
                }
            }
        }
    }

    #[test]
    fn psi_certificate_far_from_origin() {
        let e = psi_expansion(-1.0, 0.3, 0.04).unwrap();
        let err = (psi(-1.0, 0.3, 0.04).unwrap() - e.value).abs();
        assert!(err <= e.remainder_bound);
        assert!(e.remainder_bound > 10.0 * err);
    }

    #[test]
    fn p1_certificate_holds() {
        let (x, y, d) = (-0.1, 0.01, 0.01);
        let e = p1_expansion(x, y, d).unwrap();
        assert!(e.valid);
        assert!((p1(x, y, d).unwrap() - e.value).abs() <= e.remainder_bound);
    }

    #[test]
    fn p1_expansion_sharp_in_small_regime() {
        let d: f64 = 1e-6;
        let a = 1.0 / 18.0;
        let y = d.powf(0.5 + a);
        let x = -d.powf(0.25 + a);
        let e = p1_expansion(x, y, d).unwrap();
        assert!((e.alpha.unwrap() - a).abs() < 1e-12);
        assert!((e.beta.unwrap() - a).abs() < 1e-12);
        assert!((p1(x, y, d).unwrap() - e.value).abs() <= e.remainder_bound);
    }

    #[test]
    fn p1_expansion_rejects_outside_hypotheses() {
        assert!(!p1_expansion(-0.01, 0.02, 0.01).unwrap().valid);
        assert!(!p1_expansion(-1.5, 0.02, 0.01).unwrap().valid);
        assert!(!p1_expansion(-0.1, 0.02, 1.0).unwrap().valid);
        assert!(!p1_expansion(-0.1, -0.02, 0.5).unwrap().valid);
        assert!(p1_expansion(-0.1, 0.02, 0.0).is_err());
    }
}
