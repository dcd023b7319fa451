//! Conditional jump probabilities of a single Brownian particle given its
//! position relative to the median, and the trinomial step law they induce.

use serde::Serialize;

use super::normal::{ln_std_normal_cdf, ln_std_normal_pdf, std_normal_cdf, std_normal_pdf};
use super::quadrature::{integrate, QuadOptions};
use crate::error::{invalid, Result};
use crate::walk::TrinomialSpec;

/// Conditioning location `x`, jump height `y` and time gap `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpQuery {
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    /// Regime exponent with `y = delta^(1/2 + alpha)`; defined for `y, delta in (0, 1)`.
    pub alpha: Option<f64>,
}

impl JumpQuery {
    pub fn new(x: f64, y: f64, delta: f64) -> Result<Self> {
        check_args(x, y, delta)?;
        Ok(JumpQuery {
            x,
            y,
            delta,
            alpha: regime_exponent(y, delta),
        })
    }

    /// The point `x = -delta^(1/4 + alpha)`, `y = delta^(1/2 + alpha)` used
    /// for the small and medium jump regimes.
    pub fn at_balance(alpha: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("need 0 < delta < 1, got {delta}")));
        }
        let y = delta.powf(0.5 + alpha);
        let x = -delta.powf(0.25 + alpha);
        Self::new(x, y, delta)
    }
}

/// `alpha = ln y / ln delta - 1/2`, defined only for `y, delta in (0, 1)`.
pub fn regime_exponent(y: f64, delta: f64) -> Option<f64> {
    if y > 0.0 && y < 1.0 && delta > 0.0 && delta < 1.0 {
        Some(y.ln() / delta.ln() - 0.5)
    } else {
        None
    }
}

fn check_args(x: f64, y: f64, delta: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(invalid("x", format!("must be finite, got {x}")));
    }
    if y.is_nan() {
        return Err(invalid("y", "must not be NaN"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    Ok(())
}

const COND_QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-13,
    rel_tol: 0.0,
    max_intervals: 4000,
};

/// Value of a conditional probability with a precision flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondProb {
    pub value: f64,
    /// Set when `Phi(x)` had to be taken from its asymptotic tail series.
    pub degraded: bool,
}

/// `int_{-inf}^x Phi((x + y - t)/sqrt(delta)) w(t) dt` where `w` is either
/// `phi` or the conditional density `phi(t)/Phi(x)` on `t < x`.
fn conditional_integral(x: f64, y: f64, delta: f64, normalized: bool) -> Result<CondProb> {
    check_args(x, y, delta)?;
    let sd = delta.sqrt();
    // mass of the weight below `lo` is below e^{-40} relative to the total
    let lo = -(x.min(0.0).powi(2) + 80.0).sqrt();
    let (ln_norm, degraded) = if normalized {
        ln_std_normal_cdf(x)
    } else {
        (0.0, false)
    };
    let edge = x + y;
    let mut breaks: Vec<f64> = [-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0]
        .iter()
        .map(|j| edge + j * sd)
        .collect();
    let decay = x.abs().max(1.0);
    breaks.extend([0.25, 1.0, 4.0, 16.0].iter().map(|c| x - c / decay));
    breaks.extend([-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0]);

    let integrand = |t: f64| {
        let gate = std_normal_cdf((edge - t) / sd);
        if gate == 0.0 {
            return 0.0;
        }
        if normalized {
            gate * (ln_std_normal_pdf(t) - ln_norm).exp()
        } else {
            gate * std_normal_pdf(t)
        }
    };
    let r = integrate(integrand, lo, x, &breaks, COND_QUAD)?;
    let cap = if normalized { 1.0 } else { std_normal_cdf(x) };
    Ok(CondProb {
        value: r.value.clamp(0.0, cap),
        degraded,
    })
}

/// `psi(x, y, delta) = P(B(1 + delta) < x + y, B(1) < x)`.
pub fn psi(x: f64, y: f64, delta: f64) -> Result<f64> {
    Ok(conditional_integral(x, y, delta, false)?.value)
}

/// `p1(x, y, delta) = P(B(1 + delta) < x + y | B(1) < x)`, the probability
/// that a particle below the median does not jump.
pub fn p1(x: f64, y: f64, delta: f64) -> Result<f64> {
    Ok(p1_detailed(x, y, delta)?.value)
}

pub fn p1_detailed(x: f64, y: f64, delta: f64) -> Result<CondProb> {
    conditional_integral(x, y, delta, true)
}

/// `p2(x, y, delta) = P(B(1 + delta) > x + y | B(1) > x) = p1(-x, -y, delta)`.
pub fn p2(x: f64, y: f64, delta: f64) -> Result<f64> {
    p1(-x, -y, delta)
}

pub fn p2_detailed(x: f64, y: f64, delta: f64) -> Result<CondProb> {
    p1_detailed(-x, -y, delta)
}

/// Parameters of the conditional trinomial walk `Y_j = xi^U_j - xi^L_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    /// `P(Y = -1) = p1 q2`
    pub pt1: f64,
    /// `P(Y = +1) = p2 q1`
    pub pt2: f64,
    /// `P(Y != 0)`
    pub eps_t: f64,
    /// `-E[Y]`
    pub mu_t: f64,
    pub degraded: bool,
}

impl WalkParams {
    pub fn from_probs(p1: f64, p2: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(name, format!("probability out of range: {p}")));
            }
        }
        let q1 = 1.0 - p1;
        let q2 = 1.0 - p2;
        let pt1 = p1 * q2;
        let pt2 = p2 * q1;
        Ok(WalkParams {
            p1,
            p2,
            q1,
            q2,
            pt1,
            pt2,
            eps_t: pt1 + pt2,
            mu_t: pt1 - pt2,
            degraded: false,
        })
    }

    pub fn step_law(&self) -> TrinomialSpec {
        TrinomialSpec::new(self.pt1, self.pt2).expect("walk parameters form a valid step law")
    }
}

pub fn walk_params(q: &JumpQuery) -> Result<WalkParams> {
    let lower = p1_detailed(q.x, q.y, q.delta)?;
    let upper = p2_detailed(q.x, q.y, q.delta)?;
    let mut w = WalkParams::from_probs(lower.value, upper.value)?;
    w.degraded = lower.degraded || upper.degraded;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_reference_points() {
        // orthant probability with correlation 1/sqrt(2)
        assert!((psi(0.0, 0.0, 1.0).unwrap() - 0.375).abs() < 1e-12);
        assert!((psi(0.0, 0.0, 1e-12).unwrap() - 0.5).abs() < 1e-6);
        for &(x, d) in &[(-1.0, 0.01), (0.3, 0.5), (2.0, 1e-4)] {
            let y = 40.0 * f64::sqrt(d) + 40.0;
            assert!((psi(x, y, d).unwrap() - std_normal_cdf(x)).abs() < 1e-10);
        }
        assert!(psi(0.0, 0.0, 0.0).is_err());
        assert!(psi(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn psi_matches_mpmath() {
        // mpmath quad of the defining integral, 40 digits
        let cases = [
            (-0.1, 0.01, 0.01, 0.446_368_413_351_740_88),
            (0.5, -0.2, 0.3, 0.565_597_000_260_648_27),
            (-2.0, 0.5, 1.0, 0.018_104_704_511_390_841),
        ];
        for (x, y, d, want) in cases {
            let got = psi(x, y, d).unwrap();
            assert!((got - want).abs() < 1e-12, "psi({x},{y},{d}) = {got}, want {want}");
        }
    }

    #[test]
    fn p1_and_p2_symmetry() {
        for &d in &[1e-4, 0.01, 1.0] {
            let a = p1(0.0, 0.0, d).unwrap();
            let b = p2(0.0, 0.0, d).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
        let (x, y, d) = (-0.3, 0.05, 0.02);
        assert_eq!(p2(x, y, d).unwrap(), p1(-x, -y, d).unwrap());
    }

    #[test]
    fn p1_is_ratio_of_psi() {
        for &(x, y, d) in &[(-0.1, 0.01, 0.01), (0.4, -0.3, 0.2), (-1.5, 0.2, 1e-3)] {
            let r = psi(x, y, d).unwrap() / std_normal_cdf(x);
            assert!((p1(x, y, d).unwrap() - r).abs() < 1e-11);
        }
    }

    #[test]
    fn p1_large_jump_is_one() {
        assert!((p1(-0.5, 100.0, 0.01).unwrap() - 1.0).abs() < 1e-10);
        assert!((p1(3.0, 100.0, 2.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn p1_far_tail_is_flagged() {
        let r = p1_detailed(-40.0, 0.1, 0.01).unwrap();
        assert!(r.degraded);
        assert!(r.value > 0.0 && r.value <= 1.0);
        let ok = p1_detailed(-30.0, 0.1, 0.01).unwrap();
        assert!(!ok.degraded);
        // mpmath at 40 digits, integrand split at 400 points
        assert!((r.value - 0.887_961_250_521_405_5).abs() < 1e-9);
    }

    #[test]
    fn walk_param_identities() {
        let q = JumpQuery::new(-0.2, 0.03, 0.01).unwrap();
        let w = walk_params(&q).unwrap();
        assert_eq!(w.q1, 1.0 - w.p1);
        assert_eq!(w.q2, 1.0 - w.p2);
        assert_eq!(w.pt1, w.p1 * w.q2);
        assert_eq!(w.pt2, w.p2 * w.q1);
        assert_eq!(w.eps_t, w.pt1 + w.pt2);
        assert_eq!(w.mu_t, w.pt1 - w.pt2);
        assert!(w.mu_t.abs() <= w.eps_t && w.eps_t <= 1.0);
        let zero = walk_params(&JumpQuery::new(0.0, 0.0, 0.01).unwrap()).unwrap();
        assert!(zero.mu_t.abs() < 1e-13);
    }

    #[test]
    fn small_regime_drift_and_activity() {
        let d: f64 = 1e-4;
        let q = JumpQuery::at_balance(0.1, d).unwrap();
        let w = walk_params(&q).unwrap();
        assert!(w.mu_t >= super::super::normal::INV_SQRT_2PI * q.y);
        assert!(w.eps_t <= 1000.0 * d.sqrt());
    }

    #[test]
    fn regime_exponent_round_trips() {
        for &(d, a) in &[(1e-4, 0.1), (0.3, -0.2), (1e-9, 1.0 / 18.0)] {
            let y = f64::powf(d, 0.5 + a);
            let back = regime_exponent(y, d).unwrap();
            let y2 = f64::powf(d, 0.5 + back);
            assert!(((y2 - y) / y).abs() <= 1e-12);
        }
        assert!(regime_exponent(1.0, 0.5).is_none());
        assert!(regime_exponent(0.5, 1.0).is_none());
    }
}
