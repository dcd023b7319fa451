//! Numerical checks of the conditioning inequality, the split bound, the
//! key jump estimate and the expansion certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Lhs, VerificationReport};
use crate::error::{invalid, Error, Result};
use crate::kernel::conditional::{p1, psi, regime_exponent, walk_params, JumpQuery};
use crate::kernel::density::{median_cdf, median_density, median_rank};
use crate::kernel::expansion::{p1_expansion, psi_expansion};
use crate::kernel::normal::{std_normal_cdf, INV_SQRT_2PI};
use crate::kernel::quadrature::gauss_legendre;
use crate::sim::{jump_frequency, Direction, MCEstimate};
use crate::walk::phi_k;

/// Exponent separating the small and medium jump regimes.
pub const BIG_DELTA: f64 = 1.0 / 18.0;
/// `(1 - 16 BIG_DELTA) / 12`, separating the medium and large regimes.
pub const BIG_DELTA_PRIME: f64 = (1.0 - 16.0 * BIG_DELTA) / 12.0;
/// Standard errors allowed on Monte Carlo left-hand sides.
pub const MC_SIGMAS: f64 = 4.0;
/// Absolute slack on analytic-vs-analytic comparisons.
pub const ANALYTIC_SLACK: f64 = 1e-8;

/// Supremum of the `delta_0` with
/// `900 max(delta_0^{1/4}, delta_0^{3 big_delta}) < (2 pi)^{-1/2}`.
pub fn delta0_threshold(big_delta: f64) -> f64 {
    let c = INV_SQRT_2PI / 900.0;
    c.powi(4).min(c.powf(1.0 / (3.0 * big_delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    /// Largest time gap accepted by the key estimate and the certificates.
    pub delta0: f64,
    /// Ceiling on `P(jump) / (eps^{-1} delta^{1/6})^p` for the key estimate.
    pub key_ratio_ceiling: f64,
    /// Panels of the composite Gauss–Legendre rule on `[-10, 10]`.
    pub panels: usize,
    /// Nodes per panel; the error estimate uses half as many.
    pub gl_order: usize,
    /// Largest accepted difference between the two rules.
    pub quad_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            delta0: 1e-3,
            key_ratio_ceiling: 1.0,
            panels: 200,
            gl_order: 16,
            quad_tol: 1e-6,
        }
    }
}

/// `phi_{k-1}(x, y, delta)` through the conditional walk parameters.
pub fn phi_conditional(x: f64, y: f64, delta: f64, steps: usize) -> Result<f64> {
    let w = walk_params(&JumpQuery::new(x, y, delta)?)?;
    phi_k(w.step_law(), steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhsIntegral {
    pub value: f64,
    pub err_est: f64,
    pub tail_bound: f64,
    pub nodes: usize,
}

const RANGE: f64 = 10.0;
/// Nodes where `f_n` is below this are skipped; their mass enters the tail bound.
const DENSITY_FLOOR: f64 = 1e-30;

fn composite_rule(panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let width = 2.0 * RANGE / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = -RANGE + (p as f64 + 0.5) * width;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    out
}

/// `int phi_{k-1}(x, y, delta) f_n(x) dx` by composite Gauss–Legendre on
/// `[-10, 10]` plus a bound on the neglected mass.
pub fn cond_rhs(n: usize, y: f64, delta: f64, cfg: &CheckConfig) -> Result<RhsIntegral> {
    let steps = median_rank(n) - 1;
    let rule = |order: usize| -> Result<(f64, usize, f64)> {
        let nodes = composite_rule(cfg.panels, order);
        let terms: Vec<Result<(f64, bool)>> = nodes
            .par_iter()
            .map(|&(x, w)| {
                let f = median_density(n, x)?;
                if f < DENSITY_FLOOR {
                    return Ok((w * f, false));
                }
                Ok((w * f * phi_conditional(x, y, delta, steps)?, true))
            })
            .collect();
        let mut sum = 0.0;
        let mut skipped = 0.0;
        let mut used = 0;
        for t in terms {
            let (v, kept) = t?;
            if kept {
                sum += v;
                used += 1;
            } else {
                skipped += v;
            }
        }
        Ok((sum, used, skipped))
    };
    let (fine, used, skipped) = rule(cfg.gl_order)?;
    let (coarse, used_coarse, _) = rule((cfg.gl_order / 2).max(1))?;
    let err_est = (fine - coarse).abs();
    if err_est > cfg.quad_tol {
        return Err(Error::Quadrature {
            lo: -RANGE,
            hi: RANGE,
            err_est,
            intervals: cfg.panels,
            evals: used + used_coarse,
        });
    }
    // M_n outside [-10, 10] needs some particle outside it
    let outside = 2.0 * n as f64 * std_normal_cdf(-RANGE);
    Ok(RhsIntegral {
        value: fine,
        err_est,
        tail_bound: outside + skipped,
        nodes: used,
    })
}

fn check_cond_args(n: usize, y: f64, delta: f64) -> Result<()> {
    if n < 3 {
        return Err(invalid("n", format!("need n >= 3, got {n}")));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(invalid("y", format!("need finite y > 0, got {y}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    Ok(())
}

/// Upward median jump beyond `y` over `[1, 1 + delta]`.
pub fn jump_lhs(n: usize, y: f64, delta: f64, reps: usize, seed: u64) -> Result<MCEstimate> {
    jump_frequency(n, delta, y, Direction::Rise, reps, seed)
}

/// `P(M_n(1+delta) - M_n(1) > y) <= int phi_{k-1}(x, y, delta) f_n(x) dx`.
pub fn verify_cond_inequality(
    n: usize,
    y: f64,
    delta: f64,
    reps: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    check_cond_args(n, y, delta)?;
    let lhs = jump_lhs(n, y, delta, reps, seed)?;
    cond_report(n, y, delta, lhs, cfg)
}

pub(crate) fn cond_report(
    n: usize,
    y: f64,
    delta: f64,
    lhs: MCEstimate,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    let rhs = cond_rhs(n, y, delta, cfg)?;
    let margin = MC_SIGMAS * lhs.std_err + rhs.err_est + rhs.tail_bound;
    let seed = lhs.seed;
    let reps = lhs.reps;
    Ok(VerificationReport::inequality(
        "cond_inequality",
        Lhs::Estimate(lhs),
        rhs.value,
        margin,
        "4 se + quadrature error + tail mass",
    )
    .with("n", n)
    .with("k", median_rank(n))
    .with("y", y)
    .with("delta", delta)
    .with("reps", reps)
    .with("seed", seed)
    .with("rhs_err_est", rhs.err_est)
    .with("rhs_tail_bound", rhs.tail_bound)
    .with("rhs_nodes", rhs.nodes))
}

/// Default split point `-y / delta^{1/4}`.
pub fn default_split_point(y: f64, delta: f64) -> f64 {
    -y / delta.powf(0.25)
}

/// `P(M_n(1+delta) - M_n(1) > y) <= phi_{k-1}(x0, y, delta) + P(M_n(1) <= x0)`.
pub fn verify_split_bound(
    n: usize,
    y: f64,
    delta: f64,
    x0: Option<f64>,
    reps: usize,
    seed: u64,
) -> Result<VerificationReport> {
    check_cond_args(n, y, delta)?;
    let lhs = jump_lhs(n, y, delta, reps, seed)?;
    split_report(n, y, delta, x0, lhs)
}

pub(crate) fn split_report(
    n: usize,
    y: f64,
    delta: f64,
    x0: Option<f64>,
    lhs: MCEstimate,
) -> Result<VerificationReport> {
    let x0 = x0.unwrap_or_else(|| default_split_point(y, delta));
    if !x0.is_finite() {
        return Err(invalid("x0", format!("split point must be finite, got {x0}")));
    }
    let phi = phi_conditional(x0, y, delta, median_rank(n) - 1)?;
    let below = median_cdf(n, x0)?;
    let margin = MC_SIGMAS * lhs.std_err + ANALYTIC_SLACK;
    let (seed, reps) = (lhs.seed, lhs.reps);
    Ok(VerificationReport::inequality(
        "split_bound",
        Lhs::Estimate(lhs),
        phi + below,
        margin,
        "4 se + 1e-8",
    )
    .with("n", n)
    .with("y", y)
    .with("delta", delta)
    .with("x0", x0)
    .with("phi_at_x0", phi)
    .with("median_cdf_at_x0", below)
    .with("reps", reps)
    .with("seed", seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Large,
    Medium,
    Small,
}

/// Regime of a jump `eps / sqrt(n) = delta^{1/2 + alpha}`.
pub fn route_regime(alpha: f64) -> Regime {
    if alpha < -BIG_DELTA_PRIME {
        Regime::Large
    } else if alpha < BIG_DELTA {
        Regime::Medium
    } else {
        Regime::Small
    }
}

/// Monte Carlo jump probability against the shape `(eps^{-1} delta^{1/6})^p`.
pub fn verify_key_estimate(
    eps: f64,
    delta: f64,
    n: usize,
    p: f64,
    reps: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("need 0 < eps < 1, got {eps}")));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    if delta > cfg.delta0 {
        return Err(Error::DeltaAboveThreshold {
            delta,
            delta0: cfg.delta0,
        });
    }
    if n < 3 {
        return Err(invalid("n", format!("need n >= 3, got {n}")));
    }
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid("p", format!("need p > 2, got {p}")));
    }
    let y = eps / (n as f64).sqrt();
    let alpha = regime_exponent(y, delta).expect("y and delta lie in (0, 1)");
    let regime = route_regime(alpha);
    let est = jump_lhs(n, y, delta, reps, seed)?;
    let shape = (delta.powf(1.0 / 6.0) / eps).powf(p);
    let ratio = est.mean / shape;
    Ok(VerificationReport::inequality(
        "key_estimate",
        Lhs::Value(ratio),
        cfg.key_ratio_ceiling,
        0.0,
        "calibrated ratio ceiling",
    )
    .with("eps", eps)
    .with("delta", delta)
    .with("n", n)
    .with("p", p)
    .with("alpha", alpha)
    .with("regime", regime)
    .with("estimate", &est)
    .with("shape", shape)
    .with("delta0", cfg.delta0)
    .with("delta0_threshold", 0.5 * delta0_threshold(BIG_DELTA)))
}

/// Key estimate at fixed `(eps, alpha)` over several gaps; `n` is the
/// rounded solution of `eps / sqrt(n) = delta^{1/2 + alpha}`. Returns the
/// reports and the log-log slope of the ratio against `1 / delta`.
pub fn key_estimate_sweep(
    eps: f64,
    alpha: f64,
    deltas: &[f64],
    p: f64,
    reps: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<(Vec<VerificationReport>, f64)> {
    let mut reports = Vec::with_capacity(deltas.len());
    let mut ratios = Vec::with_capacity(deltas.len());
    for (i, &d) in deltas.iter().enumerate() {
        let n = ((eps / d.powf(0.5 + alpha)).powi(2)).round().max(3.0) as usize;
        let r = verify_key_estimate(eps, d, n, p, reps, crate::rng::derive_seed(seed, i as u64), cfg)?;
        ratios.push(r.lhs.value());
        reports.push(r);
    }
    let inv: Vec<f64> = deltas.iter().map(|d| 1.0 / d).collect();
    let slope = super::stats::loglog_slope(&inv, &ratios)?;
    Ok((reports, slope))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificatePoint {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

/// Checks, at `x = -delta^{1/4+beta}`, `y = delta^{1/2+alpha}`:
/// the `p1` and `psi` expansion remainders, and at the balance point
/// `beta = alpha` the drift and activity bounds of the small and medium
/// regimes. `lhs` is the largest violation over all checks.
pub fn verify_expansion_certificates(points: &[CertificatePoint], cfg: &CheckConfig) -> Result<VerificationReport> {
    let mut records = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for pt in points {
        let CertificatePoint { alpha, beta, delta } = *pt;
        if !(delta > 0.0) || delta > cfg.delta0 {
            skipped += 1;
            records.push(json!({"alpha": alpha, "beta": beta, "delta": delta,
                "note": format!("skipped: delta above delta0 = {}", cfg.delta0)}));
            continue;
        }
        let x = -delta.powf(0.25 + beta);
        let y = delta.powf(0.5 + alpha);
        let mut rec = serde_json::Map::new();
        for (k, v) in [("alpha", alpha), ("beta", beta), ("delta", delta), ("x", x), ("y", y)] {
            rec.insert(k.into(), json!(v));
        }
        let mut note = |rec: &mut serde_json::Map<String, serde_json::Value>, key: &str, violation: f64| {
            worst = worst.max(violation);
            checked += 1;
            rec.insert(key.into(), json!(violation));
        };

        let e = p1_expansion(x, y, delta)?;
        if e.valid {
            note(&mut rec, "p1_excess", (p1(x, y, delta)? - e.value).abs() - e.remainder_bound);
        } else {
            rec.insert("p1_note".into(), json!("skipped: outside expansion hypotheses"));
        }
        let s = psi_expansion(x, y, delta)?;
        note(&mut rec, "psi_excess", (psi(x, y, delta)? - s.value).abs() - s.remainder_bound);

        let in_small = alpha >= BIG_DELTA;
        let in_medium = (-BIG_DELTA_PRIME..=BIG_DELTA).contains(&alpha);
        if in_small || in_medium {
            let w = walk_params(&JumpQuery::at_balance(alpha, delta)?)?;
            if in_small {
                note(&mut rec, "small_drift_excess", INV_SQRT_2PI * y - w.mu_t);
                note(&mut rec, "small_activity_excess", w.eps_t - 1000.0 * delta.sqrt());
            }
            if in_medium {
                note(&mut rec, "medium_drift_excess", INV_SQRT_2PI * delta.powf(0.5 + BIG_DELTA) - w.mu_t);
                note(
                    &mut rec,
                    "medium_activity_excess",
                    w.eps_t - 1000.0 * delta.powf(0.5 - 4.0 * BIG_DELTA_PRIME),
                );
            }
        } else {
            rec.insert("balance_note".into(), json!("skipped: alpha in the large regime"));
        }
        records.push(serde_json::Value::Object(rec));
    }
    let lhs = if checked == 0 { 0.0 } else { worst };
    Ok(VerificationReport::inequality(
        "expansion_certificates",
        Lhs::Value(lhs),
        0.0,
        ANALYTIC_SLACK,
        "largest violation <= 1e-8",
    )
    .with("checked", checked)
    .with("skipped", skipped)
    .with("delta0", cfg.delta0)
    .with("points", records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_boundaries() {
        assert_eq!(route_regime(0.0), Regime::Medium);
        assert_eq!(route_regime(-0.5), Regime::Large);
        assert_eq!(route_regime(BIG_DELTA), Regime::Small);
        assert_eq!(route_regime(-BIG_DELTA_PRIME), Regime::Medium);
        assert!((BIG_DELTA_PRIME - 1.0 / 108.0).abs() < 1e-16);
        // alpha from eps/sqrt(n) = delta^{1/2}
        let d: f64 = 1e-4;
        assert!(regime_exponent(d.sqrt(), d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn threshold_is_tiny_and_satisfies_inequality() {
        let d0 = delta0_threshold(BIG_DELTA);
        assert!(d0 > 0.0 && d0 < 1e-19);
        let slightly_less = d0 * 0.999;
        let lhs = 900.0 * slightly_less.powf(0.25).max(slightly_less.powf(3.0 * BIG_DELTA));
        assert!(lhs < INV_SQRT_2PI);
    }

    #[test]
    fn certificates_on_small_grid() {
        let pts = [
            CertificatePoint { alpha: BIG_DELTA, beta: BIG_DELTA, delta: 1e-6 },
            CertificatePoint { alpha: 0.0, beta: 0.1, delta: 1e-4 },
            CertificatePoint { alpha: 0.1, beta: 0.0, delta: 0.5 },
        ];
        let r = verify_expansion_certificates(&pts, &CheckConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.metadata["skipped"], json!(1));
    }

    #[test]
    fn key_estimate_gate_and_large_regime() {
        let cfg = CheckConfig::default();
        assert!(matches!(
            verify_key_estimate(0.5, 0.01, 11, 3.0, 100, 1, &cfg),
            Err(Error::DeltaAboveThreshold { .. })
        ));
        let r = verify_key_estimate(0.99, 1e-4, 3, 3.0, 20_000, 1, &cfg).unwrap();
        assert_eq!(r.metadata["regime"], json!("large"));
        assert_eq!(r.lhs.value(), 0.0);
        assert!(r.passed);
    }

    #[test]
    fn split_bound_extremes() {
        let r = verify_split_bound(11, 0.1 / 11f64.sqrt(), 0.01, Some(-30.0), 2000, 3).unwrap();
        assert!(r.passed);
        let r0 = verify_split_bound(11, 0.1 / 11f64.sqrt(), 0.01, Some(0.0), 2000, 3).unwrap();
        assert!(r0.passed);
        assert!(r.metadata["phi_at_x0"].as_f64() >= r0.metadata["phi_at_x0"].as_f64());
    }

    #[test]
    fn cond_inequality_with_huge_jump() {
        let r = verify_cond_inequality(5, 50.0, 0.01, 1000, 2, &CheckConfig::default()).unwrap();
        assert_eq!(r.lhs.value(), 0.0);
        assert!(r.rhs < 1e-10);
        assert!(r.passed);
    }
}
