//! The acceptance suite: every criterion as a list of verification reports.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks::{
    cond_report, jump_lhs, split_report, verify_expansion_certificates, CertificatePoint, CheckConfig,
    BIG_DELTA, BIG_DELTA_PRIME,
};
use super::report::{write_reports_csv, Lhs, VerificationReport};
use super::stats::{estimate_covariance, ks_distance, ks_two_sample, ks_two_sample_critical, loglog_slope};
use crate::error::Result;
use crate::kernel::covariance::limit_covariance;
use crate::kernel::density::tail_bound_check;
use crate::kernel::normal::std_normal_cdf;
use crate::limit::{holder_scaling_estimate, ScalingMethod, ScalingModel};
use crate::rng::{derive_seed, domain, Stream};
use crate::sim::{componentwise_median_sample, scaling_law_samples, simulate_ensemble, EnsembleSpec, TimeGrid};
use crate::walk::{binom_gauss_ratio, cheby_bound_shape, chebyplus_bound_shape, mc_phi_k, phi_k_many, TrinomialSpec};

pub const DEFAULT_SEED: u64 = 42;
pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

impl CriterionOutcome {
    fn new(id: u32, name: &str, reports: Vec<VerificationReport>) -> Self {
        CriterionOutcome {
            id,
            name: name.to_string(),
            passed: reports.iter().all(|r| r.passed),
            reports,
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self
            .reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.claim_id.as_str())
            .collect();
        let status = if self.passed { "PASS" } else { "FAIL" };
        if failed.is_empty() {
            format!("criterion {:>2} {status}  {} ({} checks)", self.id, self.name, self.reports.len())
        } else {
            format!(
                "criterion {:>2} {status}  {} ({} of {} checks failed: {})",
                self.id,
                self.name,
                failed.len(),
                self.reports.len(),
                failed.join(", ")
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRun {
    pub format_version: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionOutcome>,
}

impl AcceptanceRun {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// All reports as CSV, claim ids prefixed by their criterion.
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<VerificationReport> = self
            .criteria
            .iter()
            .flat_map(|c| {
                c.reports.iter().map(move |r| VerificationReport {
                    claim_id: format!("c{}/{}", c.id, r.claim_id),
                    ..r.clone()
                })
            })
            .collect();
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &rows)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    fn push(&mut self, c: CriterionOutcome) {
        self.passed &= c.passed;
        self.criteria.push(c);
    }
}

fn value_check(id: String, lhs: f64, rhs: f64, margin: f64, rule: &str) -> VerificationReport {
    VerificationReport::inequality(id, Lhs::Value(lhs), rhs, margin, rule)
}

/// Shared ensemble of `X_1001` on `{0.25, 0.5, 1, 2}`.
struct BaseEnsemble {
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
    seed: u64,
}

const BASE_N: usize = 1001;
const BASE_REPS: usize = 20_000;

fn base_ensemble(seed: u64) -> Result<BaseEnsemble> {
    let times = vec![0.25, 0.5, 1.0, 2.0];
    let s = derive_seed(seed, 1);
    let spec = EnsembleSpec::new(BASE_N, TimeGrid::new(times.clone())?, s)?;
    let paths = simulate_ensemble(&spec, BASE_REPS)?;
    let columns = (0..times.len())
        .map(|i| paths.iter().map(|p| p.values[i]).collect())
        .collect();
    Ok(BaseEnsemble { times, columns, seed: s })
}

fn criterion_covariance(base: &BaseEnsemble) -> Result<CriterionOutcome> {
    let mut reports = Vec::new();
    for i in 0..base.times.len() {
        for j in i..base.times.len() {
            let (s, t) = (base.times[i], base.times[j]);
            let est = estimate_covariance(&base.columns[i], &base.columns[j], base.seed)?;
            let exact = limit_covariance(s, t)?;
            let tol = (3.0 * est.std_err).max(0.02);
            reports.push(
                value_check(format!("cov({s},{t})"), (est.mean - exact).abs(), 0.0, tol, "max(3 se, 0.02)")
                    .with("estimate", &est)
                    .with("analytic", exact)
                    .with("n", BASE_N),
            );
        }
    }
    Ok(CriterionOutcome::new(1, "covariance of X_1001 on {0.25,0.5,1,2}", reports))
}

fn criterion_marginal(base: &BaseEnsemble) -> Result<CriterionOutcome> {
    let col = &base.columns[2];
    let sd = FRAC_PI_2.sqrt();
    let d = ks_distance(col, |x| std_normal_cdf(x / sd))?;
    let r = value_check("ks(X_1001(1), N(0,pi/2))".into(), d, 0.015, 0.0, "fixed threshold")
        .with("samples", col.len())
        .with("seed", base.seed);
    Ok(CriterionOutcome::new(2, "marginal law of X_1001(1)", vec![r]))
}

fn criterion_local_scaling() -> Result<CriterionOutcome> {
    let gaps: Vec<f64> = (4..=10).rev().map(|e| 2f64.powi(-e)).collect();
    let mut reports = Vec::new();
    for (model, target, label) in [
        (ScalingModel::Limit, 0.5, "limit"),
        (ScalingModel::Brownian, 1.0, "brownian"),
    ] {
        let est = holder_scaling_estimate(model, ScalingMethod::ClosedForm, 1.0, &gaps, 0, 0)?;
        reports.push(
            value_check(format!("slope[{label}]"), (est.slope - target).abs(), 0.05, 0.0, "|slope - target| <= 0.05")
                .with("slope", est.slope)
                .with("target", target)
                .with("gaps", &gaps),
        );
    }
    Ok(CriterionOutcome::new(3, "local increment scaling", reports))
}

fn certificate_grid() -> Vec<CertificatePoint> {
    let mut pts = Vec::new();
    for alpha in [-BIG_DELTA_PRIME, BIG_DELTA, 0.2] {
        for beta in [0.0, BIG_DELTA, 0.15] {
            for delta in [1e-6, 1e-4, 1e-3] {
                pts.push(CertificatePoint { alpha, beta, delta });
            }
        }
    }
    pts
}

fn criterion_certificates(cfg: &CheckConfig) -> Result<CriterionOutcome> {
    let r = verify_expansion_certificates(&certificate_grid(), cfg)?;
    Ok(CriterionOutcome::new(4, "expansion certificates", vec![r]))
}

fn criterion_conditioning(seed: u64, cfg: &CheckConfig) -> Result<CriterionOutcome> {
    let mut reports = Vec::new();
    let mut i = 0u64;
    for n in [5usize, 11, 21] {
        for delta in [0.01, 0.02] {
            for y in [0.05, 0.1] {
                let lhs = jump_lhs(n, y, delta, 100_000, derive_seed(seed, 500 + i))?;
                i += 1;
                let tag = format!("(n={n},delta={delta},y={y})");
                let mut c = cond_report(n, y, delta, lhs.clone(), cfg)?;
                c.claim_id = format!("cond{tag}");
                let mut s = split_report(n, y, delta, None, lhs)?;
                s.claim_id = format!("split{tag}");
                reports.push(c);
                reports.push(s);
            }
        }
    }
    Ok(CriterionOutcome::new(5, "conditioning inequality and split bound", reports))
}

const WALK_NS: [usize; 10] = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000];

fn criterion_random_walk(seed: u64) -> Result<CriterionOutcome> {
    let mut reports = Vec::new();

    // exact law against Monte Carlo on random specs
    let mut stream = Stream::new(derive_seed(seed, 600), domain::WALK, u32::MAX, 0);
    let mut worst_z: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 0..20u64 {
        let spec = TrinomialSpec::new(0.5 * stream.uniform(), 0.5 * stream.uniform())?;
        let ks = [10usize, 100, 1000];
        let exact = phi_k_many(spec, &ks)?;
        for (j, (&k, &phi)) in ks.iter().zip(&exact).enumerate() {
            let reps = 20_000;
            let mc = mc_phi_k(spec, k, reps, derive_seed(seed, 610 + 3 * i + j as u64))?;
            // floor the standard error at its value under the exact law
            let se = mc.std_err.max((phi * (1.0 - phi) / reps as f64).sqrt());
            let z = if se > 0.0 { (mc.mean - phi).abs() / se } else { 0.0 };
            worst_z = worst_z.max(z);
            rows.push(json!({"pt1": spec.pt1, "pt2": spec.pt2, "k": k, "exact": phi, "mc": mc.mean, "se": se}));
        }
    }
    reports.push(value_check("dp_vs_mc".into(), worst_z, 4.0, 0.0, "largest |z| <= 4").with("comparisons", rows));

    // bound-shape ratios along n
    let p = 2.0;
    for (eps, mu) in [(0.1, 0.05), (0.3, 0.2), (0.05, 0.04), (0.2, 0.1)] {
        let spec = TrinomialSpec::new(0.5 * (eps + mu), 0.5 * (eps - mu))?;
        let phis = phi_k_many(spec, &WALK_NS)?;
        for (label, shape_fn) in [
            ("cheby", cheby_bound_shape as fn(TrinomialSpec, usize, f64) -> Result<f64>),
            ("chebyplus", chebyplus_bound_shape),
        ] {
            let mut ns = Vec::new();
            let mut ratios = Vec::new();
            let mut underflow = Vec::new();
            for (&n, &phi) in WALK_NS.iter().zip(&phis) {
                let ratio = phi / shape_fn(spec, n, p)?;
                if ratio > 0.0 && ratio.is_finite() {
                    ns.push(n as f64);
                    ratios.push(ratio);
                } else {
                    underflow.push(n);
                }
            }
            let slope = loglog_slope(&ns, &ratios)?;
            reports.push(
                value_check(format!("{label}_trend(eps={eps},mu={mu})"), slope, 0.05, 0.0, "log-log slope <= 0.05")
                    .with("n", &ns)
                    .with("ratio", &ratios)
                    .with("underflow_n", underflow)
                    .with("p", p),
            );
        }
    }

    // epsilon sweep with eps * n and mu / eps held fixed
    for (r, z) in [(0.5f64, 2.0f64), (0.25, 1.5)] {
        let eps_grid = [0.2, 0.1, 0.05, 0.02];
        let mut plus = Vec::new();
        let mut loose = Vec::new();
        let mut ns = Vec::new();
        for &eps in &eps_grid {
            let mu = r * eps;
            let n = (z * z / (r * r * eps)).round() as usize;
            let spec = TrinomialSpec::new(0.5 * (eps + mu), 0.5 * (eps - mu))?;
            let phi = phi_k_many(spec, &[n])?[0];
            plus.push(phi / chebyplus_bound_shape(spec, n, p)?);
            loose.push(cheby_bound_shape(spec, n, p)? / phi);
            ns.push(n);
        }
        let inv: Vec<f64> = eps_grid.iter().map(|e| 1.0 / e).collect();
        let flat = loglog_slope(&inv, &plus)?;
        let growth = loglog_slope(&inv, &loose)?;
        let tag = format!("(mu/eps={r},z={z})");
        reports.push(
            value_check(format!("chebyplus_eps_sweep{tag}"), flat, 0.05, 0.0, "slope in 1/eps <= 0.05")
                .with("eps", eps_grid)
                .with("n", &ns)
                .with("ratio", &plus),
        );
        let floor = 0.5 * (p - 1.0);
        reports.push(
            value_check(format!("cheby_eps_looseness{tag}"), floor - growth, 0.0, 0.0, "slope in 1/eps >= (p-1)/2")
                .with("slope", growth)
                .with("shape_over_probability", &loose),
        );
    }
    Ok(CriterionOutcome::new(6, "random-walk bound shapes", reports))
}

fn criterion_binomial_gauss() -> Result<CriterionOutcome> {
    let ps = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
    let mut worst = 0.0f64;
    let mut at = (0usize, 0usize, 0.0f64);
    for n in 10..=2000usize {
        for &p in &ps {
            let top = (n as f64 * p).floor() as usize;
            for k in 0..=top {
                let r = binom_gauss_ratio(n, k, p)?;
                if r > worst {
                    worst = r;
                    at = (n, k, p);
                }
            }
        }
    }
    let bounded = value_check("max_ratio_below_mean".into(), worst, 3.0, 0.0, "fixed threshold")
        .with("argmax", json!({"n": at.0, "k": at.1, "p": at.2}));
    let witness_n = [50usize, 100, 200, 400];
    let witness: Vec<f64> = witness_n
        .iter()
        .map(|&n| binom_gauss_ratio(n, n / 2, 0.25))
        .collect::<Result<_>>()?;
    let worst_step = witness.windows(2).map(|w| w[0] / w[1]).fold(0.0f64, f64::max);
    let growth = value_check("divergence_witness".into(), worst_step, 1.0 - 1e-12, 0.0, "strictly increasing")
        .with("n", witness_n)
        .with("ratio", &witness);
    Ok(CriterionOutcome::new(7, "binomial over Gaussian ratio", vec![bounded, growth]))
}

fn criterion_tail(base: &BaseEnsemble) -> Result<CriterionOutcome> {
    let col = &base.columns[2];
    let ys: Vec<f64> = (0..13).map(|i| 1.0 + 0.25 * i as f64).collect();
    let mut scaled = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut rows = Vec::new();
    for &y in &ys {
        let t = tail_bound_check(BASE_N, y, 3.0)?;
        scaled.push(t.lhs * y.powi(3));
        let m = col.len() as f64;
        let freq = col.iter().filter(|&&x| x < -y).count() as f64 / m;
        let se = (freq * (1.0 - freq) / m).sqrt().max((t.lhs * (1.0 - t.lhs) / m).sqrt());
        let z = (freq - t.lhs).abs() / se;
        worst_z = worst_z.max(z);
        rows.push(json!({"y": y, "quadrature": t.lhs, "empirical": freq, "se": se}));
    }
    let slope = loglog_slope(&ys, &scaled)?;
    let trend = value_check("tail_cubic_trend".into(), slope, 0.05, 0.0, "log-log slope <= 0.05")
        .with("y", &ys)
        .with("scaled_tail", &scaled);
    let cross = value_check("tail_vs_empirical".into(), worst_z, 4.0, 0.0, "largest |z| <= 4").with("points", rows);
    Ok(CriterionOutcome::new(8, "tail of X_1001(1)", vec![trend, cross]))
}

fn criterion_scaling(seed: u64) -> Result<CriterionOutcome> {
    let reps = 10_000;
    let (a, b) = scaling_law_samples(101, 1.0, 2.0, reps, derive_seed(seed, 900))?;
    let d = ks_two_sample(&a, &b)?;
    let crit = ks_two_sample_critical(0.01, reps, reps);
    let r = value_check("ks(X_101(2), sqrt2 X_101(1))".into(), d, crit, 0.0, "1% critical value")
        .with("reps", reps);
    Ok(CriterionOutcome::new(9, "scaling law", vec![r]))
}

fn criterion_componentwise(seed: u64) -> Result<CriterionOutcome> {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let s = derive_seed(seed, 1000);
    let xs = componentwise_median_sample(&cov, BASE_N, 20_000, s)?;
    let a: Vec<f64> = xs.iter().map(|v| v[0]).collect();
    let b: Vec<f64> = xs.iter().map(|v| v[1]).collect();
    let est = estimate_covariance(&a, &b, s)?;
    let r = value_check("cross_cov".into(), (est.mean - FRAC_PI_6).abs(), 0.0, 3.0 * est.std_err, "3 se")
        .with("estimate", &est)
        .with("analytic", FRAC_PI_6);
    Ok(CriterionOutcome::new(10, "component-wise median covariance", vec![r]))
}

/// Criteria 1 to 10 with the given seed.
pub fn run_acceptance(seed: u64, cfg: &CheckConfig) -> Result<AcceptanceRun> {
    let mut run = AcceptanceRun {
        format_version: FORMAT_VERSION.to_string(),
        seed,
        passed: true,
        criteria: Vec::new(),
    };
    let base = base_ensemble(seed)?;
    run.push(criterion_covariance(&base)?);
    run.push(criterion_marginal(&base)?);
    run.push(criterion_local_scaling()?);
    run.push(criterion_certificates(cfg)?);
    run.push(criterion_conditioning(seed, cfg)?);
    run.push(criterion_random_walk(seed)?);
    run.push(criterion_binomial_gauss()?);
    run.push(criterion_tail(&base)?);
    run.push(criterion_scaling(seed)?);
    run.push(criterion_componentwise(seed)?);
    Ok(run)
}

/// Runs criteria 1 to 10 once per worker count and appends criterion 11,
/// which compares the serialized outputs byte for byte. The returned run
/// is the one from the first worker count.
pub fn run_acceptance_with_determinism(seed: u64, cfg: &CheckConfig, workers: &[usize]) -> Result<AcceptanceRun> {
    let mut outputs = Vec::new();
    let mut first = None;
    for &w in workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| crate::error::Error::Config(e.to_string()))?;
        let run = pool.install(|| run_acceptance(seed, cfg))?;
        outputs.push((w, run.to_json()?, run.to_csv()?));
        first.get_or_insert(run);
    }
    let mut run = first.ok_or_else(|| crate::error::invalid("workers", "need at least one worker count"))?;
    let (_, json0, csv0) = &outputs[0];
    let mismatches = outputs
        .iter()
        .filter(|(_, j, c)| j != json0 || c != csv0)
        .count();
    let r = value_check("byte_identical_outputs".into(), mismatches as f64, 0.0, 0.0, "no mismatching run")
        .with("workers", workers)
        .with("json_bytes", json0.len())
        .with("csv_bytes", csv0.len());
    run.push(CriterionOutcome::new(11, "determinism across worker counts", vec![r]));
    Ok(run)
}
