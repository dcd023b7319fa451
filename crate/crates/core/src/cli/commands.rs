//! Subcommand implementations.

use nalgebra::DMatrix;
use serde_json::{json, Value};

use super::args::*;
use super::output::{csv_writer, sink, write_summary};
use crate::error::{invalid, Error, Result};
use crate::kernel::{conditional, covariance, density, expansion, normal};
use crate::limit::{holder_scaling_estimate, sample_limit, ScalingMethod, ScalingModel};
use crate::sim::{
    componentwise_median_sample, jump_frequency, scaling_law_samples, simulate_ensemble, Direction, EnsembleSpec,
    TimeGrid,
};
use crate::verify::checks::{
    key_estimate_sweep, verify_cond_inequality, verify_expansion_certificates, verify_key_estimate,
    verify_split_bound, CertificatePoint, CheckConfig,
};
use crate::verify::report::{write_reports_csv, VerificationReport};
use crate::verify::suite::{run_acceptance, run_acceptance_with_determinism, AcceptanceRun, DEFAULT_SEED};
use crate::walk;

fn need<T>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or_else(|| invalid(name, "missing; pass it as a flag or in the config file"))
}

/// Fills in a generated seed when none was given.
fn ensure_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(rand::random::<u64>)
}

fn print_value(v: f64) {
    println!("{v}");
}

pub fn kernel_eval(a: KernelArgs) -> Result<bool> {
    let op = need(a.op, "op")?;
    let result: Value = match op {
        KernelOp::StdNormalCdf => json!(normal::std_normal_cdf(need(a.x, "x")?)),
        KernelOp::MillsUpperBound => json!(normal::mills_upper_bound(need(a.x, "x")?)?),
        KernelOp::LimitCovariance => json!(covariance::limit_covariance(need(a.s, "s")?, need(a.t, "t")?)?),
        KernelOp::IncrementVariance => json!(covariance::increment_variance(need(a.s, "s")?, need(a.t, "t")?)?),
        KernelOp::MedianDensity => json!(density::median_density(need(a.n, "n")?, need(a.x, "x")?)?),
        KernelOp::MedianCdf => json!(density::median_cdf(need(a.n, "n")?, need(a.x, "x")?)?),
        KernelOp::TailBoundCheck => json!(density::tail_bound_check(
            need(a.n, "n")?,
            need(a.y, "y")?,
            need(a.kappa, "kappa")?
        )?),
        KernelOp::Psi => json!(conditional::psi(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?),
        KernelOp::P1 => json!(conditional::p1_detailed(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?),
        KernelOp::P2 => json!(conditional::p2_detailed(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?),
        KernelOp::WalkParams => {
            let q = conditional::JumpQuery::new(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?;
            json!({"query": q, "params": conditional::walk_params(&q)?})
        }
        KernelOp::P1Expansion => {
            json!(expansion::p1_expansion(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?)
        }
        KernelOp::PsiExpansion => {
            json!(expansion::psi_expansion(need(a.x, "x")?, need(a.y, "y")?, need(a.delta, "delta")?)?)
        }
    };
    match result.as_f64() {
        Some(v) => print_value(v),
        None => println!("{}", serde_json::to_string_pretty(&result)?),
    }
    if let Some(path) = &a.json {
        write_summary(Some(path), "kernel-eval", &a, &result)?;
    }
    Ok(true)
}

pub fn walk(mut a: WalkArgs) -> Result<bool> {
    let op = need(a.op, "op")?;
    let spec = || -> Result<walk::TrinomialSpec> { walk::TrinomialSpec::new(need(a.pt1, "pt1")?, need(a.pt2, "pt2")?) };
    let result: Value = match op {
        WalkOp::Exact => {
            let d = walk::exact_distribution(spec()?, need(a.k, "k")?)?;
            let mut w = csv_writer(a.out.as_deref())?;
            w.write_record(["pt1", "pt2", "k", "s", "prob"])?;
            let s = spec()?;
            for (i, p) in d.pmf.iter().enumerate() {
                let pos = i as i64 - d.k as i64;
                w.write_record([s.pt1.to_string(), s.pt2.to_string(), d.k.to_string(), pos.to_string(), p.to_string()])?;
            }
            w.flush()?;
            return Ok(true);
        }
        WalkOp::Phi => json!(walk::phi_k(spec()?, need(a.k, "k")?)?),
        WalkOp::McPhi => {
            let seed = ensure_seed(&mut a.seed);
            json!(walk::mc_phi_k(spec()?, need(a.k, "k")?, need(a.reps, "reps")?, seed)?)
        }
        WalkOp::Cheby => json!(walk::cheby_bound_shape(spec()?, need(a.n, "n")?, need(a.p, "p")?)?),
        WalkOp::Chebyplus => json!(walk::chebyplus_bound_shape(spec()?, need(a.n, "n")?, need(a.p, "p")?)?),
        WalkOp::BinomGauss => json!(walk::binom_gauss_ratio(need(a.n, "n")?, need(a.k, "k")?, need(a.prob, "prob")?)?),
        WalkOp::RecipMoment => json!(walk::recip_moment(need(a.prob, "prob")?, need(a.n, "n")?, need(a.p, "p")?)?),
    };
    write_summary(a.summary.as_deref(), "walk", &a, &result)?;
    Ok(true)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn simulate(mut a: SimulateArgs) -> Result<bool> {
    let kind = a.kind.unwrap_or(SimKind::Paths);
    a.kind = Some(kind);
    let seed = ensure_seed(&mut a.seed);
    let reps = need(a.reps, "reps")?;
    match kind {
        SimKind::Paths => {
            let n = need(a.n, "n")?;
            let grid = TimeGrid::new(need(a.grid.clone(), "grid")?)?;
            let spec = EnsembleSpec::new(n, grid, seed)?;
            let paths = simulate_ensemble(&spec, reps)?;
            let mut w = csv_writer(a.out.as_deref())?;
            w.write_record(["seed", "n", "reps", "rep", "t", "x"])?;
            for p in &paths {
                for (t, x) in spec.grid.times().iter().zip(&p.values) {
                    w.write_record([seed.to_string(), n.to_string(), reps.to_string(), p.rep.to_string(), fmt(*t), fmt(*x)])?;
                }
            }
            w.flush()?;
            if a.summary.is_some() {
                write_summary(a.summary.as_deref(), "simulate", &a, &json!({"paths": paths.len()}))?;
            }
        }
        SimKind::Jump => {
            let n = need(a.n, "n")?;
            let delta = need(a.delta, "delta")?;
            let eps = need(a.eps, "eps")?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid("eps", format!("need 0 < eps < 1, got {eps}")));
            }
            let dir = match a.direction.unwrap_or(DirectionArg::Rise) {
                DirectionArg::Rise => Direction::Rise,
                DirectionArg::Drop => Direction::Drop,
            };
            let est = jump_frequency(n, delta, eps / (n as f64).sqrt(), dir, reps, seed)?;
            write_summary(a.summary.as_deref(), "simulate", &a, &est)?;
        }
        SimKind::Componentwise => {
            let n = need(a.n, "n")?;
            let entries = need(a.cov.clone(), "cov")?;
            let d = (entries.len() as f64).sqrt().round() as usize;
            if d * d != entries.len() || d == 0 {
                return Err(invalid("cov", format!("{} entries do not form a square matrix", entries.len())));
            }
            let cov = DMatrix::from_row_slice(d, d, &entries);
            let samples = componentwise_median_sample(&cov, n, reps, seed)?;
            let mut w = csv_writer(a.out.as_deref())?;
            w.write_record(["seed", "n", "reps", "rep", "component", "x"])?;
            for (r, row) in samples.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    w.write_record([seed.to_string(), n.to_string(), reps.to_string(), r.to_string(), c.to_string(), fmt(*x)])?;
                }
            }
            w.flush()?;
        }
        SimKind::Scaling => {
            let n = need(a.n, "n")?;
            let t = need(a.t, "t")?;
            let c = need(a.c, "c")?;
            let (sa, sb) = scaling_law_samples(n, t, c, reps, seed)?;
            let mut w = csv_writer(a.out.as_deref())?;
            w.write_record(["seed", "n", "t", "c", "set", "rep", "x"])?;
            for (set, xs) in [("scaled_time", &sa), ("scaled_value", &sb)] {
                for (r, x) in xs.iter().enumerate() {
                    w.write_record([seed.to_string(), n.to_string(), fmt(t), fmt(c), set.to_string(), r.to_string(), fmt(*x)])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(true)
}

pub fn limit_sample(mut a: LimitArgs) -> Result<bool> {
    let seed = ensure_seed(&mut a.seed);
    if a.holder.unwrap_or(false) {
        let model = match a.model.unwrap_or(ModelArg::Limit) {
            ModelArg::Limit => ScalingModel::Limit,
            ModelArg::Brownian => ScalingModel::Brownian,
            ModelArg::Fbm => ScalingModel::Fbm(need(a.hurst, "hurst")?),
        };
        let method = match a.method.unwrap_or(MethodArg::ClosedForm) {
            MethodArg::ClosedForm => ScalingMethod::ClosedForm,
            MethodArg::Sampled => ScalingMethod::Sampled,
        };
        let gaps = need(a.gaps.clone(), "gaps")?;
        let est = holder_scaling_estimate(model, method, a.t.unwrap_or(1.0), &gaps, a.reps.unwrap_or(0), seed)?;
        write_summary(a.summary.as_deref(), "limit-sample", &a, &est)?;
        return Ok(true);
    }
    let grid = TimeGrid::new(need(a.grid.clone(), "grid")?)?;
    let reps = need(a.reps, "reps")?;
    let s = sample_limit(&grid, reps, seed)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["seed", "reps", "rep", "t", "x"])?;
    for (r, row) in s.paths.iter().enumerate() {
        for (t, x) in s.times.iter().zip(row) {
            w.write_record([seed.to_string(), reps.to_string(), r.to_string(), fmt(*t), fmt(*x)])?;
        }
    }
    w.flush()?;
    if a.summary.is_some() {
        write_summary(a.summary.as_deref(), "limit-sample", &a, &json!({"jitter_used": s.jitter_used}))?;
    }
    Ok(true)
}

fn check_config(a: &VerifyArgs) -> CheckConfig {
    let mut cfg = CheckConfig::default();
    if let Some(d) = a.delta0 {
        cfg.delta0 = d;
    }
    if let Some(c) = a.key_ratio_ceiling {
        cfg.key_ratio_ceiling = c;
    }
    cfg
}

fn emit_reports(a: &VerifyArgs, cfg: &CheckConfig, reports: Vec<VerificationReport>, extra: Value) -> Result<bool> {
    let passed = reports.iter().all(|r| r.passed);
    let results = json!({"passed": passed, "check_config": cfg, "reports": reports, "extra": extra});
    write_summary(a.out.as_deref(), "verify", a, &results)?;
    if let Some(p) = &a.csv {
        write_reports_csv(sink(Some(p))?, &reports)?;
    }
    Ok(passed)
}

pub fn verify(mut a: VerifyArgs) -> Result<bool> {
    let suite = need(a.suite, "suite")?;
    let cfg = check_config(&a);
    if suite == Suite::Acceptance {
        let seed = *a.seed.get_or_insert(DEFAULT_SEED);
        let run = if a.no_determinism.unwrap_or(false) {
            run_acceptance(seed, &cfg)?
        } else {
            let workers = a.determinism_workers.clone().unwrap_or_else(|| vec![8, 1]);
            run_acceptance_with_determinism(seed, &cfg, &workers)?
        };
        for c in &run.criteria {
            eprintln!("{}", c.line());
        }
        write_summary(a.out.as_deref(), "verify", &a, &run)?;
        if let Some(p) = &a.csv {
            let mut w = sink(Some(p))?;
            w.write_all(run.to_csv()?.as_bytes())?;
            w.flush()?;
        }
        return Ok(run.passed);
    }
    let seed = ensure_seed(&mut a.seed);
    let reports = match suite {
        Suite::Acceptance => unreachable!(),
        Suite::Cond => vec![verify_cond_inequality(
            need(a.n, "n")?,
            need(a.y, "y")?,
            need(a.delta, "delta")?,
            need(a.reps, "reps")?,
            seed,
            &cfg,
        )?],
        Suite::Split => vec![verify_split_bound(
            need(a.n, "n")?,
            need(a.y, "y")?,
            need(a.delta, "delta")?,
            a.x0,
            need(a.reps, "reps")?,
            seed,
        )?],
        Suite::Key => vec![verify_key_estimate(
            need(a.eps, "eps")?,
            need(a.delta, "delta")?,
            need(a.n, "n")?,
            need(a.p, "p")?,
            need(a.reps, "reps")?,
            seed,
            &cfg,
        )?],
        Suite::KeySweep => {
            let deltas = need(a.deltas.clone(), "deltas")?;
            let (reports, slope) = key_estimate_sweep(
                need(a.eps, "eps")?,
                need(a.alpha, "alpha")?,
                &deltas,
                need(a.p, "p")?,
                need(a.reps, "reps")?,
                seed,
                &cfg,
            )?;
            let ok = slope <= 0.05;
            let passed = emit_reports(&a, &cfg, reports, json!({"slope": slope, "slope_ok": ok}))?;
            return Ok(passed && ok);
        }
        Suite::Expansion => {
            let pt = CertificatePoint {
                alpha: need(a.alpha, "alpha")?,
                beta: a.beta.or(a.alpha).expect("alpha checked above"),
                delta: need(a.delta, "delta")?,
            };
            vec![verify_expansion_certificates(&[pt], &cfg)?]
        }
    };
    emit_reports(&a, &cfg, reports, Value::Null)
}

pub fn report(a: ReportArgs) -> Result<bool> {
    let path = need(a.input.clone(), "input")?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)?;
    let results = doc.get("results").cloned().unwrap_or(Value::Null);
    let reports: Vec<VerificationReport> = if results.get("criteria").is_some() {
        let run: AcceptanceRun = serde_json::from_value(results)?;
        run.criteria.into_iter().flat_map(|c| c.reports).collect()
    } else if let Some(r) = results.get("reports") {
        serde_json::from_value(r.clone())?
    } else {
        return Err(Error::Config(format!("{} is not a verification output", path.display())));
    };
    for r in &reports {
        let se = r.lhs.std_err().map(|s| format!(" (se {s:.3e})")).unwrap_or_default();
        println!(
            "{:<4} {:<48} lhs {:.6e}{se}  rhs {:.6e}  margin {:.3e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.claim_id,
            r.lhs.value(),
            r.rhs,
            r.margin
        );
    }
    if let Some(p) = &a.csv {
        write_reports_csv(sink(Some(p))?, &reports)?;
    }
    Ok(reports.iter().all(|r| r.passed))
}
