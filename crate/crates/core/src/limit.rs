//! Exact sampling of the Gaussian limit process on a finite grid and
//! local-scaling estimates against Brownian and fractional controls.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::covariance::{fbm_covariance, increment_variance, limit_covariance};
use crate::rng::{domain, Stream};
use crate::sim::{MCEstimate, TimeGrid};
use crate::verify::stats::loglog_slope;

/// Jitter ladder, as multiples of `trace / m`.
pub const JITTER_LADDER: [f64; 5] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub grid: TimeGrid,
    pub entries: DMatrix<f64>,
    pub jitter_used: f64,
}

impl CovMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.min()
    }
}

pub fn covariance_matrix(grid: &TimeGrid) -> CovMatrix {
    let t = grid.times();
    let m = t.len();
    let entries = DMatrix::from_fn(m, m, |i, j| {
        limit_covariance(t[i], t[j]).expect("grid times are validated")
    });
    CovMatrix {
        grid: grid.clone(),
        entries,
        jitter_used: 0.0,
    }
}

/// Lower Cholesky factor of `cov`, escalating diagonal jitter along
/// [`JITTER_LADDER`] when the plain factorization fails.
pub fn factorize(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Ok((c.l(), 0.0));
    }
    let m = cov.nrows();
    let unit = cov.trace() / m as f64;
    for mult in JITTER_LADDER {
        let jitter = mult * unit;
        let mut a = cov.clone();
        for i in 0..m {
            a[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(a) {
            return Ok((c.l(), jitter));
        }
    }
    Err(Error::Factorization {
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * unit,
        trace: cov.trace(),
        dim: m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSamples {
    pub times: Vec<f64>,
    /// One row per replication.
    pub paths: Vec<Vec<f64>>,
    pub jitter_used: f64,
    pub seed: u64,
}

/// `reps` exact draws of `(X(t_1), ..., X(t_m))`. Zero times are pinned to 0
/// and excluded from the factorization.
pub fn sample_limit(grid: &TimeGrid, reps: usize, seed: u64) -> Result<LimitSamples> {
    let times = grid.times();
    let live: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 0.0).collect();
    let sub = TimeGrid::new(live.iter().map(|&i| times[i]).collect());
    let (factor, jitter) = match &sub {
        Ok(g) => factorize(&covariance_matrix(g).entries)?,
        Err(_) => (DMatrix::zeros(0, 0), 0.0),
    };
    let d = live.len();
    let last = u32::try_from(reps).map_err(|_| invalid("reps", "too many replications"))?;
    let paths = (0..last)
        .into_par_iter()
        .map(|r| {
            let mut stream = Stream::new(seed, domain::LIMIT, r, 0);
            let z = DVector::from_fn(d, |_, _| stream.normal());
            let x = &factor * z;
            let mut row = vec![0.0; times.len()];
            for (a, &i) in live.iter().enumerate() {
                row[i] = x[a];
            }
            row
        })
        .collect();
    Ok(LimitSamples {
        times: times.to_vec(),
        paths,
        jitter_used: jitter,
        seed,
    })
}

/// Process whose local scaling is being measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScalingModel {
    /// The arcsine-covariance limit process.
    Limit,
    /// Standard Brownian motion, increment variance `h`.
    Brownian,
    /// Fractional Brownian motion with the given Hurst index.
    Fbm(f64),
}

impl ScalingModel {
    fn cov(&self, s: f64, t: f64) -> f64 {
        match *self {
            ScalingModel::Limit => limit_covariance(s, t).expect("nonnegative times"),
            ScalingModel::Brownian => s.min(t),
            ScalingModel::Fbm(h) => fbm_covariance(h, s, t),
        }
    }

    /// `E|X(t + h) - X(t)|^2` in closed form.
    pub fn increment_variance(&self, t: f64, h: f64) -> f64 {
        match *self {
            ScalingModel::Limit => increment_variance(t, t + h).expect("ordered times"),
            ScalingModel::Brownian => h,
            ScalingModel::Fbm(hurst) => h.powf(2.0 * hurst),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalingMethod {
    ClosedForm,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMoment {
    pub gap: f64,
    /// Closed-form value, or sample mean with its standard error.
    pub estimate: MCEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub slope: f64,
    pub points: Vec<GapMoment>,
}

/// Log-log slope of `E|X(t + h) - X(t)|^2` against the gap `h`.
///
/// The sampled route draws `(X(t), X(t + h) - X(t))` jointly from their
/// exact bivariate law.
pub fn holder_scaling_estimate(
    model: ScalingModel,
    method: ScalingMethod,
    t: f64,
    gaps: &[f64],
    reps: usize,
    seed: u64,
) -> Result<HolderEstimate> {
    if gaps.len() < 3 {
        return Err(invalid("gaps", format!("need at least 3 gaps, got {}", gaps.len())));
    }
    if let Some(h) = gaps.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
        return Err(invalid("gaps", format!("gaps must be positive, got {h}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("need t > 0, got {t}")));
    }
    if method == ScalingMethod::Sampled && reps < 2 {
        return Err(invalid("reps", "sampled route needs at least 2 replications"));
    }
    let last = u32::try_from(reps).map_err(|_| invalid("reps", "too many replications"))?;
    let mut points = Vec::with_capacity(gaps.len());
    for (g, &h) in gaps.iter().enumerate() {
        let v = model.increment_variance(t, h);
        let estimate = match method {
            ScalingMethod::ClosedForm => MCEstimate {
                mean: v,
                std_err: 0.0,
                reps: 0,
                seed,
                warning: None,
            },
            ScalingMethod::Sampled => {
                let a = model.cov(t, t);
                let c = model.cov(t, t + h) - a;
                let cond = (v - c * c / a).max(0.0);
                let sq: Vec<f64> = (0..last)
                    .into_par_iter()
                    .map(|r| {
                        let mut stream = Stream::new(seed, domain::HOLDER, r, g as u32);
                        let z1 = stream.normal();
                        let z2 = stream.normal();
                        let inc = c / a.sqrt() * z1 + cond.sqrt() * z2;
                        inc * inc
                    })
                    .collect();
                MCEstimate::from_samples(&sq, seed)
            }
        };
        points.push(GapMoment { gap: h, estimate });
    }
    let ys: Vec<f64> = points.iter().map(|p| p.estimate.mean).collect();
    let slope = loglog_slope(gaps, &ys)?;
    Ok(HolderEstimate { slope, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn grid(v: &[f64]) -> TimeGrid {
        TimeGrid::new(v.to_vec()).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let c = covariance_matrix(&grid(&[1.0]));
        assert!((c.entries[(0, 0)] - FRAC_PI_2).abs() < 1e-15);
        let c = covariance_matrix(&grid(&[0.0, 2.0]));
        assert_eq!(c.entries[(0, 0)], 0.0);
        assert_eq!(c.entries[(0, 1)], 0.0);
        let c = covariance_matrix(&grid(&[1.0, 2.0]));
        assert!((c.entries[(0, 1)] - 2f64.sqrt() * PI / 4.0).abs() < 1e-15);
        assert_eq!(c.entries[(0, 1)], c.entries[(1, 0)]);
    }

    #[test]
    fn fine_grid_is_psd_and_factorizes() {
        let times: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
        let c = covariance_matrix(&grid(&times));
        let tr = c.trace();
        assert!(c.min_eigenvalue() >= -1e-8 * tr);
        let (_, jitter) = factorize(&c.entries).unwrap();
        assert!(jitter <= 1e-8 * tr / times.len() as f64);
        for (i, &t) in times.iter().enumerate() {
            assert!((c.entries[(i, i)] - FRAC_PI_2 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn factorization_failure_reports() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        assert!(matches!(factorize(&bad), Err(Error::Factorization { dim: 2, .. })));
    }

    #[test]
    fn zero_time_is_pinned() {
        let s = sample_limit(&grid(&[0.0, 0.5, 1.0]), 500, 4).unwrap();
        assert!(s.paths.iter().all(|p| p[0] == 0.0));
        let only_zero = sample_limit(&grid(&[0.0]), 10, 4).unwrap();
        assert!(only_zero.paths.iter().all(|p| p == &vec![0.0]));
    }

    #[test]
    fn univariate_variance() {
        let s = sample_limit(&grid(&[1.0]), 100_000, 11).unwrap();
        let xs: Vec<f64> = s.paths.iter().map(|p| p[0]).collect();
        let v = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let se = FRAC_PI_2 * (2.0 / xs.len() as f64).sqrt();
        assert!((v - FRAC_PI_2).abs() <= 3.0 * se);
    }

    #[test]
    fn closed_form_slopes() {
        let gaps: Vec<f64> = (4..=10).rev().map(|e| 2f64.powi(-e)).collect();
        let lim = holder_scaling_estimate(ScalingModel::Limit, ScalingMethod::ClosedForm, 1.0, &gaps, 0, 0).unwrap();
        assert!((0.45..=0.55).contains(&lim.slope), "slope {}", lim.slope);
        let bm = holder_scaling_estimate(ScalingModel::Brownian, ScalingMethod::ClosedForm, 1.0, &gaps, 0, 0).unwrap();
        assert!((bm.slope - 1.0).abs() < 1e-12);
        let fbm = holder_scaling_estimate(ScalingModel::Fbm(0.25), ScalingMethod::ClosedForm, 1.0, &gaps, 0, 0).unwrap();
        assert!((fbm.slope - 0.5).abs() < 1e-12);
        assert!(holder_scaling_estimate(ScalingModel::Limit, ScalingMethod::ClosedForm, 1.0, &gaps[..2], 0, 0).is_err());
    }

    #[test]
    fn sampled_matches_closed_form() {
        let gaps = [1e-4, 1e-3, 1e-2, 1e-1];
        for model in [ScalingModel::Limit, ScalingModel::Brownian, ScalingModel::Fbm(0.25)] {
            let s = holder_scaling_estimate(model, ScalingMethod::Sampled, 1.0, &gaps, 20_000, 6).unwrap();
            for p in &s.points {
                let exact = model.increment_variance(1.0, p.gap);
                assert!((p.estimate.mean - exact).abs() <= 3.0 * p.estimate.std_err, "{model:?} h={}", p.gap);
            }
        }
    }

    #[test]
    fn local_ratio_bounded() {
        for e in 1..=6 {
            let h = 10f64.powi(-e);
            let r = increment_variance(1.0, 1.0 + h).unwrap() / h.sqrt();
            assert!((0.5..=4.0).contains(&r), "h={h} r={r}");
        }
    }
}
