//! Monte Carlo simulation of `n` independent Brownian motions and their
//! scaled median `X_n(t) = sqrt(n) M_n(t)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::density::median_rank;
use crate::rng::{derive_seed, domain, Stream};

/// Fewer events than this in a frequency estimate sets the warning flag.
pub const LOW_COUNT: usize = 10;

/// Strictly increasing, finite, nonnegative sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("grid", "time grid is empty"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("grid", "times must be finite"));
        }
        if times[0] < 0.0 {
            return Err(invalid("grid", format!("times must be >= 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            let reason = if w[1] == w[0] {
                format!("duplicate time {}", w[0])
            } else {
                format!("times not increasing: {} then {}", w[0], w[1])
            };
            return Err(invalid("grid", reason));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeGrid::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub n: usize,
    /// Median rank `floor((n + 1) / 2)`.
    pub k: usize,
    pub grid: TimeGrid,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, grid: TimeGrid, seed: u64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("n", "need at least one particle"));
        }
        if u32::try_from(n).is_err() {
            return Err(invalid("n", "particle count too large"));
        }
        Ok(EnsembleSpec {
            n,
            k: median_rank(n),
            grid,
            seed,
        })
    }
}

/// One realization of `X_n` at the grid times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianPath {
    pub rep: u32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub reps: usize,
    pub seed: u64,
    /// Set when the replication count is too small for the target.
    pub warning: Option<String>,
}

impl MCEstimate {
    /// Frequency estimate with binomial standard error.
    pub fn from_count(count: usize, reps: usize, seed: u64) -> Self {
        let mean = count as f64 / reps as f64;
        let std_err = (mean * (1.0 - mean) / reps as f64).sqrt();
        let warning = (count < LOW_COUNT).then(|| {
            format!("only {count} events in {reps} replications; increase reps for this probability")
        });
        MCEstimate {
            mean,
            std_err,
            reps,
            seed,
            warning,
        }
    }

    /// Sample mean with standard error `sd / sqrt(reps)`.
    pub fn from_samples(xs: &[f64], seed: u64) -> Self {
        let reps = xs.len();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
        } else {
            0.0
        };
        MCEstimate {
            mean,
            std_err: (var / reps as f64).sqrt(),
            reps,
            seed,
            warning: None,
        }
    }
}

fn rep_index(rep: usize) -> Result<u32> {
    u32::try_from(rep).map_err(|_| invalid("reps", "replication index exceeds 32 bits"))
}

/// Writes particle `j`'s Brownian path at the grid times into column `j`
/// of the row-major `m x n` buffer.
fn fill_particle(seed: u64, rep: u32, j: usize, times: &[f64], n: usize, out: &mut [f64]) {
    let mut stream = Stream::new(seed, domain::PATHS, rep, j as u32);
    let mut b = 0.0;
    let mut prev = 0.0;
    for (i, &t) in times.iter().enumerate() {
        b += (t - prev).sqrt() * stream.normal();
        prev = t;
        out[i * n + j] = b;
    }
}

/// Positions of all particles at the grid times, row `i` holding time `i`.
pub(crate) fn particle_positions(spec: &EnsembleSpec, rep: u32) -> Vec<f64> {
    let n = spec.n;
    let times = spec.grid.times();
    let mut pos = vec![0.0; times.len() * n];
    for j in 0..n {
        fill_particle(spec.seed, rep, j, times, n, &mut pos);
    }
    pos
}

/// The `k`-th smallest entry (1-based) by quickselect; reorders `row`.
pub fn kth_smallest(row: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Unscaled medians `M_n(t_i)` for one replication.
fn medians(spec: &EnsembleSpec, rep: u32) -> Vec<f64> {
    let mut pos = particle_positions(spec, rep);
    pos.chunks_mut(spec.n).map(|row| kth_smallest(row, spec.k)).collect()
}

/// Replication `rep` of the scaled median process on the spec's grid.
pub fn simulate_median_path(spec: &EnsembleSpec, rep: u32) -> MedianPath {
    let scale = (spec.n as f64).sqrt();
    MedianPath {
        rep,
        values: medians(spec, rep).into_iter().map(|m| scale * m).collect(),
    }
}

/// Replications `0..reps` of the scaled median process, in order.
pub fn simulate_ensemble(spec: &EnsembleSpec, reps: usize) -> Result<Vec<MedianPath>> {
    let last = rep_index(reps)?;
    Ok((0..last)
        .into_par_iter()
        .map(|r| simulate_median_path(spec, r))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `M_n(1 + delta) - M_n(1) > y`
    Rise,
    /// `M_n(1 + delta) - M_n(1) < -y`
    Drop,
}

/// Frequency of a median move beyond `y` (unscaled) over `[1, 1 + delta]`.
pub fn jump_frequency(
    n: usize,
    delta: f64,
    y: f64,
    direction: Direction,
    reps: usize,
    seed: u64,
) -> Result<MCEstimate> {
    if n < 3 {
        return Err(invalid("n", format!("need n >= 3, got {n}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    if !(y > 0.0) {
        return Err(invalid("y", format!("need y > 0, got {y}")));
    }
    if reps == 0 {
        return Err(invalid("reps", "need at least one replication"));
    }
    let spec = EnsembleSpec::new(n, TimeGrid::new(vec![1.0, 1.0 + delta])?, seed)?;
    let last = rep_index(reps)?;
    let hits: Vec<bool> = (0..last)
        .into_par_iter()
        .map(|r| {
            let m = medians(&spec, r);
            let d = m[1] - m[0];
            match direction {
                Direction::Rise => d > y,
                Direction::Drop => d < -y,
            }
        })
        .collect();
    let count = hits.iter().filter(|&&h| h).count();
    Ok(MCEstimate::from_count(count, reps, seed))
}

/// `P(M_n(1 + delta) - M_n(1) > eps / sqrt(n))` by simulation.
pub fn jump_probability(n: usize, delta: f64, eps: f64, reps: usize, seed: u64) -> Result<MCEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("need 0 < eps < 1, got {eps}")));
    }
    jump_frequency(n, delta, eps / (n as f64).sqrt(), Direction::Rise, reps, seed)
}

/// Symmetric square root of a covariance matrix after a PSD check.
pub(crate) fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    if d == 0 || cov.ncols() != d {
        return Err(invalid("cov", format!("need a nonempty square matrix, got {}x{}", d, cov.ncols())));
    }
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if (cov - cov.transpose()).amax() > 1e-12 * scale {
        return Err(invalid("cov", "matrix is not symmetric"));
    }
    let eig = SymmetricEigen::new(cov.clone());
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// `reps` draws of `sqrt(n)` times the component-wise median of `n` i.i.d.
/// centred Gaussian vectors with covariance `cov`.
pub fn componentwise_median_sample(
    cov: &DMatrix<f64>,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n < 1 || u32::try_from(n).is_err() {
        return Err(invalid("n", format!("invalid particle count {n}")));
    }
    let root = psd_sqrt(cov)?;
    let d = root.nrows();
    let k = median_rank(n);
    let scale = (n as f64).sqrt();
    let last = rep_index(reps)?;
    Ok((0..last)
        .into_par_iter()
        .map(|r| {
            let mut comps = vec![0.0; d * n];
            let mut z = vec![0.0; d];
            for j in 0..n {
                let mut stream = Stream::new(seed, domain::COMPONENTWISE, r, j as u32);
                z.iter_mut().for_each(|v| *v = stream.normal());
                for a in 0..d {
                    comps[a * n + j] = (0..d).map(|b| root[(a, b)] * z[b]).sum();
                }
            }
            comps.chunks_mut(n).map(|row| scale * kth_smallest(row, k)).collect()
        })
        .collect())
}

/// Independent samples of `X_n(c t)` and `sqrt(c) X_n(t)`.
pub fn scaling_law_samples(
    n: usize,
    t: f64,
    c: f64,
    reps: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("need t >= 0, got {t}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(invalid("c", format!("need c >= 0, got {c}")));
    }
    let draw = |time: f64, s: u64, factor: f64| -> Result<Vec<f64>> {
        let spec = EnsembleSpec::new(n, TimeGrid::new(vec![time])?, s)?;
        Ok(simulate_ensemble(&spec, reps)?
            .into_iter()
            .map(|p| factor * p.values[0])
            .collect())
    };
    let a = draw(c * t, derive_seed(seed, 1), 1.0)?;
    let b = draw(t, derive_seed(seed, 2), c.sqrt())?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(v: &[f64]) -> TimeGrid {
        TimeGrid::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![1.0, 0.5]).is_err());
        assert!(TimeGrid::new(vec![-0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::INFINITY]).is_err());
        assert_eq!(grid(&[0.0, 1.0]).len(), 2);
    }

    #[test]
    fn median_rank_convention() {
        let s = EnsembleSpec::new(4, grid(&[1.0]), 0).unwrap();
        assert_eq!(s.k, 2);
        let s = EnsembleSpec::new(1001, grid(&[1.0]), 0).unwrap();
        assert_eq!(s.k, 501);
    }

    #[test]
    fn starts_at_zero() {
        let s = EnsembleSpec::new(11, grid(&[0.0, 0.5, 1.0]), 9).unwrap();
        for p in simulate_ensemble(&s, 50).unwrap() {
            assert_eq!(p.values[0].to_bits(), 0f64.to_bits());
        }
    }

    #[test]
    fn selection_matches_full_sort() {
        let s = EnsembleSpec::new(8, grid(&[0.3, 1.0, 2.5]), 5).unwrap();
        for r in 0..20 {
            let pos = particle_positions(&s, r);
            let path = simulate_median_path(&s, r);
            for (i, row) in pos.chunks(s.n).enumerate() {
                let mut sorted = row.to_vec();
                sorted.sort_by(f64::total_cmp);
                assert_eq!(path.values[i], (s.n as f64).sqrt() * sorted[s.k - 1]);
                let below = row.iter().filter(|&&v| v < sorted[s.k - 1]).count();
                assert_eq!(below, s.k - 1);
            }
        }
    }

    #[test]
    fn particle_increment_variance() {
        let s = EnsembleSpec::new(1, grid(&[0.25, 1.0]), 17).unwrap();
        let reps = 40_000;
        let inc: Vec<f64> = (0..reps)
            .map(|r| {
                let p = particle_positions(&s, r);
                p[1] - p[0]
            })
            .collect();
        let var = inc.iter().map(|x| x * x).sum::<f64>() / reps as f64;
        // var of the sample variance of N(0, 0.75) is 2 * 0.75^2 / reps
        assert!((var - 0.75).abs() < 4.0 * (2.0 * 0.5625 / reps as f64).sqrt());
    }

    #[test]
    fn single_particle_is_brownian() {
        let s = EnsembleSpec::new(1, grid(&[1.0]), 2).unwrap();
        let xs: Vec<f64> = simulate_ensemble(&s, 20_000).unwrap().iter().map(|p| p.values[0]).collect();
        let v = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((v - 1.0).abs() < 4.0 * (2.0 / xs.len() as f64).sqrt());
    }

    #[test]
    fn ensemble_is_thread_count_invariant() {
        let s = EnsembleSpec::new(101, grid(&[0.5, 1.0]), 77).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_ensemble(&s, 300).unwrap());
        let b = four.install(|| simulate_ensemble(&s, 300).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn jump_rise_and_drop_are_symmetric() {
        let rise = jump_frequency(11, 0.01, 0.02, Direction::Rise, 40_000, 4).unwrap();
        let drop = jump_frequency(11, 0.01, 0.02, Direction::Drop, 40_000, 4).unwrap();
        let se = (rise.std_err.powi(2) + drop.std_err.powi(2)).sqrt();
        assert!((rise.mean - drop.mean).abs() <= 4.0 * se);
        let tiny = jump_probability(3, 1e-8, 0.99, 2_000, 1).unwrap();
        assert_eq!(tiny.mean, 0.0);
        assert!(tiny.warning.is_some());
        assert!(jump_probability(3, 0.1, 1.5, 100, 1).is_err());
    }

    #[test]
    fn componentwise_rejects_indefinite() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            componentwise_median_sample(&bad, 11, 10, 1),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn componentwise_independent_components() {
        let id = DMatrix::<f64>::identity(2, 2);
        let xs = componentwise_median_sample(&id, 101, 20_000, 8).unwrap();
        let m = xs.len() as f64;
        let c = xs.iter().map(|v| v[0] * v[1]).sum::<f64>() / m;
        let var0 = xs.iter().map(|v| v[0] * v[0]).sum::<f64>() / m;
        assert!(c.abs() < 4.0 * var0 / m.sqrt());
    }

    #[test]
    fn scaling_with_zero_factor() {
        let (a, b) = scaling_law_samples(11, 1.0, 0.0, 20, 3).unwrap();
        assert!(a.iter().chain(&b).all(|&v| v == 0.0));
    }
}
