//! The trinomial walk `S_k = Y_1 + ... + Y_k` with `Y_j` in `{-1, 0, 1}`:
//! exact law, Monte Carlo estimates of `P(S_k >= 0)`, and the bound shapes
//! used to control it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::density::ln_choose;
use crate::rng::{domain, Stream};
use crate::sim::MCEstimate;

/// Largest step count handled by the exact convolution.
pub const EXACT_STEP_CAP: usize = 20_000;

/// Step law with `P(Y = -1) = pt1` and `P(Y = +1) = pt2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrinomialSpec {
    pub pt1: f64,
    pub pt2: f64,
}

impl TrinomialSpec {
    pub fn new(pt1: f64, pt2: f64) -> Result<Self> {
        if !(pt1 >= 0.0 && pt2 >= 0.0) {
            return Err(invalid("pt1/pt2", format!("need nonnegative probabilities, got {pt1}, {pt2}")));
        }
        // rounding in p1 q2 + p2 q1 may exceed 1 by an ulp
        if pt1 + pt2 > 1.0 + 4.0 * f64::EPSILON {
            return Err(invalid("pt1/pt2", format!("pt1 + pt2 = {} exceeds 1", pt1 + pt2)));
        }
        Ok(TrinomialSpec { pt1, pt2 })
    }

    /// `P(Y = 0)`
    pub fn p0(&self) -> f64 {
        (1.0 - self.pt1 - self.pt2).max(0.0)
    }

    /// `P(Y != 0)`
    pub fn eps(&self) -> f64 {
        self.pt1 + self.pt2
    }

    /// `-E[Y]`
    pub fn mu(&self) -> f64 {
        self.pt1 - self.pt2
    }
}

/// Law of `S_k` on the support `{-k, ..., k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkDistribution {
    pub k: usize,
    pub pmf: Vec<f64>,
}

impl WalkDistribution {
    /// `P(S_k = s)`, zero outside the support.
    pub fn prob(&self, s: i64) -> f64 {
        let i = s + self.k as i64;
        if i < 0 || i as usize >= self.pmf.len() {
            0.0
        } else {
            self.pmf[i as usize]
        }
    }

    /// `P(S_k >= 0)`, ties included.
    pub fn prob_nonnegative(&self) -> f64 {
        self.pmf[self.k..].iter().sum::<f64>().min(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i as f64 - self.k as f64) * p)
            .sum()
    }
}

fn check_cap(k: usize) -> Result<()> {
    if k > EXACT_STEP_CAP {
        return Err(Error::StepCapExceeded {
            k,
            cap: EXACT_STEP_CAP,
        });
    }
    Ok(())
}

/// Runs the convolution to `k_max` steps, calling `visit(j, pmf)` after
/// each step `j` with the pmf indexed by `s + k_max`.
fn convolve<F: FnMut(usize, &[f64])>(spec: TrinomialSpec, k_max: usize, mut visit: F) {
    let (down, stay, up) = (spec.pt1, spec.p0(), spec.pt2);
    // one slot of zero padding on each side
    let width = 2 * k_max + 3;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    let mid = k_max + 1;
    cur[mid] = 1.0;
    visit(0, &cur[1..width - 1]);
    for j in 1..=k_max {
        for i in mid - j..=mid + j {
            next[i] = stay * cur[i] + down * cur[i + 1] + up * cur[i - 1];
        }
        std::mem::swap(&mut cur, &mut next);
        visit(j, &cur[1..width - 1]);
    }
}

/// Exact law of `S_k` by repeated convolution with the step law.
pub fn exact_distribution(spec: TrinomialSpec, k: usize) -> Result<WalkDistribution> {
    check_cap(k)?;
    let mut pmf = Vec::new();
    convolve(spec, k, |j, p| {
        if j == k {
            pmf = p.to_vec();
        }
    });
    Ok(WalkDistribution { k, pmf })
}

/// `P(S_k >= 0)` from the exact law.
pub fn phi_k(spec: TrinomialSpec, k: usize) -> Result<f64> {
    Ok(exact_distribution(spec, k)?.prob_nonnegative())
}

/// `P(S_k >= 0)` for several `k` from a single convolution pass.
pub fn phi_k_many(spec: TrinomialSpec, ks: &[usize]) -> Result<Vec<f64>> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    check_cap(k_max)?;
    let mut by_step = vec![f64::NAN; k_max + 1];
    let mut wanted = vec![false; k_max + 1];
    for &k in ks {
        wanted[k] = true;
    }
    convolve(spec, k_max, |j, p| {
        if wanted[j] {
            by_step[j] = p[k_max..].iter().sum::<f64>().min(1.0);
        }
    });
    Ok(ks.iter().map(|&k| by_step[k]).collect())
}

/// Monte Carlo estimate of `P(S_k >= 0)`; replication `r` draws from its
/// own substream so the estimate does not depend on the worker count.
pub fn mc_phi_k(spec: TrinomialSpec, k: usize, reps: usize, seed: u64) -> Result<MCEstimate> {
    if reps < 100 {
        return Err(invalid("reps", format!("need at least 100 replications, got {reps}")));
    }
    let reps_u32 = u32::try_from(reps).map_err(|_| invalid("reps", "too many replications"))?;
    let (down, up_edge) = (spec.pt1, spec.pt1 + spec.pt2);
    let hits: Vec<bool> = (0..reps_u32)
        .into_par_iter()
        .map(|r| {
            let mut stream = Stream::new(seed, domain::WALK, r, 0);
            let mut s = 0i64;
            for _ in 0..k {
                let u = stream.uniform();
                if u < down {
                    s -= 1;
                } else if u < up_edge {
                    s += 1;
                }
            }
            s >= 0
        })
        .collect();
    let count = hits.iter().filter(|&&h| h).count();
    Ok(MCEstimate::from_count(count, reps, seed))
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("need p > 1, got {p}")));
    }
    Ok(())
}

/// `eps / (n^p mu^{2p})`, the Chebyshev bound shape for `P(S_n >= 0)`.
pub fn cheby_bound_shape(spec: TrinomialSpec, n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(spec.mu() > 0.0) {
        return Err(invalid("mu", format!("bound needs mu > 0, got {}", spec.mu())));
    }
    if n == 0 {
        return Err(invalid("n", "need n >= 1"));
    }
    Ok(spec.eps() / ((n as f64).powf(p) * spec.mu().powf(2.0 * p)))
}

/// `eps^p / (n^p mu^{2p})`, the sharpened shape for a lazy walk.
pub fn chebyplus_bound_shape(spec: TrinomialSpec, n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    let eps = spec.eps();
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", format!("need 0 < eps < 1/2, got {eps}")));
    }
    if !(spec.mu() > 0.0) {
        return Err(invalid("mu", format!("bound needs mu > 0, got {}", spec.mu())));
    }
    if n == 0 {
        return Err(invalid("n", "need n >= 1"));
    }
    Ok((eps / (n as f64 * spec.mu() * spec.mu())).powf(p))
}

fn check_open_prob(name: &'static str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(name, format!("need a value in (0, 1), got {p}")));
    }
    Ok(())
}

fn ln_binom_pmf(n: usize, k: usize, ln_p: f64, ln_q: f64) -> f64 {
    ln_choose(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q
}

/// Binomial pmf over its Gaussian approximation at `k`.
pub fn binom_gauss_ratio(n: usize, k: usize, p: f64) -> Result<f64> {
    check_open_prob("p", p)?;
    if k > n {
        return Err(invalid("k", format!("need k <= n, got k = {k}, n = {n}")));
    }
    if n == 0 {
        return Err(invalid("n", "need n >= 1"));
    }
    let q = 1.0 - p;
    let var = n as f64 * p * q;
    let ln_f = ln_binom_pmf(n, k, p.ln(), q.ln());
    let dev = k as f64 - n as f64 * p;
    let ln_g = -0.5 * (std::f64::consts::TAU * var).ln() - dev * dev / (2.0 * var);
    Ok((ln_f - ln_g).exp())
}

/// `E[T^{-p}; T > 0]` for `T ~ Binomial(n, eps)`.
pub fn recip_moment(eps: f64, n: usize, p: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", format!("need 0 < eps < 1/2, got {eps}")));
    }
    check_p(p)?;
    let (ln_e, ln_q) = (eps.ln(), (-eps).ln_1p());
    Ok((1..=n)
        .map(|k| (ln_binom_pmf(n, k, ln_e, ln_q) - p * (k as f64).ln()).exp())
        .sum())
}
