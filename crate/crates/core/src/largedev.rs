//! Concentration of weighted Bernoulli sums `Y_m = Σ λ_i X_i` and the
//! variance of the occupation fraction over random boards.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::Traversal;
use crate::grid::Checkerboard;
use crate::rng;
use crate::stats::{least_squares, Moments};

/// Largest `m` accepted by [`tail_exact`].
pub const EXACT_MAX_VARIABLES: usize = 24;

/// Deviations within this distance of `δ` count as reaching it, so sums such
/// as ten copies of `0.1` still hit their intended value.
pub const TIE_TOLERANCE: f64 = 1e-12;

const TRIAL_CHUNK: u64 = 1 << 14;

/// Weights `λ_1..λ_m` with `Σλ = 1` and `λ_i ≤ c/m`, over i.i.d.
/// Bernoulli(ε) variables.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSumSpec {
    weights: Vec<f64>,
    c: f64,
    epsilon: f64,
}

impl WeightedSumSpec {
    pub fn new(weights: Vec<f64>, c: f64, epsilon: f64) -> Result<Self> {
        let m = weights.len();
        if m < 3 {
            return Err(Error::InvalidSpec(format!("m = {m}, expected at least 3")));
        }
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::InvalidSpec(format!("c = {c}, expected c >= 1")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidProbability(epsilon));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSpec("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("weights sum to {total}")));
        }
        let cap = c / m as f64;
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w > cap + 1e-12)
        {
            return Err(Error::InvalidSpec(format!(
                "weight {} = {w} exceeds c/m = {cap}",
                i + 1
            )));
        }
        Ok(Self { weights, c, epsilon })
    }

    /// `λ_i = 1/m`, `c = 1`.
    pub fn uniform(m: usize, epsilon: f64) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m], 1.0, epsilon)
    }

    /// Weights rising linearly from `1` to `c` before normalization; the
    /// largest is `2c/(m(c+1)) ≤ c/m`.
    pub fn ramp(m: usize, c: f64, epsilon: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidSpec(format!("m = {m}, expected at least 3")));
        }
        let raw: Vec<f64> = (0..m)
            .map(|i| 1.0 + (c - 1.0) * i as f64 / (m - 1) as f64)
            .collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.iter().map(|w| w / total).collect(), c, epsilon)
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `exp(−δ²m/c)`, the decay envelope without its constant.
    pub fn envelope(&self, delta: f64) -> f64 {
        (-delta * delta * self.m() as f64 / self.c).exp()
    }

    fn deviates(&self, y: f64, delta: f64) -> bool {
        (y - self.epsilon).abs() >= delta - TIE_TOLERANCE
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("delta = {delta}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub m: usize,
    pub c: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    pub exact: Option<f64>,
    pub envelope: f64,
}

pub const TAIL_CSV_HEADER: &str = "m,c,epsilon,delta,trials,empirical_tail,exact_tail,envelope";

impl TailEstimate {
    pub fn csv_row(&self) -> String {
        let exact = self.exact.map(|e| e.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.m, self.c, self.epsilon, self.delta, self.trials, self.empirical, exact, self.envelope
        )
    }
}

/// Monte Carlo estimate of `P(|Y_m − ε| ≥ δ)`. Trial `k` draws its variables
/// from the counter stream keyed by `(seed, k)`.
pub fn tail_probability(
    spec: &WeightedSumSpec,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    check_delta(delta)?;
    if delta == 0.0 {
        return Err(Error::InvalidSpec("delta must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be positive".into()));
    }
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let end = ((chunk + 1) * TRIAL_CHUNK).min(trials);
            (chunk * TRIAL_CHUNK..end)
                .filter(|&k| {
                    let key = rng::derive_seed(&[seed, k]);
                    let y = spec
                        .weights
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| rng::bernoulli(key, i as u64, spec.epsilon))
                        .fold(0.0, |acc, (_, w)| acc + w);
                    spec.deviates(y, delta)
                })
                .count() as u64
        })
        .sum();
    Ok(TailEstimate {
        m: spec.m(),
        c: spec.c,
        epsilon: spec.epsilon,
        delta,
        trials,
        hits,
        empirical: hits as f64 / trials as f64,
        exact: None,
        envelope: spec.envelope(delta),
    })
}

/// Exact `P(|Y_m − ε| ≥ δ)` by summing over all `2^m` outcomes.
pub fn tail_exact(spec: &WeightedSumSpec, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let m = spec.m();
    if m > EXACT_MAX_VARIABLES {
        return Err(Error::TooManyVariables {
            m,
            max: EXACT_MAX_VARIABLES,
        });
    }
    let eps = spec.epsilon;
    let probs: Vec<f64> = (0..=m)
        .map(|k| eps.powi(k as i32) * (1.0 - eps).powi((m - k) as i32))
        .collect();
    let total = 1u64 << m;
    let chunk = 1u64 << m.saturating_sub(6).min(16);
    let parts: Vec<f64> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for outcome in c * chunk..((c + 1) * chunk).min(total) {
                let y = spec
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| outcome >> i & 1 == 1)
                    .fold(0.0, |a, (_, w)| a + w);
                if spec.deviates(y, delta) {
                    acc += probs[outcome.count_ones() as usize];
                }
            }
            acc
        })
        .collect();
    Ok(parts.iter().sum::<f64>().min(1.0))
}

/// Least-squares fit of `ln(tail)` against `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub delta: f64,
    pub tails: Vec<TailEstimate>,
    /// Values of `m` whose empirical tail was zero, left out of the fit.
    pub excluded: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// `−δ²/(2c)` with the largest `c` of the family.
    pub threshold: f64,
    pub decays: bool,
}

pub fn decay_fit(
    specs: &[WeightedSumSpec],
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<DecayReport> {
    if specs.len() < 4 {
        return Err(Error::InvalidSpec(format!(
            "decay fit needs at least 4 values of m, got {}",
            specs.len()
        )));
    }
    let tails = specs
        .iter()
        .enumerate()
        .map(|(i, s)| tail_probability(s, delta, trials, rng::derive_seed(&[seed, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    let excluded: Vec<usize> = tails.iter().filter(|t| t.hits == 0).map(|t| t.m).collect();
    let points: Vec<(f64, f64)> = tails
        .iter()
        .filter(|t| t.hits > 0)
        .map(|t| (t.m as f64, t.empirical.ln()))
        .collect();
    let (slope, intercept) = least_squares(&points).ok_or_else(|| {
        Error::DegenerateFit(format!(
            "{} usable tails over fewer than two distinct m (zero tails at m = {:?})",
            points.len(),
            excluded
        ))
    })?;
    let c = specs.iter().map(|s| s.c).fold(1.0, f64::max);
    let threshold = -delta * delta / (2.0 * c);
    Ok(DecayReport {
        delta,
        tails,
        excluded,
        slope,
        intercept,
        threshold,
        decays: slope <= threshold,
    })
}

/// Variance of `m_γ^T` over random boards for one fixed traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevReport {
    pub epsilon: f64,
    /// `ε(1−ε)Σw²`.
    pub exact_variance: f64,
    /// `ε(1−ε)(T+1)/T · √d/n`.
    pub bound: f64,
    pub empirical_variance: f64,
    pub empirical_mean: f64,
    pub trials: u64,
}

impl ChebyshevReport {
    pub fn within_bound(&self) -> bool {
        self.exact_variance <= self.bound
    }
}

pub fn chebyshev_check(
    traversal: &Traversal,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<ChebyshevReport> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidProbability(epsilon));
    }
    let grid = traversal.grid();
    let weighted: Vec<(u64, f64)> = traversal
        .occupation_weights()
        .into_iter()
        .map(|(cell, w)| (grid.flat_index(&cell), w))
        .collect();
    let var = epsilon * (1.0 - epsilon);
    let exact_variance = var * weighted.iter().map(|(_, w)| w * w).sum::<f64>();
    let t = traversal.horizon();
    let bound = var * (t + 1.0) / t * (grid.d() as f64).sqrt() / grid.n() as f64;

    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = Moments::default();
            for k in chunk * TRIAL_CHUNK..((chunk + 1) * TRIAL_CHUNK).min(trials) {
                let board_seed = rng::derive_seed(&[seed, k]);
                let m = weighted
                    .iter()
                    .filter(|(flat, _)| Checkerboard::sampled_bit(epsilon, board_seed, *flat))
                    .fold(0.0, |a, (_, w)| a + w);
                acc.push(m);
            }
            acc
        })
        .collect();
    let mut all = Moments::default();
    for p in &parts {
        all.merge(p);
    }
    Ok(ChebyshevReport {
        epsilon,
        exact_variance,
        bound,
        empirical_variance: all.variance(),
        empirical_mean: all.mean,
        trials,
    })
}

pub const CHEBYSHEV_CSV_HEADER: &str =
    "geodesic,n,epsilon,horizon,exact_variance,bound,empirical_variance,trials";

pub(crate) fn chebyshev_row(out: &mut String, index: usize, n: u64, horizon: f64, r: &ChebyshevReport) {
    let _ = writeln!(
        out,
        "{index},{n},{},{horizon},{},{},{},{}",
        r.epsilon, r.exact_variance, r.bound, r.empirical_variance, r.trials
    );
}
