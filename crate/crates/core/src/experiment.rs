//! The convergence study over growing grids and the variance study of a
//! fixed geodesic across random boards.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Deserialize;

use crate::ell::{estimate_ell, CandidatePolicy, EllEstimate};
use crate::error::{Error, Result};
use crate::geodesic::{reduce_horizon, traverse, Geodesic};
use crate::grid::{Checkerboard, GridSpec};
use crate::largedev::{chebyshev_check, chebyshev_row, ChebyshevReport, CHEBYSHEV_CSV_HEADER};
use crate::rng;

pub const HISTOGRAM_BINS: usize = 20;

/// Per-field overrides of [`CandidatePolicy::default_for`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverrides {
    pub vertex_pair_range: Option<u64>,
    pub eta: Option<f64>,
    pub random_count: Option<usize>,
    pub refine_iters: Option<usize>,
    pub refine_tolerance: Option<f64>,
}

impl PolicyOverrides {
    pub fn apply(&self, grid: &GridSpec, horizon: f64) -> Result<CandidatePolicy> {
        let base = CandidatePolicy::default_for(grid, horizon);
        let p = CandidatePolicy {
            vertex_pair_range: self.vertex_pair_range.unwrap_or(base.vertex_pair_range),
            eta: self.eta.unwrap_or(base.eta),
            random_count: self.random_count.unwrap_or(base.random_count),
            refine_iters: self.refine_iters.unwrap_or(base.refine_iters),
            refine_tolerance: self.refine_tolerance.unwrap_or(base.refine_tolerance),
        };
        p.validate(grid, horizon)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub n_values: Vec<u64>,
    pub trials_per_n: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub policy: PolicyOverrides,
}

impl ConvergenceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        reduce_horizon(self.horizon)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidProbability(self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta = {}, expected > 0", self.delta)));
        }
        if self.n_values.is_empty() || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "n_values must be nonempty and strictly increasing".into(),
            ));
        }
        if self.trials_per_n == 0 {
            return Err(Error::InvalidConfig("trials_per_n must be positive".into()));
        }
        for &n in &self.n_values {
            GridSpec::new(self.d, n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub estimate: EllEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub trials: u64,
    pub mean_ell_hat: f64,
    /// `P(ℓ̂ ≥ ε+δ)`; over-reports the event of the upper half.
    pub p_upper: f64,
    /// `P(ℓ̂ ≤ ε−δ)`; under-reports the event of the lower half.
    pub p_lower: f64,
    pub p_deviation: f64,
    pub histogram: [u64; HISTOGRAM_BINS],
    pub records: Vec<TrialRecord>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: ConvergenceConfig,
    /// Horizon actually used, `T/m` with `m = ⌊T⌋+1`.
    pub horizon: f64,
    pub rows: Vec<ConvergenceRow>,
}

fn bin_of(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let (horizon, _) = reduce_horizon(cfg.horizon)?;
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let started = Instant::now();
        let grid = GridSpec::new(cfg.d, n)?;
        let policy = cfg.policy.apply(&grid, horizon)?;
        let outcomes: Vec<Result<TrialRecord>> = (0..cfg.trials_per_n)
            .into_par_iter()
            .map(|trial| {
                let seed = rng::derive_seed(&[cfg.master_seed, n, trial]);
                let run = || {
                    let board = Checkerboard::sample(grid, cfg.epsilon, seed)?;
                    estimate_ell(&board, horizon, &policy, seed)
                };
                run()
                    .map(|estimate| TrialRecord { trial, seed, estimate })
                    .map_err(|e| Error::TrialFailed {
                        n,
                        trial,
                        seed,
                        source: Box::new(e),
                    })
            })
            .collect();
        let records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let k = records.len() as f64;
        let count = |f: &dyn Fn(f64) -> bool| {
            records.iter().filter(|r| f(r.estimate.value)).count() as f64 / k
        };
        let (eps, delta) = (cfg.epsilon, cfg.delta);
        let mut histogram = [0u64; HISTOGRAM_BINS];
        for r in &records {
            histogram[bin_of(r.estimate.value)] += 1;
        }
        rows.push(ConvergenceRow {
            n,
            trials: cfg.trials_per_n,
            mean_ell_hat: records.iter().map(|r| r.estimate.value).sum::<f64>() / k,
            p_upper: count(&|v| v >= eps + delta),
            p_lower: count(&|v| v <= eps - delta),
            p_deviation: count(&|v| (v - eps).abs() >= delta),
            histogram,
            records,
            wall_time: started.elapsed(),
        });
    }
    Ok(ConvergenceReport {
        config: cfg.clone(),
        horizon,
        rows,
    })
}

impl ConvergenceReport {
    /// One row per `n`. `ℓ̂` bounds `ℓ^T` from above, hence the column
    /// labels on the two one-sided probabilities.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "n,trials,horizon,mean_ell_hat,p_ge_eps_plus_delta_overreported,\
             p_le_eps_minus_delta_underreported,p_deviation\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.trials, self.horizon, r.mean_ell_hat, r.p_upper, r.p_lower, r.p_deviation
            );
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("n,bin_low,bin_high,count\n");
        for r in &self.rows {
            for (b, count) in r.histogram.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{count}",
                    r.n,
                    b as f64 / HISTOGRAM_BINS as f64,
                    (b + 1) as f64 / HISTOGRAM_BINS as f64
                );
            }
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from("n,trial,seed,ell_hat,method\n");
        for r in &self.rows {
            for t in &r.records {
                let method = serde_json::to_value(t.estimate.method).expect("tag serializes");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n,
                    t.trial,
                    t.seed,
                    t.estimate.value,
                    method.as_str().unwrap_or_default()
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceStudy {
    pub n: u64,
    pub horizon: f64,
    pub reports: Vec<ChebyshevReport>,
}

impl VarianceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CHEBYSHEV_CSV_HEADER);
        out.push('\n');
        for (i, r) in self.reports.iter().enumerate() {
            chebyshev_row(&mut out, i, self.n, self.horizon, r);
        }
        out
    }
}

/// Runs [`chebyshev_check`] for `geodesic_count` random geodesics.
pub fn run_variance_study(
    grid: &GridSpec,
    horizon: f64,
    epsilon: f64,
    geodesic_count: usize,
    trials: u64,
    seed: u64,
) -> Result<VarianceStudy> {
    let mut rng = rng::seeded_rng(rng::derive_seed(&[seed, 0x7A]));
    let mut reports = Vec::with_capacity(geodesic_count);
    while reports.len() < geodesic_count {
        let g = Geodesic::random(grid.d(), &mut rng);
        let tr = match traverse(&g, grid, horizon) {
            Err(Error::GammaHGeodesic) => continue,
            other => other?,
        };
        let index = reports.len() as u64;
        reports.push(chebyshev_check(&tr, epsilon, trials, rng::derive_seed(&[seed, index]))?);
    }
    Ok(VarianceStudy {
        n: grid.n(),
        horizon,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(epsilon: f64) -> ConvergenceConfig {
        ConvergenceConfig {
            d: 2,
            horizon: 0.5,
            epsilon,
            delta: 0.15,
            n_values: vec![2, 3],
            trials_per_n: 4,
            master_seed: 5,
            policy: PolicyOverrides {
                random_count: Some(16),
                ..Default::default()
            },
        }
    }

    #[test]
    fn parses_toml() {
        let cfg = ConvergenceConfig::from_toml(
            "d = 2\nT = 0.5\nepsilon = 0.5\ndelta = 0.15\nn_values = [5, 10]\n\
             trials_per_n = 3\nmaster_seed = 1\n[policy]\nrandom_count = 8\n",
        )
        .unwrap();
        assert_eq!(cfg.horizon, 0.5);
        assert_eq!(cfg.policy.random_count, Some(8));
        let bad = "d = 2\nT = 0.5\nepsilon = 0.5\ndelta = 0.15\nn_values = [10, 5]\n\
                   trials_per_n = 3\nmaster_seed = 1\n";
        assert!(matches!(
            ConvergenceConfig::from_toml(bad),
            Err(Error::InvalidConfig(_))
        ));
        assert!(ConvergenceConfig::from_toml("d = 2").is_err());
    }

    #[test]
    fn trivial_probabilities() {
        for eps in [0.0, 1.0] {
            let rep = run_convergence(&config(eps)).unwrap();
            for row in &rep.rows {
                assert_eq!(row.mean_ell_hat, eps);
                assert_eq!(row.p_deviation, 0.0);
                assert_eq!(row.histogram.iter().sum::<u64>(), row.trials);
            }
        }
    }

    #[test]
    fn csv_is_reproducible() {
        let a = run_convergence(&config(0.5)).unwrap();
        let b = run_convergence(&config(0.5)).unwrap();
        assert_eq!(a.summary_csv(), b.summary_csv());
        assert_eq!(a.trials_csv(), b.trials_csv());
        assert_eq!(a.histogram_csv().lines().count(), 1 + 2 * HISTOGRAM_BINS);
    }

    #[test]
    fn long_horizons_are_reduced() {
        let mut cfg = config(0.0);
        cfg.horizon = 1.5;
        assert_eq!(run_convergence(&cfg).unwrap().horizon, 0.75);
    }

    #[test]
    fn variance_study_trivial() {
        let grid = GridSpec::new(2, 10).unwrap();
        for eps in [0.0, 1.0] {
            let s = run_variance_study(&grid, 0.5, eps, 3, 200, 1).unwrap();
            assert!(s.reports.iter().all(|r| r.exact_variance == 0.0));
            assert_eq!(s.to_csv().lines().count(), 4);
        }
    }
}
