//! Reproducible Monte Carlo sweeps over SNR.
//!
//! Trial `i` draws its channel from [`TrialSeed`]`(seed, i)` only, and the
//! same realization is evaluated at every SNR point and for every scheme.
//! Trials run on a rayon pool; results are collected in trial order and
//! reduced sequentially, so estimates do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aggregation::{evaluate_scheme1_best, evaluate_scheme2, CandidateStrategy};
use crate::channel::{realize, realize_dims};
use crate::selection::evaluate_selection;
use crate::{BeamGains, Error, Result, Scheme, SchemeOutcome, SystemConfig, TrialSeed};

/// Slack used by the legacy-protection audit.
pub const LEGACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Fraction of trials in outage.
    Outage,
    /// Mean secondary rate, counted only when SIC succeeds.
    ErgodicRate,
    /// Mean secondary rate ignoring the SIC condition.
    ErgodicRateUnconditioned,
    /// Mean over trials of the smallest primary rate.
    PrimaryMinRate,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Outage => "outage",
            Metric::ErgodicRate => "ergodic_rate",
            Metric::ErgodicRateUnconditioned => "ergodic_rate_unconditioned",
            Metric::PrimaryMinRate => "primary_min_rate",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outage" => Ok(Metric::Outage),
            "ergodic_rate" => Ok(Metric::ErgodicRate),
            "ergodic_rate_unconditioned" => Ok(Metric::ErgodicRateUnconditioned),
            "primary_min_rate" => Ok(Metric::PrimaryMinRate),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric `{other}` (expected outage, ergodic_rate, ergodic_rate_unconditioned or primary_min_rate)"
            ))),
        }
    }
}

/// A sweep over SNR at fixed N, M and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_antennas: usize,
    pub m_beams: usize,
    pub r_p: f64,
    pub r_s: f64,
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub trials: u64,
    pub seed: u64,
    pub candidate_strategy: CandidateStrategy,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        SystemConfig::new(self.n_antennas, self.m_beams, 1.0, self.r_p, self.r_s)?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("snr_db must not be empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("snr_db values must be finite".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("snr_db must be strictly increasing".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("at least one scheme is required".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("at least one metric is required".into()));
        }
        if self.candidate_strategy == CandidateStrategy::AllSubsets
            && self.m_beams > crate::aggregation::MAX_ALL_SUBSETS_BEAMS
        {
            return Err(Error::InvalidConfig(format!(
                "all-subsets enumeration supports at most {} beams, got m_beams = {}",
                crate::aggregation::MAX_ALL_SUBSETS_BEAMS,
                self.m_beams
            )));
        }
        Ok(())
    }

    fn config_at(&self, snr_db: f64) -> Result<SystemConfig> {
        SystemConfig::new(
            self.n_antennas,
            self.m_beams,
            crate::db_to_linear(snr_db),
            self.r_p,
            self.r_s,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub value: f64,
    pub std_err: f64,
    pub trials: u64,
    /// Singular-channel redraws over the whole sweep.
    pub resamples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub metric: Metric,
    pub estimate: MetricEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Ordered by SNR, then scheme, then metric, in the order given by the `SweepSpec`.
    pub rows: Vec<SweepRow>,
    pub resamples: u64,
    /// (trial, beam) pairs where a protectable primary user fell short of
    /// its target. Always zero unless something is broken.
    pub legacy_violations: u64,
}

impl SweepResult {
    pub fn get(&self, snr_db: f64, scheme: Scheme, metric: Metric) -> Option<&MetricEstimate> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.scheme == scheme && r.metric == metric)
            .map(|r| &r.estimate)
    }
}

/// Evaluates one scheme on fixed gains.
pub fn evaluate(gains: &BeamGains, cfg: &SystemConfig, scheme: Scheme, strategy: CandidateStrategy) -> SchemeOutcome {
    match scheme {
        Scheme::Selection => evaluate_selection(gains, cfg),
        Scheme::Scheme1 => evaluate_scheme1_best(gains, cfg, strategy),
        Scheme::Scheme2 => evaluate_scheme2(gains, cfg, strategy),
    }
}

/// Runs one trial: draws its channel and evaluates `scheme`. Also returns
/// the number of singular redraws.
pub fn run_trial(
    cfg: &SystemConfig,
    seed: TrialSeed,
    scheme: Scheme,
    strategy: CandidateStrategy,
) -> Result<(SchemeOutcome, u32)> {
    let (chan, resamples) = realize(cfg, seed)?;
    Ok((evaluate(&chan.gains, cfg, scheme, strategy), resamples))
}

/// True when every primary user able to meet its target does, and no
/// secondary power sits on a beam whose primary cannot be protected.
pub fn legacy_protected(gains: &BeamGains, cfg: &SystemConfig, outcome: &SchemeOutcome) -> bool {
    let floor = cfg.eps_p() / cfg.rho();
    (0..gains.len()).all(|m| {
        if gains.g_gain[m] >= floor {
            outcome.rates.r_primary[m] >= cfg.r_p() - LEGACY_TOLERANCE
        } else {
            outcome.coefficients.alpha_s[m] == 0.0
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    outage: bool,
    rate: f64,
    rate_unconditioned: f64,
    primary_min: f64,
    legacy_ok: bool,
}

struct TrialRecord {
    resamples: u32,
    /// Indexed by `snr_idx * schemes + scheme_idx`.
    samples: Vec<Sample>,
}

fn run_one(spec: &SweepSpec, configs: &[SystemConfig], index: u64) -> Result<TrialRecord> {
    let (chan, resamples) = realize_dims(spec.n_antennas, spec.m_beams, TrialSeed::new(spec.seed, index))?;
    let mut samples = Vec::with_capacity(configs.len() * spec.schemes.len());
    for cfg in configs {
        for &scheme in &spec.schemes {
            let out = evaluate(&chan.gains, cfg, scheme, spec.candidate_strategy);
            samples.push(Sample {
                outage: out.outage,
                rate: out.secondary_rate,
                rate_unconditioned: out.unconditioned_rate,
                primary_min: out.min_primary_rate(),
                legacy_ok: legacy_protected(&chan.gains, cfg, &out),
            });
        }
    }
    Ok(TrialRecord { resamples, samples })
}

/// Mean and standard error of the mean (sample standard deviation with
/// `n - 1`; zero for a single value).
pub fn mean_and_std_err(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Outage fraction and its binomial standard error `sqrt(p (1 - p) / n)`.
pub fn proportion_and_std_err(hits: u64, trials: u64) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Runs the sweep on `workers` threads (0 = rayon default).
pub fn estimate(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    let configs = spec
        .snr_grid_db
        .iter()
        .map(|&db| spec.config_at(db))
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|i| run_one(spec, &configs, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let resamples: u64 = records.iter().map(|r| u64::from(r.resamples)).sum();
    let legacy_violations = records
        .iter()
        .flat_map(|r| r.samples.iter())
        .filter(|s| !s.legacy_ok)
        .count() as u64;

    let n_schemes = spec.schemes.len();
    let mut rows = Vec::new();
    for (si, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        for (ki, &scheme) in spec.schemes.iter().enumerate() {
            let slot = si * n_schemes + ki;
            let column = records.iter().map(move |r| r.samples[slot]);
            for &metric in &spec.metrics {
                let (value, std_err) = match metric {
                    Metric::Outage => {
                        let hits = column.clone().filter(|s| s.outage).count() as u64;
                        proportion_and_std_err(hits, spec.trials)
                    }
                    Metric::ErgodicRate => mean_and_std_err(column.clone().map(|s| s.rate)),
                    Metric::ErgodicRateUnconditioned => {
                        mean_and_std_err(column.clone().map(|s| s.rate_unconditioned))
                    }
                    Metric::PrimaryMinRate => mean_and_std_err(column.clone().map(|s| s.primary_min)),
                };
                rows.push(SweepRow {
                    snr_db,
                    scheme,
                    metric,
                    estimate: MetricEstimate {
                        value,
                        std_err,
                        trials: spec.trials,
                        resamples,
                    },
                });
            }
        }
    }

    Ok(SweepResult {
        spec: spec.clone(),
        rows,
        resamples,
        legacy_violations,
    })
}
