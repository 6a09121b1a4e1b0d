//! Link-level simulation of a legacy zero-forcing SDMA downlink whose
//! preconfigured beams are reused, via NOMA, to serve one extra secondary
//! user without degrading the legacy primary users.
//!
//! Three ways of using the beams are implemented:
//!
//! * beam selection ([`selection`]): the secondary user rides on the single
//!   best beam and decodes the primary signal on it first (SIC);
//! * aggregation Scheme I ([`aggregation::evaluate_scheme1`]): coherent
//!   transmission over a set of beams, primary signals treated as noise;
//! * aggregation Scheme II ([`aggregation::evaluate_scheme2`]): coherent
//!   transmission with a SIC chain through the primaries of the set and a
//!   jointly optimized power split.
//!
//! [`montecarlo`] turns these per-realization evaluations into outage and
//! ergodic-rate estimates over SNR grids, [`experiment`] handles config files,
//! presets and CSV output, and [`validate`] bundles the self-checks used by
//! the command line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod analysis;
pub mod channel;
mod error;
pub mod experiment;
pub mod montecarlo;
pub mod power;
pub mod rates;
pub mod selection;
pub mod validate;

pub use aggregation::{
    AggregationCandidate, CandidateStrategy, Problem4Solution, SolveStatus,
};
pub use channel::{BeamGains, ChannelRealization, SystemConfig, TrialSeed};
pub use error::{Error, Result};
pub use montecarlo::{Metric, MetricEstimate, SweepResult, SweepSpec};
pub use power::PowerCoefficients;
pub use rates::RateReport;
pub use selection::{Scheme, SchemeOutcome};

/// Converts an SNR in dB to its linear value.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
