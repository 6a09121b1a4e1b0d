//! Beam aggregation: the secondary signal is sent coherently on a set of
//! beams.
//!
//! Scheme I leaves the primary signals undecoded and uses the closed-form
//! split of [`scheme1_coefficients`]. Scheme II decodes and removes the
//! primaries of the set one after another (strongest secondary gain first)
//! and then optimizes the split jointly:
//!
//! ```text
//! maximize    t = sum_m sqrt(h_m) x_m
//! subject to  eps_p (sum_{j after m} h_j ap_j + t^2 + tau_D) <= h_m ap_m
//!             ap_m >= eta_m,   x_m^2 + ap_m <= 1,   x_m, ap_m >= 0
//! ```
//!
//! For fixed `t` the first constraint set has a componentwise-minimal
//! solution, found by a backward recursion ([`min_primary_power`]). The
//! secondary amplitude left over, `cap(t) = sum_m sqrt(h_m (1 - ap_m(t)))`,
//! is nonincreasing in `t`, so the optimum is the largest `t` with
//! `cap(t) >= t`, found by bisection ([`solve_problem4`]).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::power::{eta, scheme1_coefficients, tau};
use crate::rates::{self, RateReport, SIC_TOLERANCE};
use crate::selection::{mode1_alpha_p, primary_rates};
use crate::{BeamGains, Error, PowerCoefficients, Scheme, SchemeOutcome, SystemConfig};

/// Largest beam count accepted with [`CandidateStrategy::AllSubsets`].
pub const MAX_ALL_SUBSETS_BEAMS: usize = 8;

/// Bisection step cap for [`solve_problem4`].
pub const MAX_BISECTION_STEPS: usize = 200;

/// Which beam sets are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CandidateStrategy {
    /// The `k` strongest beams, `k = 1..M`.
    Prefixes,
    /// Prefixes plus every single beam.
    #[default]
    PrefixesPlusSingletons,
    /// Every nonempty subset.
    AllSubsets,
}

impl CandidateStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            CandidateStrategy::Prefixes => "prefixes",
            CandidateStrategy::PrefixesPlusSingletons => "prefixes+singletons",
            CandidateStrategy::AllSubsets => "all-subsets",
        }
    }
}

impl fmt::Display for CandidateStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CandidateStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefixes" => Ok(CandidateStrategy::Prefixes),
            "prefixes+singletons" | "prefixes_plus_singletons" => Ok(CandidateStrategy::PrefixesPlusSingletons),
            "all-subsets" | "all_subsets" => Ok(CandidateStrategy::AllSubsets),
            other => Err(Error::InvalidConfig(format!(
                "unknown candidate strategy `{other}` (expected prefixes, prefixes+singletons or all-subsets)"
            ))),
        }
    }
}

/// A beam set `D` prepared for Scheme II.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationCandidate {
    /// Beams in SIC order: `h_gain` descending, ties by index.
    pub beams: Vec<usize>,
    /// Interference from mode-I beams outside the set plus `1/rho`.
    pub tau_d: f64,
    /// `eta_m` for each beam of `beams`.
    pub etas: Vec<f64>,
    /// False when some `eta_m > 1`, i.e. a primary in the set cannot be
    /// protected.
    pub feasible: bool,
}

impl AggregationCandidate {
    pub fn new(beams: &[usize], gains: &BeamGains, cfg: &SystemConfig) -> Self {
        let (rho, eps_p) = (cfg.rho(), cfg.eps_p());
        let mut beams = beams.to_vec();
        sort_by_secondary_gain(&mut beams, &gains.h_gain);
        let mode1 = mode1_alpha_p(&gains.g_gain, rho, eps_p);
        let etas: Vec<f64> = beams.iter().map(|&m| eta(gains.g_gain[m], rho, eps_p)).collect();
        let feasible = etas.iter().all(|&e| e <= 1.0);
        Self {
            tau_d: tau(&beams, &gains.h_gain, &mode1, rho),
            beams,
            etas,
            feasible,
        }
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }
}

fn sort_by_secondary_gain(beams: &mut [usize], h_gain: &[f64]) {
    beams.sort_by(|&a, &b| h_gain[b].total_cmp(&h_gain[a]).then(a.cmp(&b)));
}

/// All beams in SIC order.
pub fn decoding_order(h_gain: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..h_gain.len()).collect();
    sort_by_secondary_gain(&mut order, h_gain);
    order
}

/// Lists the candidate sets of `strategy`; infeasible ones are kept but
/// flagged.
pub fn enumerate_candidates(
    gains: &BeamGains,
    cfg: &SystemConfig,
    strategy: CandidateStrategy,
) -> Vec<AggregationCandidate> {
    let order = decoding_order(&gains.h_gain);
    let m = order.len();
    let sets: Vec<Vec<usize>> = match strategy {
        CandidateStrategy::Prefixes => (1..=m).map(|k| order[..k].to_vec()).collect(),
        CandidateStrategy::PrefixesPlusSingletons => (1..=m)
            .map(|k| order[..k].to_vec())
            .chain(order.iter().skip(1).map(|&b| vec![b]))
            .collect(),
        CandidateStrategy::AllSubsets => {
            assert!(m < usize::BITS as usize, "too many beams for subset enumeration");
            (1usize..(1 << m))
                .map(|mask| order.iter().copied().filter(|&b| mask & (1 << b) != 0).collect())
                .collect()
        }
    };
    sets.iter().map(|s| AggregationCandidate::new(s, gains, cfg)).collect()
}

/// Componentwise-minimal primary shares meeting the SIC constraints for a
/// given secondary amplitude `t`, aligned with `candidate.beams`. `None`
/// when some share would exceed 1.
pub fn min_primary_power(candidate: &AggregationCandidate, h_gain: &[f64], t: f64, eps_p: f64) -> Option<Vec<f64>> {
    let mut alpha_p = vec![0.0; candidate.len()];
    let mut later = 0.0;
    for pos in (0..candidate.len()).rev() {
        let h = h_gain[candidate.beams[pos]];
        let needed = if h > 0.0 {
            eps_p * (later + t * t + candidate.tau_d) / h
        } else {
            f64::INFINITY
        };
        let a = needed.max(candidate.etas[pos]);
        if !(a <= 1.0) {
            return None;
        }
        alpha_p[pos] = a;
        later += h * a;
    }
    Some(alpha_p)
}

/// Secondary amplitude still available at `t`; `-inf` when infeasible.
pub fn secondary_capacity(candidate: &AggregationCandidate, h_gain: &[f64], t: f64, eps_p: f64) -> f64 {
    match min_primary_power(candidate, h_gain, t, eps_p) {
        Some(alpha_p) => candidate
            .beams
            .iter()
            .zip(&alpha_p)
            .map(|(&m, a)| (h_gain[m] * (1.0 - a)).sqrt())
            .sum(),
        None => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

/// Power split for one candidate; vectors are aligned with `beams`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem4Solution {
    pub beams: Vec<usize>,
    pub alpha_p: Vec<f64>,
    /// Square roots of the secondary shares.
    pub x: Vec<f64>,
    pub t_star: f64,
    pub objective_rate: f64,
    pub status: SolveStatus,
}

impl Problem4Solution {
    fn infeasible(candidate: &AggregationCandidate) -> Self {
        Self {
            beams: candidate.beams.clone(),
            alpha_p: Vec::new(),
            x: Vec::new(),
            t_star: 0.0,
            objective_rate: 0.0,
            status: SolveStatus::Infeasible,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn alpha_s(&self) -> Vec<f64> {
        self.x.iter().map(|x| x * x).collect()
    }
}

/// Solves the Scheme II power split for `candidate` by bisection on the
/// secondary amplitude, run down to floating-point resolution.
pub fn solve_problem4(candidate: &AggregationCandidate, h_gain: &[f64], eps_p: f64) -> Problem4Solution {
    if !candidate.feasible || candidate.is_empty() {
        return Problem4Solution::infeasible(candidate);
    }
    let cap = |t: f64| secondary_capacity(candidate, h_gain, t, eps_p);
    if cap(0.0) < 0.0 {
        return Problem4Solution::infeasible(candidate);
    }

    let upper: f64 = candidate.beams.iter().map(|&m| h_gain[m].sqrt()).sum();
    let mut lo = 0.0;
    if cap(upper) >= upper {
        lo = upper;
    } else {
        let mut hi = upper;
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cap(mid) >= mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let t_star = lo;
    let alpha_p = min_primary_power(candidate, h_gain, t_star, eps_p).expect("bisection keeps a feasible point");
    let available = cap(t_star);
    // shrink the leftover amplitudes so that sum sqrt(h_m) x_m is exactly t*
    let scale = if available > 0.0 { t_star / available } else { 0.0 };
    let x = alpha_p.iter().map(|a| (1.0 - a).sqrt() * scale).collect();

    Problem4Solution {
        beams: candidate.beams.clone(),
        alpha_p,
        x,
        t_star,
        objective_rate: rates::rate_from_sinr(t_star * t_star / candidate.tau_d),
        status: SolveStatus::Optimal,
    }
}

/// Exhaustive grid search over `x` in `[0, 1]^|D|` with the given spacing.
///
/// A grid point is accepted when the minimal primary shares for its `t`
/// leave room for its `x`. The accepted region is downward closed in every
/// coordinate and the objective increases in every coordinate, so along the
/// last two axes only the frontier is walked; the maximizer is the same as
/// a full scan. Cost grows as `resolution^-(|D|-1)`.
pub fn oracle_grid_solver(
    candidate: &AggregationCandidate,
    h_gain: &[f64],
    eps_p: f64,
    resolution: f64,
) -> Problem4Solution {
    assert!(resolution > 0.0, "grid resolution must be positive");
    if !candidate.feasible || candidate.is_empty() {
        return Problem4Solution::infeasible(candidate);
    }
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let levels: Vec<f64> = (0..=steps).map(|k| (k as f64 * resolution).min(1.0)).collect();
    let roots: Vec<f64> = candidate.beams.iter().map(|&m| h_gain[m].sqrt()).collect();
    let dims = candidate.len();

    let accept = |idx: &[usize]| -> Option<f64> {
        let t: f64 = idx.iter().zip(&roots).map(|(&k, r)| r * levels[k]).sum();
        let alpha_p = min_primary_power(candidate, h_gain, t, eps_p)?;
        idx.iter()
            .zip(&alpha_p)
            .all(|(&k, a)| levels[k] * levels[k] + a <= 1.0)
            .then_some(t)
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |t: f64, idx: &[usize]| {
        if best.as_ref().is_none_or(|(bt, _)| t > *bt) {
            best = Some((t, idx.to_vec()));
        }
    };

    let mut idx = vec![0usize; dims];
    if dims == 1 {
        if let Some(k) = (0..=steps).rev().find(|&k| accept(&[k]).is_some()) {
            idx[0] = k;
            consider(accept(&idx).unwrap(), &idx);
        }
    } else {
        let outer = dims - 2;
        loop {
            // frontier walk over the last two coordinates
            let mut top = Some(steps);
            for a in 0..=steps {
                idx[outer] = a;
                while let Some(b) = top {
                    idx[outer + 1] = b;
                    if accept(&idx).is_some() {
                        break;
                    }
                    top = b.checked_sub(1);
                }
                match top {
                    Some(_) => consider(accept(&idx).unwrap(), &idx),
                    None => break,
                }
            }
            // odometer over the remaining coordinates
            let mut d = outer;
            let advanced = loop {
                if d == 0 {
                    break false;
                }
                d -= 1;
                if idx[d] < steps {
                    idx[d] += 1;
                    break true;
                }
                idx[d] = 0;
            };
            if !advanced {
                break;
            }
        }
    }

    match best {
        Some((t, idx)) => {
            let alpha_p = min_primary_power(candidate, h_gain, t, eps_p).expect("accepted point is feasible");
            Problem4Solution {
                beams: candidate.beams.clone(),
                alpha_p,
                x: idx.iter().map(|&k| levels[k]).collect(),
                t_star: t,
                objective_rate: rates::rate_from_sinr(t * t / candidate.tau_d),
                status: SolveStatus::Optimal,
            }
        }
        None => Problem4Solution::infeasible(candidate),
    }
}

/// Re-checks every Scheme II constraint at a returned point, computing the
/// amplitude directly from `x`. Returns the first violation found.
pub fn certify_solution(
    candidate: &AggregationCandidate,
    h_gain: &[f64],
    eps_p: f64,
    solution: &Problem4Solution,
    tol: f64,
) -> Result<(), String> {
    if solution.status != SolveStatus::Optimal {
        return Ok(());
    }
    let k = candidate.len();
    if solution.alpha_p.len() != k || solution.x.len() != k || solution.beams != candidate.beams {
        return Err("solution does not match the candidate set".into());
    }
    let t: f64 = candidate
        .beams
        .iter()
        .zip(&solution.x)
        .map(|(&m, x)| h_gain[m].sqrt() * x)
        .sum();
    for pos in 0..k {
        let m = candidate.beams[pos];
        let (ap, x) = (solution.alpha_p[pos], solution.x[pos]);
        let later: f64 = (pos + 1..k)
            .map(|j| h_gain[candidate.beams[j]] * solution.alpha_p[j])
            .sum();
        let sic = eps_p * later + eps_p * t * t - h_gain[m] * ap + eps_p * candidate.tau_d;
        if sic > tol {
            return Err(format!("SIC constraint of beam {m} violated by {sic:e}"));
        }
        if ap < candidate.etas[pos] - tol {
            return Err(format!("beam {m}: primary share {ap} below eta {}", candidate.etas[pos]));
        }
        if x * x + ap > 1.0 + tol {
            return Err(format!("beam {m}: power budget exceeded ({})", x * x + ap));
        }
        if x < -tol || ap < -tol {
            return Err(format!("beam {m}: negative variable"));
        }
    }
    Ok(())
}

/// Orders by rate (higher first), then set size, then beam indices.
fn better(rate_a: f64, set_a: &[usize], rate_b: f64, set_b: &[usize]) -> bool {
    let mut a = set_a.to_vec();
    let mut b = set_b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    match rate_a.total_cmp(&rate_b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.len(), a) < (b.len(), b),
    }
}

/// Scheme I on a fixed set.
pub fn evaluate_scheme1(gains: &BeamGains, cfg: &SystemConfig, active_set: &[usize]) -> SchemeOutcome {
    let rho = cfg.rho();
    let coeffs = scheme1_coefficients(cfg, &gains.g_gain, active_set);
    let sinr = rates::sinr_scheme1_secondary(active_set, &gains.h_gain, &coeffs, rho);
    let rate = rates::rate_from_sinr(sinr);
    SchemeOutcome {
        scheme: Scheme::Scheme1,
        chosen_set: active_set.to_vec(),
        secondary_rate: rate,
        unconditioned_rate: rate,
        outage: !(sinr > 0.0) || sinr < cfg.eps_s(),
        rates: RateReport {
            r_tilde: Vec::new(),
            r_secondary: rate,
            r_primary: primary_rates(gains, &coeffs, rho),
            sic_ok: Vec::new(),
        },
        coefficients: coeffs,
    }
}

/// Scheme I on the best set of `strategy`.
pub fn evaluate_scheme1_best(gains: &BeamGains, cfg: &SystemConfig, strategy: CandidateStrategy) -> SchemeOutcome {
    let mut best: Option<SchemeOutcome> = None;
    for cand in enumerate_candidates(gains, cfg, strategy) {
        let out = evaluate_scheme1(gains, cfg, &cand.beams);
        let replace = match &best {
            None => true,
            Some(b) => better(out.secondary_rate, &out.chosen_set, b.secondary_rate, &b.chosen_set),
        };
        if replace {
            best = Some(out);
        }
    }
    best.expect("at least one beam")
}

/// Scheme II: solves every feasible candidate and keeps the best.
pub fn evaluate_scheme2(gains: &BeamGains, cfg: &SystemConfig, strategy: CandidateStrategy) -> SchemeOutcome {
    let (rho, eps_p) = (cfg.rho(), cfg.eps_p());
    let h = &gains.h_gain;

    let mut best: Option<Problem4Solution> = None;
    for cand in enumerate_candidates(gains, cfg, strategy) {
        if !cand.feasible {
            continue;
        }
        let sol = solve_problem4(&cand, h, eps_p);
        if !sol.is_optimal() || !(sol.objective_rate > 0.0) {
            continue;
        }
        let replace = match &best {
            None => true,
            Some(b) => better(sol.objective_rate, &sol.beams, b.objective_rate, &b.beams),
        };
        if replace {
            best = Some(sol);
        }
    }

    let mut coeffs = PowerCoefficients::inactive(&gains.g_gain, rho, eps_p);
    let Some(sol) = best else {
        return SchemeOutcome {
            scheme: Scheme::Scheme2,
            chosen_set: Vec::new(),
            secondary_rate: 0.0,
            unconditioned_rate: 0.0,
            outage: true,
            rates: RateReport {
                r_tilde: Vec::new(),
                r_secondary: 0.0,
                r_primary: primary_rates(gains, &coeffs, rho),
                sic_ok: Vec::new(),
            },
            coefficients: coeffs,
        };
    };

    for (pos, &m) in sol.beams.iter().enumerate() {
        coeffs.alpha_p[m] = sol.alpha_p[pos];
        coeffs.alpha_s[m] = sol.x[pos] * sol.x[pos];
    }
    coeffs.active_set = sol.beams.clone();

    let r_tilde: Vec<f64> = sol
        .beams
        .iter()
        .map(|&m| rates::rate_agg_decode_primary(m, &sol.beams, h, &coeffs, rho))
        .collect();
    let sic_ok: Vec<bool> = r_tilde.iter().map(|&r| r >= cfg.r_p() - SIC_TOLERANCE).collect();
    let all_ok = sic_ok.iter().all(|&ok| ok);
    let sinr = rates::sinr_agg_secondary(&sol.beams, h, &coeffs, rho);
    let rate = rates::rate_from_sinr(sinr);

    SchemeOutcome {
        scheme: Scheme::Scheme2,
        chosen_set: sol.beams.clone(),
        secondary_rate: if all_ok { rate } else { 0.0 },
        unconditioned_rate: rate,
        outage: !all_ok || sinr < cfg.eps_s(),
        rates: RateReport {
            r_tilde,
            r_secondary: rate,
            r_primary: primary_rates(gains, &coeffs, rho),
            sic_ok,
        },
        coefficients: coeffs,
    }
}
