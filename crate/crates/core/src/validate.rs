//! Self-checks behind `noma-beams validate`.
//!
//! Every check draws from its own seeded streams, so a report depends only
//! on the suite and the seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{
    certify_solution, decoding_order, evaluate_scheme2, oracle_grid_solver, solve_problem4, AggregationCandidate,
    CandidateStrategy,
};
use crate::analysis::{gain_cdf, ks_critical_value, ks_statistic, q1_exact};
use crate::channel::realize_dims;
use crate::montecarlo::{estimate, evaluate, legacy_protected, proportion_and_std_err, Metric, SweepSpec};
use crate::power::alpha_s_selection;
use crate::selection::{evaluate_selection, mode1_alpha_p};
use crate::{db_to_linear, BeamGains, Error, Result, Scheme, SystemConfig, TrialSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Zf,
    Distribution,
    Solver,
    Dominance,
    Lemma1,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["zf", "distribution", "solver", "dominance", "lemma1", "all"];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Zf => "zf",
            Suite::Distribution => "distribution",
            Suite::Solver => "solver",
            Suite::Dominance => "dominance",
            Suite::Lemma1 => "lemma1",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zf" => Ok(Suite::Zf),
            "distribution" => Ok(Suite::Distribution),
            "solver" => Ok(Suite::Solver),
            "dominance" => Ok(Suite::Dominance),
            "lemma1" => Ok(Suite::Lemma1),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite `{other}` (expected one of {})",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    /// The invariant being checked.
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            suite,
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "{:<13} {:<46} {:<6} detail", "suite", "check", "result")?;
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{:<13} {:<46} {:<6} {}", c.suite, c.name, verdict, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Runs `suite` (every suite for [`Suite::All`]).
pub fn run(suite: Suite, seed: u64) -> Result<Report> {
    let mut checks = Vec::new();
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Zf, Suite::Distribution, Suite::Solver, Suite::Dominance, Suite::Lemma1],
        _ => std::slice::from_ref(&suite),
    };
    for &s in suites {
        // separate experiment seeds per suite
        let sub = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(s as u64);
        match s {
            Suite::Zf => zf_suite(sub, &mut checks)?,
            Suite::Distribution => distribution_suite(sub, &mut checks)?,
            Suite::Solver => solver_suite(sub, &mut checks)?,
            Suite::Dominance => dominance_suite(sub, &mut checks)?,
            Suite::Lemma1 => lemma1_suite(sub, &mut checks)?,
            Suite::All => unreachable!(),
        }
    }
    Ok(Report { seed, checks })
}

/// Largest off-diagonal `|g_m^H f_i|` and largest `|sum ||f_m||^2 - 1|`
/// over `draws` realizations.
pub fn zf_errors(n: usize, m: usize, draws: u64, seed: u64) -> Result<(f64, f64)> {
    let mut cross = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..draws {
        let (chan, _) = realize_dims(n, m, TrialSeed::new(seed, i))?;
        let gf = chan.g.adjoint() * &chan.f;
        for r in 0..m {
            for c in 0..m {
                if r != c {
                    cross = cross.max(gf[(r, c)].norm());
                }
            }
        }
        norm = norm.max((chan.f.norm_squared() - 1.0).abs());
    }
    Ok((cross, norm))
}

fn zf_suite(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    for (k, &(n, m)) in [(2, 2), (3, 3), (4, 4), (4, 2)].iter().enumerate() {
        let (cross, norm) = zf_errors(n, m, 1000, seed.wrapping_add(k as u64))?;
        out.push(Check::new(
            "zf",
            format!("zero cross gain, N={n} M={m}"),
            cross < 1e-9,
            format!("max |g_m^H f_i| = {cross:.3e} over 1000 draws"),
        ));
        out.push(Check::new(
            "zf",
            format!("unit total power, N={n} M={m}"),
            norm < 1e-9,
            format!("max |sum ||f_m||^2 - 1| = {norm:.3e}"),
        ));
    }
    Ok(())
}

/// `M g_1` samples for the gain-law test.
pub fn normalized_gain_samples(n: usize, m: usize, count: u64, seed: u64) -> Result<Vec<f64>> {
    (0..count)
        .map(|i| realize_dims(n, m, TrialSeed::new(seed, i)).map(|(c, _)| m as f64 * c.gains.g_gain[0]))
        .collect()
}

fn distribution_suite(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let samples = 10_000;
    for (k, &(n, m)) in [(2, 2), (4, 4), (4, 2)].iter().enumerate() {
        let xs = normalized_gain_samples(n, m, samples, seed.wrapping_add(k as u64))?;
        let d = ks_statistic(&xs, |x| gain_cdf(x, n, m).expect("valid dims"))?;
        let crit = ks_critical_value(xs.len(), 0.01);
        out.push(Check::new(
            "distribution",
            format!("M g_1 ~ Gamma(N-M+1, 1), N={n} M={m}"),
            d < crit,
            format!("KS D = {d:.5}, 1% critical {crit:.5}, {samples} samples"),
        ));
    }

    let trials = 20_000u64;
    for (k, &db) in [0.0, 10.0, 20.0].iter().enumerate() {
        let rho = db_to_linear(db);
        let seed = seed.wrapping_add(100 + k as u64);
        let mut hits = 0u64;
        for i in 0..trials {
            let (c, _) = realize_dims(2, 2, TrialSeed::new(seed, i))?;
            if c.gains.g_gain[0] <= 1.0 / rho {
                hits += 1;
            }
        }
        let (p, _) = proportion_and_std_err(hits, trials);
        let exact = q1_exact(2, 2, 1.0, rho)?;
        let tol = 3.0 * (exact * (1.0 - exact) / trials as f64).sqrt();
        out.push(Check::new(
            "distribution",
            format!("primary outage matches closed form, {db} dB"),
            (p - exact).abs() <= tol,
            format!("simulated {p:.5}, exact {exact:.5}, 3 SE = {tol:.5}"),
        ));
    }
    Ok(())
}

/// A random instance for solver checks: an N = M = `beams` channel at an
/// SNR drawn uniformly from 0..40 dB.
pub fn random_instance(beams: usize, seed: u64, index: u64) -> Result<(BeamGains, SystemConfig)> {
    let (chan, _) = realize_dims(beams, beams, TrialSeed::new(seed, index))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    rng.set_stream(index);
    let snr_db = rng.random_range(0.0..40.0);
    let r_p = rng.random_range(0.05..2.0);
    let cfg = SystemConfig::new(beams, beams, db_to_linear(snr_db), r_p, 1.0)?;
    Ok((chan.gains, cfg))
}

/// Worst gap between the Scheme II share on a single beam and the
/// closed-form selection share, over every beam of `draws` instances.
pub fn singleton_reduction_gap(draws: u64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..draws {
        let (gains, cfg) = random_instance(4, seed, i)?;
        let mode1 = mode1_alpha_p(&gains.g_gain, cfg.rho(), cfg.eps_p());
        for m in 0..gains.len() {
            let closed = alpha_s_selection(m, &gains.h_gain, gains.g_gain[m], &mode1, cfg.rho(), cfg.eps_p());
            let cand = AggregationCandidate::new(&[m], &gains, &cfg);
            let sol = solve_problem4(&cand, &gains.h_gain, cfg.eps_p());
            let solved = if sol.is_optimal() { sol.alpha_s()[0] } else { 0.0 };
            worst = worst.max((solved - closed).abs());
        }
    }
    Ok(worst)
}

/// Outcome of comparing the bisection solver with the grid oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAgreement {
    pub instances: u64,
    /// Largest `|t_solver - t_grid| / sum sqrt(h)`.
    pub worst_relative_gap: f64,
    /// Instances where the grid beat the solver by more than 1e-9.
    pub grid_wins: u64,
    /// Certification failures at 1e-8 among solver and grid solutions.
    pub certify_failures: u64,
}

/// Compares the solver with the grid oracle on random feasible candidates
/// of size 2 or 3 (alternating).
pub fn oracle_agreement(instances: u64, resolution: f64, seed: u64) -> Result<OracleAgreement> {
    let mut res = OracleAgreement {
        instances: 0,
        worst_relative_gap: 0.0,
        grid_wins: 0,
        certify_failures: 0,
    };
    let mut index = 0u64;
    while res.instances < instances {
        let size = 2 + (res.instances % 2) as usize;
        let (gains, cfg) = random_instance(4, seed, index)?;
        index += 1;
        let order = decoding_order(&gains.h_gain);
        let cand = AggregationCandidate::new(&order[..size], &gains, &cfg);
        let h = &gains.h_gain;
        let exact = solve_problem4(&cand, h, cfg.eps_p());
        if !exact.is_optimal() {
            continue;
        }
        let grid = oracle_grid_solver(&cand, h, cfg.eps_p(), resolution);
        let scale: f64 = cand.beams.iter().map(|&m| h[m].sqrt()).sum();
        res.worst_relative_gap = res.worst_relative_gap.max((exact.t_star - grid.t_star).abs() / scale);
        if grid.t_star > exact.t_star + 1e-9 {
            res.grid_wins += 1;
        }
        for sol in [&exact, &grid] {
            if certify_solution(&cand, h, cfg.eps_p(), sol, 1e-8).is_err() {
                res.certify_failures += 1;
            }
        }
        res.instances += 1;
    }
    Ok(res)
}

/// Solutions of every candidate of `draws` instances that fail
/// certification at `tol`, out of the number checked.
pub fn certification_failures(draws: u64, seed: u64, tol: f64) -> Result<(u64, u64)> {
    let (mut failed, mut checked) = (0, 0);
    for i in 0..draws {
        let (gains, cfg) = random_instance(4, seed, i)?;
        for cand in crate::aggregation::enumerate_candidates(&gains, &cfg, CandidateStrategy::AllSubsets) {
            let sol = solve_problem4(&cand, &gains.h_gain, cfg.eps_p());
            if sol.is_optimal() {
                checked += 1;
                if certify_solution(&cand, &gains.h_gain, cfg.eps_p(), &sol, tol).is_err() {
                    failed += 1;
                }
            }
        }
    }
    Ok((failed, checked))
}

fn solver_suite(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let gap = singleton_reduction_gap(2000, seed)?;
    out.push(Check::new(
        "solver",
        "single-beam solve equals selection share",
        gap <= 1e-9,
        format!("max gap {gap:.3e} over 2000 draws x 4 beams"),
    ));

    let gains = BeamGains::new(vec![1.0, 1.0], vec![2.0, 1.0]);
    let cfg = SystemConfig::new(2, 2, 10.0, 1.0, 1.0)?;
    let cand = AggregationCandidate::new(&[0, 1], &gains, &cfg);
    let sol = solve_problem4(&cand, &gains.h_gain, cfg.eps_p());
    let t2 = sol.t_star * sol.t_star;
    out.push(Check::new(
        "solver",
        "two-beam reference instance",
        (t2 - 0.76820).abs() <= 1e-4 && (sol.objective_rate - 3.118).abs() <= 1e-3,
        format!("t*^2 = {t2:.5}, rate = {:.4}", sol.objective_rate),
    ));

    let agree = oracle_agreement(40, 2e-3, seed.wrapping_add(1))?;
    out.push(Check::new(
        "solver",
        "bisection agrees with grid oracle",
        agree.worst_relative_gap <= 2e-3 && agree.grid_wins == 0,
        format!(
            "{} instances, worst gap {:.3e} sum sqrt(h), grid better {} times",
            agree.instances, agree.worst_relative_gap, agree.grid_wins
        ),
    ));

    let (failed, checked) = certification_failures(500, seed.wrapping_add(2), 1e-8)?;
    out.push(Check::new(
        "solver",
        "solutions pass constraint certification",
        failed == 0 && agree.certify_failures == 0,
        format!("{failed} of {checked} failed at 1e-8"),
    ));
    Ok(())
}

fn dominance_suite(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let draws = 2000u64;
    let strategy = CandidateStrategy::PrefixesPlusSingletons;
    for &db in &[10.0, 20.0, 30.0] {
        let cfg = SystemConfig::new(4, 4, db_to_linear(db), 0.1, 1.0)?;
        let mut worst = f64::INFINITY;
        for i in 0..draws {
            let (chan, _) = realize_dims(4, 4, TrialSeed::new(seed, i))?;
            let sel = evaluate_selection(&chan.gains, &cfg);
            let s2 = evaluate_scheme2(&chan.gains, &cfg, strategy);
            worst = worst.min(s2.secondary_rate - sel.secondary_rate);
        }
        out.push(Check::new(
            "dominance",
            format!("scheme2 rate >= selection rate, {db} dB"),
            worst >= -1e-9,
            format!("min difference {worst:.3e} over {draws} draws"),
        ));
    }

    let mut violations = 0u64;
    for &db in &[0.0, 20.0, 40.0] {
        let cfg = SystemConfig::new(4, 4, db_to_linear(db), 0.1, 1.0)?;
        for i in 0..draws {
            let (chan, _) = realize_dims(4, 4, TrialSeed::new(seed.wrapping_add(1), i))?;
            for scheme in Scheme::ALL {
                let o = evaluate(&chan.gains, &cfg, scheme, strategy);
                if !legacy_protected(&chan.gains, &cfg, &o) {
                    violations += 1;
                }
            }
        }
    }
    out.push(Check::new(
        "dominance",
        "primary users keep their target rate",
        violations == 0,
        format!("{violations} violations over 3 SNRs x {draws} draws x 3 schemes"),
    ));
    Ok(())
}

fn lemma1_suite(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let spec = SweepSpec {
        n_antennas: 2,
        m_beams: 2,
        r_p: 0.1,
        r_s: 1.0,
        snr_grid_db: vec![10.0, 20.0, 30.0, 40.0],
        schemes: vec![Scheme::Selection],
        metrics: vec![Metric::Outage],
        trials: 20_000,
        seed,
        candidate_strategy: CandidateStrategy::default(),
    };
    let res = estimate(&spec, 0)?;
    let pts: Vec<(f64, f64, f64)> = res
        .rows
        .iter()
        .map(|r| (r.snr_db, r.estimate.value, r.estimate.std_err))
        .collect();
    for w in pts.windows(2) {
        let ((a_db, a, a_se), (b_db, b, b_se)) = (w[0], w[1]);
        let z = (a - b) / (a_se * a_se + b_se * b_se).sqrt();
        out.push(Check::new(
            "lemma1",
            format!("outage decreases {a_db} -> {b_db} dB"),
            z > 1.96,
            format!("{a:.5} -> {b:.5}, z = {z:.2}"),
        ));
    }
    let (o20, o40) = (pts[1].1, pts[3].1);
    out.push(Check::new(
        "lemma1",
        "outage at 40 dB below half of 20 dB",
        o40 < 0.5 * o20,
        format!("{o40:.5} vs {o20:.5}"),
    ));
    Ok(())
}
