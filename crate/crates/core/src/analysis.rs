//! Closed-form outage quantities and the statistics used to check the
//! simulator against them.
//!
//! With i.i.d. CN(0, 1) channels, `1 / [(G^H G)^{-1}]_ii` is Gamma(N - M + 1, 1)
//! distributed, so the normalized zero-forcing gain satisfies
//! `M g_m ~ Gamma(N - M + 1, 1)`.

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(s)` for `s > 0` (Lanczos, g = 7).
pub fn ln_gamma(s: f64) -> f64 {
    if s < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * s).sin()).ln() - ln_gamma(1.0 - s);
    }
    let s = s - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (s + i as f64);
    }
    let t = s + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (s + 0.5) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 500;
const REL_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(s, x) = gamma(s, x) / Gamma(s)`.
///
/// Power series below `x = s + 1`, Lentz continued fraction for the upper
/// tail above it.
pub fn gamma_lower_regularized(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("shape must be positive, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("argument must be non-negative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + s * x.ln() - ln_gamma(s);

    let p = if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        for n in 1..MAX_ITER {
            term *= x / (s + n as f64);
            sum += term;
            if term.abs() < sum.abs() * REL_EPS {
                break;
            }
        }
        sum * log_prefactor.exp()
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < REL_EPS {
                break;
            }
        }
        1.0 - log_prefactor.exp() * h
    };
    Ok(p.clamp(0.0, 1.0))
}

fn check_dims(n_antennas: usize, m_beams: usize) -> Result<u32> {
    if m_beams == 0 || n_antennas < m_beams {
        return Err(Error::Domain(format!(
            "need N >= M >= 1, got N = {n_antennas}, M = {m_beams}"
        )));
    }
    Ok((n_antennas - m_beams + 1) as u32)
}

/// Law of `M g_m`: Gamma with integer shape `N - M + 1` and unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GainLaw {
    pub shape: u32,
}

impl GainLaw {
    pub fn new(n_antennas: usize, m_beams: usize) -> Result<Self> {
        Ok(Self {
            shape: check_dims(n_antennas, m_beams)?,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_lower_regularized(self.shape as f64, x).expect("shape is positive")
    }
}

/// `P(M g_m <= x)`.
pub fn gain_cdf(x: f64, n_antennas: usize, m_beams: usize) -> Result<f64> {
    Ok(GainLaw::new(n_antennas, m_beams)?.cdf(x))
}

/// Probability that a primary user cannot reach its target even at full
/// power, `P(g_m <= eps_p / rho)`.
pub fn q1_exact(n_antennas: usize, m_beams: usize, eps_p: f64, rho: f64) -> Result<f64> {
    let shape = check_dims(n_antennas, m_beams)?;
    gamma_lower_regularized(shape as f64, m_beams as f64 * eps_p / rho)
}

/// Leading term of [`q1_exact`] at high SNR: `(M eps_p / rho)^k / k!` with
/// `k = N - M + 1`.
pub fn q1_high_snr(n_antennas: usize, m_beams: usize, eps_p: f64, rho: f64) -> Result<f64> {
    let shape = check_dims(n_antennas, m_beams)?;
    let arg = m_beams as f64 * eps_p / rho;
    let factorial: f64 = (1..=shape).map(f64::from).product();
    Ok(arg.powi(shape as i32) / factorial)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic KS critical value at significance `alpha`:
/// `sqrt(-ln(alpha / 2) / 2) / sqrt(n)` (1.628/sqrt(n) at 1%).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
