//! Achievable rates in bits per channel use. Every rate is formed as
//! `log2(1 + SINR)` from an explicit SINR.

use crate::PowerCoefficients;

/// Rates of one scheme on one realization.
///
/// `r_tilde` and `sic_ok` are aligned with the beams the secondary user runs
/// SIC through (the chosen set for selection and Scheme II, empty for
/// Scheme I). `r_primary` has one entry per beam.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateReport {
    pub r_tilde: Vec<f64>,
    pub r_secondary: f64,
    pub r_primary: Vec<f64>,
    pub sic_ok: Vec<bool>,
}

/// Slack allowed when checking a decoding rate against its target.
pub const SIC_TOLERANCE: f64 = 1e-12;

pub fn rate_from_sinr(sinr: f64) -> f64 {
    sinr.max(0.0).ln_1p() / std::f64::consts::LN_2
}

fn coherent_amplitude(active_set: &[usize], h_gain: &[f64], alpha_s: &[f64]) -> f64 {
    active_set.iter().map(|&i| (h_gain[i] * alpha_s[i]).sqrt()).sum()
}

/// Rate at which the secondary user decodes the primary signal of beam `m`
/// (independent encoding on each beam).
pub fn rate_sel_decode_primary(m: usize, h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    let others: f64 = (0..h_gain.len())
        .filter(|&i| i != m)
        .map(|i| h_gain[i] * (coeffs.alpha_p[i] + coeffs.alpha_s[i]))
        .sum();
    let sinr = h_gain[m] * coeffs.alpha_p[m] / (h_gain[m] * coeffs.alpha_s[m] + others + 1.0 / rho);
    rate_from_sinr(sinr)
}

/// Secondary-user SINR on beam `m` after removing that beam's primary signal.
pub fn sinr_sel_secondary(m: usize, h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    let others: f64 = (0..h_gain.len())
        .filter(|&i| i != m)
        .map(|i| h_gain[i] * (coeffs.alpha_p[i] + coeffs.alpha_s[i]))
        .sum();
    h_gain[m] * coeffs.alpha_s[m] / (others + 1.0 / rho)
}

pub fn rate_sel_secondary(m: usize, h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    rate_from_sinr(sinr_sel_secondary(m, h_gain, coeffs, rho))
}

/// Scheme I: the secondary signal is combined coherently over `active_set`
/// and every primary signal is noise.
pub fn rate_scheme1_secondary(active_set: &[usize], h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    rate_from_sinr(sinr_scheme1_secondary(active_set, h_gain, coeffs, rho))
}

pub fn sinr_scheme1_secondary(active_set: &[usize], h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    let amp = coherent_amplitude(active_set, h_gain, &coeffs.alpha_s);
    let noise: f64 = h_gain.iter().zip(&coeffs.alpha_p).map(|(h, a)| h * a).sum::<f64>() + 1.0 / rho;
    amp * amp / noise
}

/// Primary user `m`'s rate. Beams carrying secondary power see it as
/// interference (`|beta_m|^2 = 1`).
pub fn rate_primary(m: usize, g_m: f64, coeffs: &PowerCoefficients, rho: f64, in_active_set: bool) -> f64 {
    let ap = coeffs.alpha_p[m];
    let sinr = if in_active_set {
        g_m * ap / (g_m * coeffs.alpha_s[m] + 1.0 / rho)
    } else {
        g_m * ap * rho
    };
    rate_from_sinr(sinr)
}

/// Scheme II: rate at which the secondary user decodes primary `m`, part of
/// the SIC chain through `active_set` (in decoding order). Primaries decoded
/// later in the chain and every primary outside the set are interference,
/// as is the whole coherent secondary signal.
pub fn rate_agg_decode_primary(
    m: usize,
    active_set: &[usize],
    h_gain: &[f64],
    coeffs: &PowerCoefficients,
    rho: f64,
) -> f64 {
    let pos = active_set
        .iter()
        .position(|&i| i == m)
        .expect("beam is not part of the aggregation set");
    let later: f64 = active_set[pos + 1..].iter().map(|&j| h_gain[j] * coeffs.alpha_p[j]).sum();
    let outside: f64 = (0..h_gain.len())
        .filter(|j| !active_set.contains(j))
        .map(|j| h_gain[j] * coeffs.alpha_p[j])
        .sum();
    let amp = coherent_amplitude(active_set, h_gain, &coeffs.alpha_s);
    let sinr = h_gain[m] * coeffs.alpha_p[m] / (later + outside + amp * amp + 1.0 / rho);
    rate_from_sinr(sinr)
}

/// Scheme II secondary rate once every primary in `active_set` is removed.
pub fn rate_agg_secondary(active_set: &[usize], h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    rate_from_sinr(sinr_agg_secondary(active_set, h_gain, coeffs, rho))
}

pub fn sinr_agg_secondary(active_set: &[usize], h_gain: &[f64], coeffs: &PowerCoefficients, rho: f64) -> f64 {
    let amp = coherent_amplitude(active_set, h_gain, &coeffs.alpha_s);
    amp * amp / crate::power::tau(active_set, h_gain, &coeffs.alpha_p, rho)
}
