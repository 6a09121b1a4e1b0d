//! Beam selection: the secondary user is served on one beam only.

use std::fmt;
use std::str::FromStr;

use crate::power::{alpha_p_inactive, alpha_s_selection};
use crate::rates::{self, RateReport, SIC_TOLERANCE};
use crate::{BeamGains, Error, PowerCoefficients, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Selection,
    Scheme1,
    Scheme2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Selection, Scheme::Scheme1, Scheme::Scheme2];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Selection => "selection",
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "selection" => Ok(Scheme::Selection),
            "scheme1" => Ok(Scheme::Scheme1),
            "scheme2" => Ok(Scheme::Scheme2),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheme `{other}` (expected selection, scheme1 or scheme2)"
            ))),
        }
    }
}

/// Result of evaluating one scheme on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    /// Beams carrying the secondary signal, in decoding order.
    pub chosen_set: Vec<usize>,
    /// Rate credited to the secondary user: zero when SIC fails.
    pub secondary_rate: f64,
    /// Secondary rate without the SIC condition.
    pub unconditioned_rate: f64,
    pub outage: bool,
    pub coefficients: PowerCoefficients,
    pub rates: RateReport,
}

impl SchemeOutcome {
    pub fn sic_ok(&self) -> &[bool] {
        &self.rates.sic_ok
    }

    pub fn primary_rates(&self) -> &[f64] {
        &self.rates.r_primary
    }

    pub fn min_primary_rate(&self) -> f64 {
        self.rates.r_primary.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn primary_rates(gains: &BeamGains, coeffs: &PowerCoefficients, rho: f64) -> Vec<f64> {
    (0..gains.len())
        .map(|m| rates::rate_primary(m, gains.g_gain[m], coeffs, rho, coeffs.is_active(m)))
        .collect()
}

/// Evaluates beam selection.
///
/// Every beam gets its selection-mode secondary share and SINR; the beam
/// with the largest SINR (lowest index on ties) is used. The secondary rate
/// only counts when the beam's primary signal is decodable first.
pub fn evaluate_selection(gains: &BeamGains, cfg: &SystemConfig) -> SchemeOutcome {
    let (rho, eps_p) = (cfg.rho(), cfg.eps_p());
    let h = &gains.h_gain;
    let mut coeffs = PowerCoefficients::inactive(&gains.g_gain, rho, eps_p);

    let mut best = (0, f64::NEG_INFINITY, 0.0);
    for m in 0..gains.len() {
        let alpha_s = alpha_s_selection(m, h, gains.g_gain[m], &coeffs.alpha_p, rho, eps_p);
        let interference: f64 = (0..gains.len())
            .filter(|&i| i != m)
            .map(|i| h[i] * coeffs.alpha_p[i])
            .sum();
        let gamma = h[m] * alpha_s / (interference + 1.0 / rho);
        if gamma > best.1 {
            best = (m, gamma, alpha_s);
        }
    }
    let (m_star, _, alpha_s) = best;

    if alpha_s > 0.0 {
        coeffs.alpha_s[m_star] = alpha_s;
        coeffs.alpha_p[m_star] = 1.0 - alpha_s;
        coeffs.active_set = vec![m_star];
    }

    let r_tilde = rates::rate_sel_decode_primary(m_star, h, &coeffs, rho);
    let sinr = rates::sinr_sel_secondary(m_star, h, &coeffs, rho);
    let r_secondary = rates::rate_from_sinr(sinr);
    let sic_ok = r_tilde >= cfg.r_p() - SIC_TOLERANCE;
    let outage = alpha_s <= 0.0 || !sic_ok || sinr < cfg.eps_s();

    SchemeOutcome {
        scheme: Scheme::Selection,
        chosen_set: vec![m_star],
        secondary_rate: if sic_ok { r_secondary } else { 0.0 },
        unconditioned_rate: r_secondary,
        outage,
        rates: RateReport {
            r_tilde: vec![r_tilde],
            r_secondary,
            r_primary: primary_rates(gains, &coeffs, rho),
            sic_ok: vec![sic_ok],
        },
        coefficients: coeffs,
    }
}

/// Mode-I primary power for every beam; used by the other schemes too.
pub fn mode1_alpha_p(g_gain: &[f64], rho: f64, eps_p: f64) -> Vec<f64> {
    g_gain.iter().map(|&g| alpha_p_inactive(g, rho, eps_p)).collect()
}
