//! Closed-form power-allocation coefficients.
//!
//! A beam on which the secondary user is silent ("mode I") gives its primary
//! user just enough power to meet the target. A beam carrying secondary
//! power ("mode II") splits the budget so the primary still meets its target
//! under the superimposed secondary signal.

use crate::SystemConfig;

/// Per-beam power split. `active_set` lists the beams carrying secondary
/// power; every other beam has `alpha_s == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCoefficients {
    pub alpha_p: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub active_set: Vec<usize>,
}

impl PowerCoefficients {
    /// Mode-I coefficients on every beam.
    pub fn inactive(g_gain: &[f64], rho: f64, eps_p: f64) -> Self {
        Self {
            alpha_p: g_gain.iter().map(|&g| alpha_p_inactive(g, rho, eps_p)).collect(),
            alpha_s: vec![0.0; g_gain.len()],
            active_set: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.alpha_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_p.is_empty()
    }

    pub fn is_active(&self, m: usize) -> bool {
        self.active_set.contains(&m)
    }
}

/// `min{1, eps_p / (rho g_m)}`: the primary power that exactly meets the
/// target when no secondary signal shares the beam.
pub fn alpha_p_inactive(g_m: f64, rho: f64, eps_p: f64) -> f64 {
    (eps_p / (rho * g_m)).min(1.0)
}

/// Largest secondary share on beam `m` for beam selection.
///
/// Smaller of two caps: the one keeping the primary user at its target and
/// the one letting the secondary user decode the primary signal first, with
/// every other beam in mode I (`alpha_p_others[i]`, entry `m` ignored).
pub fn alpha_s_selection(
    m: usize,
    h_gain: &[f64],
    g_m: f64,
    alpha_p_others: &[f64],
    rho: f64,
    eps_p: f64,
) -> f64 {
    let h_m = h_gain[m];
    if h_m <= 0.0 || g_m <= 0.0 {
        return 0.0;
    }
    let qos_cap = ((g_m - eps_p / rho) / ((eps_p + 1.0) * g_m)).max(0.0);
    let interference: f64 = h_gain
        .iter()
        .zip(alpha_p_others)
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, (h, a))| h * a)
        .sum();
    let sic_cap = ((h_m - eps_p * interference - eps_p / rho) / ((1.0 + eps_p) * h_m)).max(0.0);
    qos_cap.min(sic_cap)
}

/// Minimum primary share on a beam carrying secondary power:
/// `eps_p (g_m + 1/rho) / (g_m (1 + eps_p))`. Exceeds 1 iff `g_m < eps_p / rho`.
pub fn eta(g_m: f64, rho: f64, eps_p: f64) -> f64 {
    eps_p * (g_m + 1.0 / rho) / (g_m * (1.0 + eps_p))
}

/// Scheme I coefficients: `alpha_p = min{1, eta}` and the remainder to the
/// secondary user on the active beams, mode I elsewhere.
pub fn scheme1_coefficients(cfg: &SystemConfig, g_gain: &[f64], active_set: &[usize]) -> PowerCoefficients {
    let (rho, eps_p) = (cfg.rho(), cfg.eps_p());
    let mut coeffs = PowerCoefficients::inactive(g_gain, rho, eps_p);
    for &m in active_set {
        let ap = eta(g_gain[m], rho, eps_p).min(1.0);
        coeffs.alpha_p[m] = ap;
        coeffs.alpha_s[m] = 1.0 - ap;
    }
    coeffs.active_set = active_set.to_vec();
    coeffs
}

/// Interference-plus-noise left over from beams outside `active_set`:
/// `sum_{j not in D} h_j alpha_p_j + 1/rho`.
pub fn tau(active_set: &[usize], h_gain: &[f64], alpha_p: &[f64], rho: f64) -> f64 {
    let residual: f64 = h_gain
        .iter()
        .zip(alpha_p)
        .enumerate()
        .filter(|(j, _)| !active_set.contains(j))
        .map(|(_, (h, a))| h * a)
        .sum();
    residual + 1.0 / rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inactive_values() {
        assert!((alpha_p_inactive(1.0, 10.0, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(alpha_p_inactive(0.05, 10.0, 1.0), 1.0);
        let seq: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&r| alpha_p_inactive(1.0, r, 1.0)).collect();
        assert!(seq[0] > seq[1] && seq[1] > seq[2] && seq[2] > 0.0);
    }

    #[test]
    fn selection_worked_instance() {
        // both caps evaluate to 0.45
        let a = alpha_s_selection(0, &[2.0, 1.0], 1.0, &[0.1, 0.1], 10.0, 1.0);
        assert!((a - 0.45).abs() < 1e-14, "{a}");
    }

    #[test]
    fn selection_caps_clamp_to_zero() {
        // g_1 below eps_p / rho
        assert_eq!(alpha_s_selection(0, &[2.0, 1.0], 0.05, &[1.0, 0.1], 10.0, 1.0), 0.0);
        // h_1 < eps_p * sum h_i alpha_i + eps_p / rho = 1.0 * 1.0 + 0.1
        assert_eq!(alpha_s_selection(0, &[1.05, 1.0], 1.0, &[0.1, 1.0], 10.0, 1.0), 0.0);
        assert_eq!(alpha_s_selection(0, &[0.0, 1.0], 1.0, &[0.1, 0.1], 10.0, 1.0), 0.0);
    }

    #[test]
    fn scheme1_values() {
        let cfg = SystemConfig::new(2, 2, 10.0, 1.0, 1.0).unwrap();
        let c = scheme1_coefficients(&cfg, &[1.0, 1.0], &[0]);
        assert!((c.alpha_p[0] - 0.55).abs() < 1e-15 && (c.alpha_s[0] - 0.45).abs() < 1e-15);
        assert_eq!(c.alpha_p[0] + c.alpha_s[0], 1.0);
        assert!((c.alpha_p[1] - 0.1).abs() < 1e-15 && c.alpha_s[1] == 0.0);

        let weak = scheme1_coefficients(&cfg, &[0.05, 1.0], &[0]);
        assert_eq!((weak.alpha_p[0], weak.alpha_s[0]), (1.0, 0.0));
    }

    #[test]
    fn eta_values() {
        assert!((eta(1.0, 10.0, 1.0) - 0.55).abs() < 1e-15);
        assert!((eta(0.1, 10.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((eta(1e12, 10.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tau_values() {
        assert!((tau(&[0, 1], &[2.0, 1.0], &[0.5, 0.5], 10.0) - 0.1).abs() < 1e-15);
        assert!((tau(&[0], &[2.0, 1.0], &[0.55, 0.1], 10.0) - 0.2).abs() < 1e-15);
        assert!(tau(&[0], &[2.0, 1.0], &[0.55, 0.1], 20.0) < tau(&[0], &[2.0, 1.0], &[0.55, 0.1], 10.0));
    }

    fn primary_sinr(g: f64, ap: f64, as_: f64, rho: f64) -> f64 {
        g * ap / (g * as_ + 1.0 / rho)
    }

    proptest! {
        #[test]
        fn primary_target_is_preserved(
            g in 1e-3f64..20.0,
            h in prop::collection::vec(0.0f64..10.0, 3),
            rho in 0.5f64..1e4,
            r_p in 0.05f64..3.0,
        ) {
            let eps_p = r_p.exp2() - 1.0;
            let cfg = SystemConfig::new(3, 3, rho, r_p, 1.0).unwrap();
            let gains = [g, 0.7, 1.3];
            let mode1: Vec<f64> = gains.iter().map(|&x| alpha_p_inactive(x, rho, eps_p)).collect();

            let sel = alpha_s_selection(0, &h, g, &mode1, rho, eps_p);
            let s1 = scheme1_coefficients(&cfg, &gains, &[0]);
            for (ap, as_) in [(1.0 - sel, sel), (s1.alpha_p[0], s1.alpha_s[0])] {
                prop_assert!((0.0..=1.0).contains(&ap) && (0.0..=1.0).contains(&as_));
                prop_assert!(ap + as_ <= 1.0 + 1e-12);
                if g >= eps_p / rho {
                    prop_assert!(primary_sinr(g, ap, as_, rho) >= eps_p - 1e-9);
                } else {
                    prop_assert_eq!(as_, 0.0);
                }
            }
        }

        #[test]
        fn qos_cap_is_one_minus_eta(g in 1e-3f64..20.0, rho in 0.5f64..1e4, eps_p in 0.01f64..5.0) {
            prop_assume!(g >= eps_p / rho);
            // huge h makes the SIC cap slack
            let a = alpha_s_selection(0, &[1e12, 1.0], g, &[0.0, 0.0], rho, eps_p);
            prop_assert!((a - (1.0 - eta(g, rho, eps_p))).abs() < 1e-12);
        }
    }
}
