//! Rayleigh channels, normalized zero-forcing beams and the scalar gains
//! every scheme works with.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Largest condition number of `G` accepted by [`zf_beams`].
pub const MAX_CONDITION: f64 = 1e12;

/// Redraws allowed before [`realize`] gives up on a trial.
pub const MAX_RESAMPLES: u32 = 64;

/// Experiment parameters for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    n_antennas: usize,
    m_beams: usize,
    rho: f64,
    r_p: f64,
    r_s: f64,
    eps_p: f64,
    eps_s: f64,
}

impl SystemConfig {
    /// `rho` is the linear transmit SNR, `r_p`/`r_s` the primary and
    /// secondary targets in bits per channel use.
    pub fn new(n_antennas: usize, m_beams: usize, rho: f64, r_p: f64, r_s: f64) -> Result<Self> {
        if m_beams == 0 {
            return Err(Error::InvalidConfig("m_beams must be at least 1".into()));
        }
        if n_antennas < m_beams {
            return Err(Error::InvalidConfig(format!(
                "zero-forcing needs N >= M, got n_antennas = {n_antennas} < m_beams = {m_beams}"
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {rho}")));
        }
        if !(r_p.is_finite() && r_p > 0.0) {
            return Err(Error::InvalidConfig(format!("r_p must be positive, got {r_p}")));
        }
        if !(r_s.is_finite() && r_s >= 0.0) {
            return Err(Error::InvalidConfig(format!("r_s must be non-negative, got {r_s}")));
        }
        Ok(Self {
            n_antennas,
            m_beams,
            rho,
            r_p,
            r_s,
            eps_p: r_p.exp2() - 1.0,
            eps_s: r_s.exp2() - 1.0,
        })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.n_antennas, self.m_beams, rho, self.r_p, self.r_s)
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        self.with_rho(crate::db_to_linear(snr_db))
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn m_beams(&self) -> usize {
        self.m_beams
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn r_p(&self) -> f64 {
        self.r_p
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    /// Primary SINR threshold `2^{R^P} - 1`.
    pub fn eps_p(&self) -> f64 {
        self.eps_p
    }

    /// Secondary SINR threshold `2^{R^S} - 1`.
    pub fn eps_s(&self) -> f64 {
        self.eps_s
    }
}

/// Identifies the random stream of one Monte Carlo trial.
///
/// The stream is a ChaCha8 keystream keyed by `experiment_seed` with
/// `trial_index` as the stream id, so any trial can be replayed on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub experiment_seed: u64,
    pub trial_index: u64,
}

impl TrialSeed {
    pub fn new(experiment_seed: u64, trial_index: u64) -> Self {
        Self {
            experiment_seed,
            trial_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.experiment_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// Per-beam scalar gains seen by the primary users (`g_gain`) and by the
/// secondary user (`h_gain`). This is all the power-allocation and rate
/// code needs from a channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGains {
    /// `|g_m^H f_m|^2`
    pub g_gain: Vec<f64>,
    /// `|h^H f_m|^2`
    pub h_gain: Vec<f64>,
}

impl BeamGains {
    pub fn new(g_gain: Vec<f64>, h_gain: Vec<f64>) -> Self {
        assert_eq!(g_gain.len(), h_gain.len(), "gain vectors differ in length");
        Self { g_gain, h_gain }
    }

    pub fn len(&self) -> usize {
        self.g_gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_gain.is_empty()
    }
}

/// One channel draw together with its zero-forcing beams.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Primary channels as columns, N x M.
    pub g: DMatrix<Complex64>,
    /// Secondary channel, length N.
    pub h: DVector<Complex64>,
    /// Beamformers as columns, N x M.
    pub f: DMatrix<Complex64>,
    pub gains: BeamGains,
    /// Co-phasing factors `(h^H f_m)^* / |h^H f_m|`.
    pub beta: Vec<Complex64>,
}

impl ChannelRealization {
    /// Builds the beams and gains for a given channel pair.
    pub fn from_channels(g: DMatrix<Complex64>, h: DVector<Complex64>) -> Result<Self> {
        let (f, g_gain) = zf_beams(&g)?;
        let (h_gain, beta) = effective_gains(&h, &f);
        Ok(Self {
            g,
            h,
            f,
            gains: BeamGains::new(g_gain, h_gain),
            beta,
        })
    }
}

fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `G` (N x M, column-major) and then `h` from CN(0, 1) entries.
pub fn draw_channels<R: rand::Rng + ?Sized>(
    n_antennas: usize,
    m_beams: usize,
    rng: &mut R,
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let g = DMatrix::from_fn(n_antennas, m_beams, |_, _| complex_normal(rng));
    let h = DVector::from_fn(n_antennas, |_, _| complex_normal(rng));
    (g, h)
}

/// The first channel pair of a trial's stream.
pub fn sample_channels(cfg: &SystemConfig, seed: TrialSeed) -> (DMatrix<Complex64>, DVector<Complex64>) {
    draw_channels(cfg.n_antennas(), cfg.m_beams(), &mut seed.rng())
}

/// Zero-forcing beams `F = G (G^H G)^{-1} D` with
/// `D_ii = (M [(G^H G)^{-1}]_ii)^{-1/2}`, so every beam has norm `1/sqrt(M)`.
/// Also returns `g_m = |g_m^H f_m|^2`.
pub fn zf_beams(g: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let m = g.ncols();
    let sv = g.singular_values();
    let (lo, hi) = sv
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularChannel { condition });
    }

    let gram = g.adjoint() * g;
    let gram_inv = gram
        .cholesky()
        .ok_or(Error::SingularChannel { condition })?
        .inverse();
    let mut f = g * &gram_inv;
    for i in 0..m {
        let d = (m as f64 * gram_inv[(i, i)].re).powf(-0.5);
        f.column_mut(i).scale_mut(d);
    }
    let g_gain = (0..m)
        .map(|i| g.column(i).dotc(&f.column(i)).norm_sqr())
        .collect();
    Ok((f, g_gain))
}

/// `h_m = |h^H f_m|^2` and the co-phasing factors `beta_m`; a beam with zero
/// gain gets `beta_m = 1`.
pub fn effective_gains(h: &DVector<Complex64>, f: &DMatrix<Complex64>) -> (Vec<f64>, Vec<Complex64>) {
    assert_eq!(h.len(), f.nrows(), "h and F disagree on the antenna count");
    f.column_iter()
        .map(|col| {
            let proj = h.dotc(&col);
            let mag = proj.norm();
            let beta = if mag > 0.0 { proj.conj() / mag } else { Complex64::new(1.0, 0.0) };
            (proj.norm_sqr(), beta)
        })
        .unzip()
}

/// Draws the trial's channel, redrawing from the same stream while the draw
/// is singular. Returns the realization and the number of redraws.
pub fn realize(cfg: &SystemConfig, seed: TrialSeed) -> Result<(ChannelRealization, u32)> {
    realize_dims(cfg.n_antennas(), cfg.m_beams(), seed)
}

pub fn realize_dims(n_antennas: usize, m_beams: usize, seed: TrialSeed) -> Result<(ChannelRealization, u32)> {
    let mut rng = seed.rng();
    for resamples in 0..=MAX_RESAMPLES {
        let (g, h) = draw_channels(n_antennas, m_beams, &mut rng);
        match ChannelRealization::from_channels(g, h) {
            Ok(chan) => return Ok((chan, resamples)),
            Err(Error::SingularChannel { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimit(MAX_RESAMPLES))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn config_rejects_more_beams_than_antennas() {
        let err = SystemConfig::new(2, 3, 10.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("N >= M"));
        assert!(SystemConfig::new(2, 0, 10.0, 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, 2, 0.0, 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, 2, 10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn thresholds_are_cached() {
        let cfg = SystemConfig::new(4, 2, 100.0, 1.0, 2.0).unwrap();
        assert_eq!(cfg.eps_p(), 1.0);
        assert_eq!(cfg.eps_s(), 3.0);
        assert!((cfg.with_snr_db(20.0).unwrap().rho() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn zf_identity_channel() {
        let g = DMatrix::<Complex64>::identity(2, 2);
        let (f, g_gain) = zf_beams(&g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { s } else { 0.0 };
                assert!((f[(i, j)] - c(want)).norm() < 1e-15);
            }
        }
        assert!((g_gain[0] - 0.5).abs() < 1e-15 && (g_gain[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zf_single_beam_is_the_channel() {
        let g = DMatrix::from_column_slice(3, 1, &[c(0.6), Complex64::new(0.0, 0.8), c(0.0)]);
        let (f, g_gain) = zf_beams(&g).unwrap();
        assert!((&f - &g).norm() < 1e-15);
        assert!((g_gain[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zf_rejects_rank_deficient_channel() {
        let g = DMatrix::from_column_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert!(matches!(zf_beams(&g), Err(Error::SingularChannel { .. })));
    }

    #[test]
    fn gains_for_projection_onto_one_beam() {
        let g = DMatrix::<Complex64>::identity(2, 2);
        let (f, _) = zf_beams(&g).unwrap();
        let h: DVector<Complex64> = f.column(0) * c(2.0);
        let (h_gain, _) = effective_gains(&h, &f);
        let norm_sq = f.column(0).norm_squared();
        assert!((h_gain[0] - 4.0 * norm_sq * norm_sq).abs() < 1e-15);
        assert!(h_gain[1].abs() < 1e-15);
    }

    #[test]
    fn gains_zero_when_orthogonal() {
        let g = DMatrix::from_column_slice(3, 2, &[c(1.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0)]);
        let (f, _) = zf_beams(&g).unwrap();
        let h = DVector::from_column_slice(&[c(0.0), c(0.0), Complex64::new(0.3, -0.2)]);
        let (h_gain, beta) = effective_gains(&h, &f);
        assert_eq!(h_gain, vec![0.0, 0.0]);
        assert!(beta.iter().all(|b| *b == c(1.0)));
    }

    #[test]
    fn beta_is_unit_modulus_and_cophases() {
        let seed = TrialSeed::new(11, 3);
        let cfg = SystemConfig::new(4, 3, 10.0, 1.0, 1.0).unwrap();
        let (chan, _) = realize(&cfg, seed).unwrap();
        for (m, b) in chan.beta.iter().enumerate() {
            let proj = chan.h.dotc(&chan.f.column(m));
            assert!((b.norm() - 1.0).abs() < 1e-12);
            // beta * (h^H f) is real and equals |h^H f|
            let rotated = proj * b;
            assert!(rotated.im.abs() < 1e-12);
            assert!((b.norm_sqr() * proj.norm_sqr() - chan.gains.h_gain[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = SystemConfig::new(4, 2, 10.0, 1.0, 1.0).unwrap();
        let a = sample_channels(&cfg, TrialSeed::new(5, 9));
        let b = sample_channels(&cfg, TrialSeed::new(5, 9));
        let other = sample_channels(&cfg, TrialSeed::new(5, 10));
        assert_eq!(a, b);
        assert_ne!(a.0, other.0);
    }
}
