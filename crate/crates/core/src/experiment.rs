//! Experiment files, figure presets and CSV output.

use std::io::Write;

use serde::Deserialize;

use crate::aggregation::CandidateStrategy;
use crate::montecarlo::{estimate, Metric, SweepResult, SweepSpec};
use crate::{Error, Result, Scheme};

/// Column names of the result table, in order.
pub const CSV_HEADER: [&str; 10] = [
    "snr_db", "n", "m", "scheme", "metric", "value", "std_err", "trials", "seed", "resamples",
];

pub const PRESET_NAMES: [&str; 4] = ["fig1a", "fig1b", "fig2a", "fig2b"];

pub const DEFAULT_PRESET_TRIALS: u64 = 10_000;
pub const DEFAULT_PRESET_SEED: u64 = 1;

/// On-disk experiment description (TOML).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_antennas: usize,
    pub m_beams: usize,
    pub snr_db: Vec<f64>,
    pub r_p_bpcu: f64,
    pub r_s_bpcu: f64,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<String>,
    pub metric: String,
    #[serde(default)]
    pub candidate_strategy: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_sweep_spec(&self) -> Result<SweepSpec> {
        let schemes = self
            .schemes
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Scheme>>>()?;
        let candidate_strategy = match &self.candidate_strategy {
            Some(s) => s.parse()?,
            None => CandidateStrategy::default(),
        };
        let spec = SweepSpec {
            n_antennas: self.n_antennas,
            m_beams: self.m_beams,
            r_p: self.r_p_bpcu,
            r_s: self.r_s_bpcu,
            snr_grid_db: self.snr_db.clone(),
            schemes,
            metrics: vec![self.metric.parse()?],
            trials: self.trials,
            seed: self.seed,
            candidate_strategy,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One or more sweeps written to a single table.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    /// Parameters chosen by default rather than taken from the figure.
    pub assumptions: Vec<String>,
    pub sweeps: Vec<SweepSpec>,
}

impl Experiment {
    pub fn from_config(name: &str, cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            assumptions: Vec::new(),
            sweeps: vec![cfg.to_sweep_spec()?],
        })
    }

    pub fn run(&self, workers: usize) -> Result<Vec<SweepResult>> {
        self.sweeps.iter().map(|s| estimate(s, workers)).collect()
    }
}

/// Command-line overrides applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOverrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub strategy: Option<CandidateStrategy>,
    pub metric: Option<Metric>,
    pub m_beams: Option<Vec<usize>>,
    pub r_p: Option<f64>,
    pub r_s: Option<f64>,
}

/// Parses `a:b:step` into `a, a + step, ...` up to and including `b`.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("expected --snr-db a:b:step, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || b < a {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(Error::InvalidConfig(format!("snr range `{text}` has too many points")));
    }
    Ok((0..count).map(|k| a + k as f64 * step).collect())
}

/// Builds a figure preset.
///
/// All presets use N = M and sweep 0 to 40 dB in 5 dB steps. `fig1a` and
/// `fig1b` cover M = 2 and M = 4 with R^P = 0.1 and R^S = 1 BPCU; `fig2a`
/// and `fig2b` use M = 4. `fig1b` reports the ergodic rate both with and
/// without the SIC condition.
pub fn preset(name: &str, overrides: &PresetOverrides) -> Result<Experiment> {
    let (schemes, metrics, default_m, mut assumptions): (Vec<Scheme>, Vec<Metric>, Vec<usize>, Vec<String>) =
        match name {
            "fig1a" => (
                vec![Scheme::Selection],
                vec![Metric::Outage],
                vec![2, 4],
                vec!["M in {2, 4}".into(), "R^P = 0.1 BPCU".into()],
            ),
            "fig1b" => (
                vec![Scheme::Selection],
                vec![Metric::ErgodicRate, Metric::ErgodicRateUnconditioned],
                vec![2, 4],
                vec!["M in {2, 4}".into(), "R^P = 0.1 BPCU".into(), "R^S = 1 BPCU".into()],
            ),
            "fig2a" => (
                vec![Scheme::Selection, Scheme::Scheme1],
                vec![Metric::ErgodicRate],
                vec![4],
                vec!["M = 4".into(), "R^S = 1 BPCU".into()],
            ),
            "fig2b" => (
                vec![Scheme::Selection, Scheme::Scheme2],
                vec![Metric::ErgodicRate],
                vec![4],
                vec!["M = 4".into(), "R^S = 1 BPCU".into()],
            ),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
    assumptions.push("N = M".into());
    assumptions.push("SNR grid 0:40:5 dB".into());

    let metrics = overrides.metric.map(|m| vec![m]).unwrap_or(metrics);
    let snr = overrides
        .snr_db
        .clone()
        .unwrap_or_else(|| (0..=8).map(|k| 5.0 * k as f64).collect());
    let ms = overrides.m_beams.clone().unwrap_or(default_m);
    let sweeps = ms
        .iter()
        .map(|&m| SweepSpec {
            n_antennas: m,
            m_beams: m,
            r_p: overrides.r_p.unwrap_or(0.1),
            r_s: overrides.r_s.unwrap_or(1.0),
            snr_grid_db: snr.clone(),
            schemes: schemes.clone(),
            metrics: metrics.clone(),
            trials: overrides.trials.unwrap_or(DEFAULT_PRESET_TRIALS),
            seed: overrides.seed.unwrap_or(DEFAULT_PRESET_SEED),
            candidate_strategy: overrides.strategy.unwrap_or_default(),
        })
        .collect::<Vec<_>>();
    for s in &sweeps {
        s.validate()?;
    }
    Ok(Experiment {
        name: name.to_string(),
        assumptions,
        sweeps,
    })
}

/// Writes `#` metadata lines, the header and one row per estimate.
pub fn write_csv<W: Write>(out: W, experiment: &Experiment, results: &[SweepResult]) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# experiment: {}", experiment.name)?;
    for a in &experiment.assumptions {
        writeln!(out, "# assumption: {a}")?;
    }
    for r in results {
        let s = &r.spec;
        writeln!(
            out,
            "# sweep: n={} m={} r_p={} r_s={} strategy={} legacy_violations={}",
            s.n_antennas,
            s.m_beams,
            s.r_p,
            s.r_s,
            s.candidate_strategy.name(),
            r.legacy_violations
        )?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        for row in &r.rows {
            let e = &row.estimate;
            w.write_record([
                row.snr_db.to_string(),
                r.spec.n_antennas.to_string(),
                r.spec.m_beams.to_string(),
                row.scheme.name().to_string(),
                row.metric.name().to_string(),
                e.value.to_string(),
                e.std_err.to_string(),
                e.trials.to_string(),
                r.spec.seed.to_string(),
                e.resamples.to_string(),
            ])?;
        }
    }
    w.flush()
}

pub fn to_csv_string(experiment: &Experiment, results: &[SweepResult]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, experiment, results).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Fixed-width table for terminals.
pub fn summary_table(results: &[SweepResult]) -> String {
    let mut s = format!(
        "{:>8} {:>3} {:>3} {:<10} {:<27} {:>12} {:>12}\n",
        "snr_db", "n", "m", "scheme", "metric", "value", "std_err"
    );
    for r in results {
        for row in &r.rows {
            s.push_str(&format!(
                "{:>8.2} {:>3} {:>3} {:<10} {:<27} {:>12.6} {:>12.6}\n",
                row.snr_db,
                r.spec.n_antennas,
                r.spec.m_beams,
                row.scheme.name(),
                row.metric.name(),
                row.estimate.value,
                row.estimate.std_err
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_antennas = 2
m_beams = 2
snr_db = [20.0]
r_p_bpcu = 0.1
r_s_bpcu = 1.0
trials = 20
seed = 5
schemes = ["selection", "scheme2"]
metric = "ergodic_rate"
"#;

    #[test]
    fn minimal_config_gives_one_row_per_scheme() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let exp = Experiment::from_config("minimal", &cfg).unwrap();
        let csv = to_csv_string(&exp, &exp.run(1).unwrap());
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], CSV_HEADER.join(","));
        assert_eq!(body.len(), 3);
        assert!(body[1].starts_with("20,2,2,selection,ergodic_rate,"));
    }

    #[test]
    fn unknown_field_is_named() {
        let text = format!("{MINIMAL}\nbeams = 3\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("beams"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn n_below_m_cites_invariant() {
        let text = MINIMAL.replace("n_antennas = 2", "n_antennas = 1");
        let err = ExperimentConfig::from_toml(&text).unwrap().to_sweep_spec().unwrap_err();
        assert!(err.to_string().contains("N >= M"), "{err}");
    }

    #[test]
    fn bad_names_are_rejected() {
        let text = MINIMAL.replace("\"scheme2\"", "\"scheme9\"");
        assert!(ExperimentConfig::from_toml(&text).unwrap().to_sweep_spec().is_err());
        let text = MINIMAL.replace("ergodic_rate", "goodput");
        assert!(ExperimentConfig::from_toml(&text).unwrap().to_sweep_spec().is_err());
        assert!(preset("fig3", &PresetOverrides::default()).is_err());
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("0:40:10").unwrap(), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(parse_snr_range("0:1:0.25").unwrap().len(), 5);
        assert_eq!(parse_snr_range("5:5:1").unwrap(), vec![5.0]);
        assert!(parse_snr_range("0:10").is_err());
        assert!(parse_snr_range("0:10:0").is_err());
        assert!(parse_snr_range("10:0:1").is_err());
        assert!(parse_snr_range("a:b:c").is_err());
    }

    #[test]
    fn presets_shape() {
        let p = preset("fig1a", &PresetOverrides::default()).unwrap();
        assert_eq!(p.sweeps.len(), 2);
        assert_eq!(p.sweeps[1].m_beams, 4);
        assert_eq!(p.sweeps[0].snr_grid_db.len(), 9);
        assert_eq!(p.sweeps[0].r_p, 0.1);
        let p = preset("fig2b", &PresetOverrides { trials: Some(10), ..Default::default() }).unwrap();
        assert_eq!(p.sweeps[0].schemes, vec![Scheme::Selection, Scheme::Scheme2]);
        assert_eq!(p.sweeps[0].trials, 10);
        let p = preset("fig1b", &PresetOverrides::default()).unwrap();
        assert_eq!(p.sweeps[0].metrics.len(), 2);
    }

    #[test]
    fn preset_csv_is_reproducible() {
        let o = PresetOverrides {
            trials: Some(30),
            seed: Some(7),
            snr_db: Some(vec![0.0, 20.0]),
            ..Default::default()
        };
        let p = preset("fig1a", &o).unwrap();
        let a = to_csv_string(&p, &p.run(1).unwrap());
        let b = to_csv_string(&p, &p.run(4).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("# assumption: M in {2, 4}"));
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 2);
    }
}
