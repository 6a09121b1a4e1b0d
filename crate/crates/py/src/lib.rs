//! Python bindings for `noma-beams`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use noma_beams::aggregation::{self, AggregationCandidate, CandidateStrategy};
use noma_beams::experiment::{self, Experiment, ExperimentConfig, PresetOverrides};
use noma_beams::montecarlo;
use noma_beams::{analysis, channel, power, validate, BeamGains, Error, Scheme, TrialSeed};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::Domain(_) | Error::EmptySamples => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn gains(g_gain: Vec<f64>, h_gain: Vec<f64>) -> PyResult<BeamGains> {
    if g_gain.len() != h_gain.len() || g_gain.is_empty() {
        return Err(PyValueError::new_err("g_gain and h_gain must be non-empty and of equal length"));
    }
    Ok(BeamGains::new(g_gain, h_gain))
}

#[pyclass(name = "SystemConfig", frozen)]
struct PySystemConfig {
    inner: noma_beams::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    fn new(n_antennas: usize, m_beams: usize, rho: f64, r_p: f64, r_s: f64) -> PyResult<Self> {
        let inner = noma_beams::SystemConfig::new(n_antennas, m_beams, rho, r_p, r_s).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_snr_db(n_antennas: usize, m_beams: usize, snr_db: f64, r_p: f64, r_s: f64) -> PyResult<Self> {
        Self::new(n_antennas, m_beams, noma_beams::db_to_linear(snr_db), r_p, r_s)
    }

    #[getter]
    fn n_antennas(&self) -> usize {
        self.inner.n_antennas()
    }

    #[getter]
    fn m_beams(&self) -> usize {
        self.inner.m_beams()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    #[getter]
    fn r_p(&self) -> f64 {
        self.inner.r_p()
    }

    #[getter]
    fn r_s(&self) -> f64 {
        self.inner.r_s()
    }

    #[getter]
    fn eps_p(&self) -> f64 {
        self.inner.eps_p()
    }

    #[getter]
    fn eps_s(&self) -> f64 {
        self.inner.eps_s()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(n_antennas={}, m_beams={}, rho={}, r_p={}, r_s={})",
            self.inner.n_antennas(),
            self.inner.m_beams(),
            self.inner.rho(),
            self.inner.r_p(),
            self.inner.r_s()
        )
    }
}

#[pyclass(name = "SchemeOutcome", frozen, get_all)]
struct PySchemeOutcome {
    scheme: String,
    chosen_set: Vec<usize>,
    secondary_rate: f64,
    unconditioned_rate: f64,
    outage: bool,
    alpha_p: Vec<f64>,
    alpha_s: Vec<f64>,
    primary_rates: Vec<f64>,
    sic_ok: Vec<bool>,
}

#[pymethods]
impl PySchemeOutcome {
    fn __repr__(&self) -> String {
        format!(
            "SchemeOutcome(scheme={:?}, chosen_set={:?}, secondary_rate={}, outage={})",
            self.scheme, self.chosen_set, self.secondary_rate, self.outage
        )
    }
}

impl From<noma_beams::SchemeOutcome> for PySchemeOutcome {
    fn from(o: noma_beams::SchemeOutcome) -> Self {
        Self {
            scheme: o.scheme.name().to_string(),
            chosen_set: o.chosen_set,
            secondary_rate: o.secondary_rate,
            unconditioned_rate: o.unconditioned_rate,
            outage: o.outage,
            alpha_p: o.coefficients.alpha_p,
            alpha_s: o.coefficients.alpha_s,
            primary_rates: o.rates.r_primary,
            sic_ok: o.rates.sic_ok,
        }
    }
}

/// Draws trial `trial` of experiment `seed` and returns its beam gains.
#[pyfunction]
fn realize<'py>(py: Python<'py>, n_antennas: usize, m_beams: usize, seed: u64, trial: u64) -> PyResult<Bound<'py, PyDict>> {
    let (chan, resamples) = channel::realize_dims(n_antennas, m_beams, TrialSeed::new(seed, trial)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("g_gain", chan.gains.g_gain)?;
    d.set_item("h_gain", chan.gains.h_gain)?;
    d.set_item("resamples", resamples)?;
    Ok(d)
}

/// Evaluates `scheme` ("selection", "scheme1" or "scheme2") on fixed gains.
#[pyfunction]
#[pyo3(signature = (g_gain, h_gain, config, scheme, strategy = "prefixes+singletons"))]
fn evaluate(
    g_gain: Vec<f64>,
    h_gain: Vec<f64>,
    config: PyRef<'_, PySystemConfig>,
    scheme: &str,
    strategy: &str,
) -> PyResult<PySchemeOutcome> {
    let gains = gains(g_gain, h_gain)?;
    let scheme: Scheme = scheme.parse().map_err(to_py)?;
    let strategy: CandidateStrategy = strategy.parse().map_err(to_py)?;
    Ok(montecarlo::evaluate(&gains, &config.inner, scheme, strategy).into())
}

/// Scheme I on a given beam set.
#[pyfunction]
fn evaluate_scheme1(
    g_gain: Vec<f64>,
    h_gain: Vec<f64>,
    config: PyRef<'_, PySystemConfig>,
    active_set: Vec<usize>,
) -> PyResult<PySchemeOutcome> {
    let gains = gains(g_gain, h_gain)?;
    if active_set.iter().any(|&m| m >= gains.len()) {
        return Err(PyValueError::new_err("beam index out of range"));
    }
    Ok(aggregation::evaluate_scheme1(&gains, &config.inner, &active_set).into())
}

/// Solves the Scheme II power split on `beams`.
#[pyfunction]
fn solve_problem4<'py>(
    py: Python<'py>,
    g_gain: Vec<f64>,
    h_gain: Vec<f64>,
    config: PyRef<'_, PySystemConfig>,
    beams: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let gains = gains(g_gain, h_gain)?;
    if beams.is_empty() || beams.iter().any(|&m| m >= gains.len()) {
        return Err(PyValueError::new_err("beams must be non-empty valid indices"));
    }
    let cand = AggregationCandidate::new(&beams, &gains, &config.inner);
    let sol = aggregation::solve_problem4(&cand, &gains.h_gain, config.inner.eps_p());
    let certified = aggregation::certify_solution(&cand, &gains.h_gain, config.inner.eps_p(), &sol, 1e-8).is_ok();
    let d = PyDict::new(py);
    d.set_item("beams", sol.beams.clone())?;
    d.set_item("optimal", sol.is_optimal())?;
    d.set_item("t_star", sol.t_star)?;
    d.set_item("rate", sol.objective_rate)?;
    d.set_item("alpha_p", sol.alpha_p.clone())?;
    d.set_item("alpha_s", sol.alpha_s())?;
    d.set_item("tau", cand.tau_d)?;
    d.set_item("certified", certified)?;
    Ok(d)
}

/// Minimum primary share of a beam that carries secondary power.
#[pyfunction]
fn eta(g_m: f64, rho: f64, eps_p: f64) -> f64 {
    power::eta(g_m, rho, eps_p)
}

#[pyfunction]
fn q1_exact(n_antennas: usize, m_beams: usize, eps_p: f64, rho: f64) -> PyResult<f64> {
    analysis::q1_exact(n_antennas, m_beams, eps_p, rho).map_err(to_py)
}

#[pyfunction]
fn q1_high_snr(n_antennas: usize, m_beams: usize, eps_p: f64, rho: f64) -> PyResult<f64> {
    analysis::q1_high_snr(n_antennas, m_beams, eps_p, rho).map_err(to_py)
}

#[pyfunction]
fn gain_cdf(x: f64, n_antennas: usize, m_beams: usize) -> PyResult<f64> {
    analysis::gain_cdf(x, n_antennas, m_beams).map_err(to_py)
}

#[pyfunction]
fn gamma_lower_regularized(s: f64, x: f64) -> PyResult<f64> {
    analysis::gamma_lower_regularized(s, x).map_err(to_py)
}

fn run_to_csv(py: Python<'_>, exp: Experiment, workers: usize) -> PyResult<String> {
    let results = py.detach(|| exp.run(workers)).map_err(to_py)?;
    Ok(experiment::to_csv_string(&exp, &results))
}

/// Runs a figure preset and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (name, trials = None, seed = None, snr_db = None, workers = 0))]
fn preset_csv(
    py: Python<'_>,
    name: &str,
    trials: Option<u64>,
    seed: Option<u64>,
    snr_db: Option<Vec<f64>>,
    workers: usize,
) -> PyResult<String> {
    let overrides = PresetOverrides {
        trials,
        seed,
        snr_db,
        ..Default::default()
    };
    let exp = experiment::preset(name, &overrides).map_err(to_py)?;
    run_to_csv(py, exp, workers)
}

/// Runs the sweep described by TOML text and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (config_toml, workers = 0))]
fn sweep_csv(py: Python<'_>, config_toml: &str, workers: usize) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    let exp = Experiment::from_config("sweep", &cfg).map_err(to_py)?;
    run_to_csv(py, exp, workers)
}

/// Runs a validation suite; returns `(passed, report)`.
#[pyfunction]
#[pyo3(signature = (suite, seed = 7))]
fn run_validation(py: Python<'_>, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    let suite: validate::Suite = suite.parse().map_err(to_py)?;
    let report = py.detach(|| validate::run(suite, seed)).map_err(to_py)?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
fn noma_beams_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PySchemeOutcome>()?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_scheme1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_problem4, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(q1_exact, m)?)?;
    m.add_function(wrap_pyfunction!(q1_high_snr, m)?)?;
    m.add_function(wrap_pyfunction!(gain_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_lower_regularized, m)?)?;
    m.add_function(wrap_pyfunction!(preset_csv, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(run_validation, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains_require_matching_lengths() {
        assert!(gains(vec![1.0], vec![1.0]).is_ok());
        assert!(gains(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(gains(vec![], vec![]).is_err());
    }
}
