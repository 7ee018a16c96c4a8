//! Python bindings: closed-form bounds, sample paths and the sup-tail estimator.
//!
//! Functions are named by spec strings such as `"holder_abs_pow:alpha=0.5,cap=1"`;
//! schedules by `"holder:alpha=0.5,mu=0.4"` plus a separate `gamma`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qcov_core::bounds::{self, RateSchedule};
use qcov_core::covariation;
use qcov_core::montecarlo::{self, ExperimentConfig, ExperimentKind};
use qcov_core::paths::{beta_from_path, sample_brownian};
use qcov_core::{stats, CertifiedFunction, FineGrid, TestFunction, UniformPartition};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn function(spec: &str) -> PyResult<TestFunction> {
    spec.parse().map_err(value_error)
}

fn grid(horizon: f64, cells: usize, refinement: usize) -> PyResult<FineGrid> {
    let partition = UniformPartition::new(horizon, cells).map_err(value_error)?;
    FineGrid::new(partition, refinement).map_err(value_error)
}

#[pyfunction]
fn q_eps(delta: f64) -> PyResult<f64> {
    bounds::q_eps(delta).map_err(value_error)
}

#[pyfunction]
fn martingale_tail_bound(r: f64, delta: f64) -> PyResult<f64> {
    bounds::martingale_tail_bound(r, delta).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (delta, delta_eps, horizon = 1.0))]
fn levy_tail_bound(delta: f64, delta_eps: f64, horizon: f64) -> PyResult<f64> {
    bounds::levy_tail_bound(delta, delta_eps, horizon).map_err(value_error)
}

/// Partition width prescribed by a rate schedule at noise level `eps`.
#[pyfunction]
#[pyo3(signature = (schedule, gamma, eps, horizon = 1.0))]
fn delta_eps(schedule: &str, gamma: f64, eps: f64, horizon: f64) -> PyResult<f64> {
    let s = RateSchedule::parse(schedule, gamma).map_err(value_error)?;
    s.delta_eps(eps, horizon).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (count, trials, confidence = 0.95))]
fn clopper_pearson(count: u64, trials: u64, confidence: f64) -> PyResult<(f64, f64)> {
    stats::clopper_pearson(count, trials, confidence).map_err(value_error)
}

#[pyfunction]
fn evaluate(function_spec: &str, xs: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = function(function_spec)?;
    Ok(xs.into_iter().map(|x| f.eval(x)).collect())
}

#[pyfunction]
fn osc_bound(function_spec: &str, d: f64) -> PyResult<f64> {
    function(function_spec)?.osc_bound(d).map_err(value_error)
}

/// Fine-grid Brownian path; replica `k` of `seed` is the same on every platform.
#[pyfunction]
#[pyo3(signature = (horizon, cells, refinement, seed, replica = 0))]
fn brownian_path(horizon: f64, cells: usize, refinement: usize, seed: u64, replica: u64) -> PyResult<Vec<f64>> {
    Ok(sample_brownian(grid(horizon, cells, refinement)?, seed, replica).values().to_vec())
}

/// Time-reversed Brownian motion built from the same path as `brownian_path`.
#[pyfunction]
#[pyo3(signature = (horizon, cells, refinement, seed, replica = 0))]
fn beta(horizon: f64, cells: usize, refinement: usize, seed: u64, replica: u64) -> PyResult<Vec<f64>> {
    let path = sample_brownian(grid(horizon, cells, refinement)?, seed, replica);
    beta_from_path(&path).map_err(value_error)
}

/// `L_{eps,P}` at the coarse nodes of the same path as `brownian_path`.
#[pyfunction]
#[pyo3(signature = (function_spec, eps, horizon, cells, refinement, seed, replica = 0))]
fn discrete_covariation(
    function_spec: &str,
    eps: f64,
    horizon: f64,
    cells: usize,
    refinement: usize,
    seed: u64,
    replica: u64,
) -> PyResult<Vec<f64>> {
    let f = function(function_spec)?;
    let path = sample_brownian(grid(horizon, cells, refinement)?, seed, replica);
    Ok(covariation::discrete_covariation(&path, &f, eps).values)
}

/// Sup-tail estimates, one dict per `eps`.
#[pyfunction]
#[pyo3(signature = (
    function_spec = "holder_abs_pow:alpha=0.5,cap=1",
    schedule = "holder:alpha=0.5,mu=0.4",
    gamma = 0.25,
    epsilons = vec![0.4, 0.2, 0.1, 0.05],
    threshold = 0.5,
    replicas = 2000,
    refinement = 64,
    seed = 20240601,
    horizon = 1.0,
))]
#[allow(clippy::too_many_arguments)]
fn sup_tail<'py>(
    py: Python<'py>,
    function_spec: &str,
    schedule: &str,
    gamma: f64,
    epsilons: Vec<f64>,
    threshold: f64,
    replicas: usize,
    refinement: usize,
    seed: u64,
    horizon: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = ExperimentConfig {
        name: "python".into(),
        function: function(function_spec)?,
        schedule: RateSchedule::parse(schedule, gamma).map_err(value_error)?,
        epsilons,
        threshold,
        replicas,
        refinement,
        seed,
        horizon,
        ..ExperimentConfig::desk(ExperimentKind::SupTail)
    };
    let estimates = py
        .detach(|| montecarlo::estimate_sup_tail(&cfg))
        .map_err(value_error)?;
    estimates
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("epsilon", e.epsilon)?;
            d.set_item("delta_eps", e.delta_eps)?;
            d.set_item("n_eps", e.n_eps)?;
            d.set_item("q_eps", e.q_eps)?;
            d.set_item("count", e.count)?;
            d.set_item("replicas", e.replicas)?;
            d.set_item("p_hat", e.p_hat)?;
            d.set_item("ci_low", e.ci_low)?;
            d.set_item("ci_high", e.ci_high)?;
            d.set_item("seed", e.seed)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn qcov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(q_eps, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(levy_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(delta_eps, m)?)?;
    m.add_function(wrap_pyfunction!(clopper_pearson, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(osc_bound, m)?)?;
    m.add_function(wrap_pyfunction!(brownian_path, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_covariation, m)?)?;
    m.add_function(wrap_pyfunction!(sup_tail, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
