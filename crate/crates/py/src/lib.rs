//! Python bindings: graphs, experiment configs, runs and the analysis helpers.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use gossip_ula::analysis;
use gossip_ula::harness::{self, ExperimentConfig};
use gossip_ula::sampler::{self, initial_samples, Engine};
use gossip_ula::topology;

fn to_py(e: gossip_ula::Error) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        2 => PyValueError::new_err(msg),
        4 => PyFileNotFoundError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

/// Serializable value to plain Python objects through `json.loads`.
fn to_object<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Undirected connected communication graph.
#[pyclass(name = "Graph", module = "gossip_ula", frozen)]
struct PyGraph(topology::Graph);

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn ring(n: usize) -> PyResult<Self> {
        topology::Graph::ring(n).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        topology::Graph::complete(n).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn star(n: usize) -> PyResult<Self> {
        topology::Graph::star(n).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn path(n: usize) -> PyResult<Self> {
        topology::Graph::path(n).map(Self).map_err(to_py)
    }

    /// Graph on agents `0..n` with the given `(i, j)` edges.
    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        topology::Graph::from_edges(n, &edges).map(Self).map_err(to_py)
    }

    /// Parses the edge-list text format used by `--graph-file`.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        topology::Graph::parse_edge_list(text).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn degree(&self, i: usize) -> PyResult<usize> {
        if i >= self.0.n() {
            return Err(PyValueError::new_err(format!("agent {i} out of range")));
        }
        Ok(self.0.degree(i))
    }

    /// Per-agent probability of being active at a tick.
    fn activation_probabilities(&self) -> Vec<f64> {
        topology::activation_probabilities(&self.0).p
    }

    /// Activation probability of each edge, in `edges` order.
    fn edge_probabilities(&self) -> Vec<f64> {
        self.0.edge_probabilities()
    }

    /// Second-smallest eigenvalue of the expected gossip Laplacian.
    fn lambda_n_minus_1(&self) -> f64 {
        topology::expected_laplacian(&self.0).lambda_n_minus_1
    }

    /// Consensus contraction factor for fusion weight `beta`.
    fn lambda_contraction(&self, beta: f64) -> PyResult<f64> {
        topology::lambda_contraction(&self.0, beta).map_err(to_py)
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.0.n(), self.0.edges().len())
    }
}

/// Experiment configuration (the TOML schema of `run-custom`).
#[pyclass(name = "Config", module = "gossip_ula", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig(ExperimentConfig);

#[pymethods]
impl PyConfig {
    #[staticmethod]
    #[pyo3(signature = (full_scale = false))]
    fn gm_preset(full_scale: bool) -> Self {
        Self(ExperimentConfig::gm_preset(full_scale))
    }

    #[staticmethod]
    fn logistic_preset() -> Self {
        Self(ExperimentConfig::logistic_preset())
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ExperimentConfig::from_toml_str(text).map(Self).map_err(to_py)
    }

    /// Loads a TOML config or the config stored in a run manifest.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        ExperimentConfig::from_file(&path).map(Self).map_err(to_py)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.0.to_toml_string().map_err(to_py)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_object(py, &self.0)
    }

    /// Checks the config and returns its graph.
    fn validate(&self) -> PyResult<PyGraph> {
        self.0.validate().map(PyGraph).map_err(to_py)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id.clone()
    }

    #[setter]
    fn set_id(&mut self, v: String) {
        self.0.id = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.0.seed = v;
    }

    #[getter]
    fn chains(&self) -> u32 {
        self.0.chains
    }

    #[setter]
    fn set_chains(&mut self, v: u32) {
        self.0.chains = v;
    }

    #[getter]
    fn ticks(&self) -> u64 {
        self.0.sampler.ticks
    }

    #[setter]
    fn set_ticks(&mut self, v: u64) {
        self.0.sampler.ticks = v;
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.sampler.alpha
    }

    #[setter]
    fn set_alpha(&mut self, v: f64) {
        self.0.sampler.alpha = v;
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.sampler.beta
    }

    #[setter]
    fn set_beta(&mut self, v: f64) {
        self.0.sampler.beta = v;
    }

    #[getter]
    fn engines(&self) -> Vec<&'static str> {
        self.0.engines.iter().map(|e| e.name()).collect()
    }

    #[setter]
    fn set_engines(&mut self, names: Vec<String>) -> PyResult<()> {
        self.0.engines = names
            .iter()
            .map(|s| s.parse::<Engine>())
            .collect::<Result<_, _>>()
            .map_err(to_py)?;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(id={:?}, seed={}, chains={}, ticks={})",
            self.0.id, self.0.seed, self.0.chains, self.0.sampler.ticks
        )
    }
}

/// Runs an experiment into `out` and returns a summary dict.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &PyConfig, out: PathBuf) -> PyResult<Py<PyAny>> {
    let cfg = config.0.clone();
    let result = py.detach(|| harness::run_experiment(&cfg, &out)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("out_dir", result.out_dir.to_string_lossy().to_string())?;
    d.set_item("status", to_object(py, &result.status)?)?;
    d.set_item("wall_time_s", result.wall_time_s)?;
    if let Some(w) = &result.wasserstein {
        d.set_item("wasserstein", to_object(py, w)?)?;
    }
    if let Some(acc) = &result.accuracy {
        d.set_item("accuracy_final", to_object(py, &acc.finals)?)?;
        d.set_item("matched_updates", acc.matched_updates)?;
    }
    Ok(d.into_any().unbind())
}

/// Rebuilds the report of a run directory and returns its text.
#[pyfunction]
fn report(dir: PathBuf) -> PyResult<String> {
    harness::report(&dir).map(|r| r.text).map_err(to_py)
}

/// Runs one chain of one engine on the config's problem.
///
/// Returns a dict with `samples` (tick, agent, updates, w), `consensus_error`
/// (tick, value), per-agent `updates` and `broadcasts`.
#[pyfunction]
#[pyo3(signature = (config, engine, chain = 0))]
fn run_chain(py: Python<'_>, config: &PyConfig, engine: &str, chain: u32) -> PyResult<Py<PyAny>> {
    let engine: Engine = engine.parse().map_err(to_py)?;
    let cfg = &config.0;
    let trace = py
        .detach(|| {
            let graph = cfg.validate()?;
            let problem = harness::prepare(cfg, &graph)?;
            let sc = cfg.sampler.to_config(cfg.seed);
            sampler::run(engine, problem.model(chain), &graph, &sc, chain).map_err(|e| e.error)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    let samples: Vec<(u64, usize, u64, Vec<f64>)> =
        trace.samples.into_iter().map(|s| (s.tick, s.agent, s.updates, s.w)).collect();
    d.set_item("samples", samples)?;
    d.set_item("consensus_error", trace.consensus_error)?;
    d.set_item("updates", trace.comm.iter().map(|c| c.active).collect::<Vec<_>>())?;
    d.set_item("broadcasts", trace.comm.iter().map(|c| c.broadcasts).collect::<Vec<_>>())?;
    Ok(d.into_any().unbind())
}

/// Consensus-bound constants for a config. `mu_g` defaults to the largest
/// squared local gradient at the chain-0 initial states.
#[pyfunction]
#[pyo3(signature = (config, mu_g = None))]
fn theory_constants(py: Python<'_>, config: &PyConfig, mu_g: Option<f64>) -> PyResult<Py<PyAny>> {
    let cfg = &config.0;
    let graph = cfg.validate().map_err(to_py)?;
    let problem = harness::prepare(cfg, &graph).map_err(to_py)?;
    let (n, d) = (graph.n(), problem.dim());
    let mu_g = mu_g.unwrap_or_else(|| analysis::estimate_mu_g(problem.model(0), &initial_samples(cfg.seed, 0, n, d)));
    let init = ((n - 1) * d) as f64;
    let t = analysis::theory_constants(&graph, &cfg.sampler.to_config(cfg.seed), d, mu_g, init).map_err(to_py)?;
    to_object(py, &t)
}

/// Step-size and fusion-weight conditions.
#[pyfunction]
fn check_conditions(
    py: Python<'_>,
    alpha: f64,
    rho_u: f64,
    l_bar: f64,
    beta: f64,
    lambda_n_minus_1: f64,
) -> PyResult<Py<PyAny>> {
    let r = analysis::check_conditions(alpha, rho_u, l_bar, beta, lambda_n_minus_1).map_err(to_py)?;
    to_object(py, &r)
}

/// Sliced 1-Wasserstein distance between two point clouds.
#[pyfunction]
#[pyo3(signature = (a, b, projections = 100, seed = 0))]
fn wasserstein_sliced(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, projections: usize, seed: u64) -> PyResult<f64> {
    analysis::wasserstein_sliced(&a, &b, projections, seed).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "gossip_ula")]
pub fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(theory_constants, m)?)?;
    m.add_function(wrap_pyfunction!(check_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_sliced, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
