use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

use gossip_ula_py::py_module;

/// Runs `code` with the bindings imported as `g`.
fn run(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "gossip_ula")?;
        py_module(&m)?;
        let globals = PyDict::new(py);
        globals.set_item("g", m)?;
        py.run(&CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn graph_probabilities() {
    run(r#"
ring = g.Graph.ring(6)
assert abs(sum(ring.activation_probabilities()) - 2.0) < 1e-12
assert abs(sum(ring.edge_probabilities()) - 1.0) < 1e-12
assert ring.n == 6 and len(ring.edges) == 6
star = g.Graph.star(5)
assert star.degree(0) == 4
lam = star.lambda_contraction(0.3)
assert 0.0 < lam < 1.0
assert abs(lam - (1 - 2 * 0.3 * 0.7 * star.lambda_n_minus_1())) < 1e-12
"#)
    .unwrap();
}

#[test]
fn errors_map_to_python_exceptions() {
    run(r#"
try:
    g.Graph.from_edges(4, [(0, 1), (2, 3)])
    raise AssertionError("accepted a disconnected graph")
except ValueError as e:
    assert "disconnected" in str(e)
cfg = g.Config.gm_preset()
cfg.beta = 1.5
try:
    cfg.validate()
    raise AssertionError("accepted beta = 1.5")
except ValueError:
    pass
try:
    cfg.engines = ["gossip-et", "nope"]
    raise AssertionError("accepted an unknown engine")
except ValueError:
    pass
try:
    g.report("/nonexistent/run")
    raise AssertionError("report without a manifest")
except FileNotFoundError:
    pass
"#)
    .unwrap();
}

#[test]
fn config_round_trip_and_chain() {
    run(r#"
cfg = g.Config.gm_preset()
cfg.ticks = 500
cfg.seed = 9
assert g.Config.from_toml(cfg.to_toml()).to_dict() == cfg.to_dict()
a = g.run_chain(cfg, "gossip-et")
b = g.run_chain(cfg, "gossip-et")
assert a == b
assert sum(a["updates"]) == 1000
assert all(x <= y for x, y in zip(a["broadcasts"], a["updates"]))
c = g.run_chain(cfg, "centralized")
assert len(c["samples"]) > 0
"#)
    .unwrap();
}

#[test]
fn analysis_helpers() {
    run(r#"
t = g.theory_constants(g.Config.gm_preset(), mu_g=4.0)
assert t["y1"] > 0 and t["y2"] >= 0 and t["y3"] > 0
r = g.check_conditions(1e-3, 1.0, 2.0, 0.4, g.Graph.ring(5).lambda_n_minus_1())
assert r["cond2"] and r["margin2"] < 0
a = [[0.0, 0.0], [2.0, 0.0]]
b = [[1.0, 0.0], [3.0, 0.0]]
assert g.wasserstein_sliced(a, a) == 0.0
assert 0.0 < g.wasserstein_sliced(a, b, 50, 3) <= 1.0 + 1e-12
"#)
    .unwrap();
}
