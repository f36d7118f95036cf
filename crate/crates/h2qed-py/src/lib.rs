//! Python bindings: parse a TOML config, evolve it, and hand back the
//! recorded time series as plain dictionaries.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use h2qed_core::config::parse_config;
use h2qed_core::hilbert::{Cutoffs, StateSpace};
use h2qed_core::model::Stabilization;
use h2qed_core::scenario::{prepare, run_cell};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Dimension of the truncated basis at the given photon cutoffs.
#[pyfunction]
#[pyo3(signature = (cutoff_p12 = 2, cutoff_p01 = 1))]
fn space_dimension(cutoff_p12: u8, cutoff_p01: u8) -> usize {
    StateSpace::build(Cutoffs {
        p12: cutoff_p12,
        p01: cutoff_p01,
    })
    .dim()
}

/// Parse a config document and return every resolved setting as strings,
/// exactly as the `validate` CLI subcommand prints them.
#[pyfunction]
fn resolved_settings(py: Python<'_>, config: &str) -> PyResult<Py<PyDict>> {
    let cfg = parse_config(config).map_err(value_err)?;
    let dict = PyDict::new_bound(py);
    for line in cfg.resolved_lines() {
        if let Some((key, value)) = line.split_once(" = ") {
            dict.set_item(key, value)?;
        }
    }
    Ok(dict.into())
}

/// Run a single scenario from a TOML config string.
///
/// Returns a dict with `times`, per-subspace probability lists under
/// `probabilities`, the `trace` column, `final` probabilities, `t_stb`
/// (None when stabilization was never reached), and the basis dimensions.
#[pyfunction]
fn run_toml(py: Python<'_>, config: &str) -> PyResult<Py<PyDict>> {
    let cfg = parse_config(config).map_err(value_err)?;
    let prep = prepare(&cfg).map_err(value_err)?;
    let outcome = run_cell(&cfg, &prep, &cfg.rates).map_err(value_err)?;
    let series = &outcome.series;

    let result = PyDict::new_bound(py);
    result.set_item("times", series.times.clone())?;
    let probs = PyDict::new_bound(py);
    let finals = PyDict::new_bound(py);
    for (c, name) in series.class_names.iter().enumerate() {
        probs.set_item(name, series.probs[c].clone())?;
        finals.set_item(name, outcome.summary.final_probs[c])?;
    }
    result.set_item("probabilities", probs)?;
    result.set_item("final", finals)?;
    result.set_item("trace", series.trace.clone())?;
    result.set_item(
        "t_stb",
        match outcome.summary.stabilization {
            Stabilization::Reached { t_stb, .. } => Some(t_stb),
            Stabilization::NotReached => None,
        },
    )?;
    result.set_item("trace_defect", outcome.summary.trace_defect)?;
    result.set_item("stopped_early", series.stopped_early)?;
    result.set_item("basis_dimension", prep.space.dim())?;
    result.set_item("basis_dimension_unpruned", prep.full_dim)?;
    Ok(result.into())
}

#[pymodule]
fn h2qed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(space_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(resolved_settings, m)?)?;
    m.add_function(wrap_pyfunction!(run_toml, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
