//! Python module `weyl`: thin wrappers returning plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;
use weyl_core::estimates::{theorem1_report, EstimateOptions};
use weyl_core::spec_file::{parse_toml, ModelFile};
use weyl_core::weyl as core_weyl;
use weyl_core::{scales, verify, zoo, HamiltonianModel, WeylError, C64};

fn py_err(e: WeylError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    pythonize(py, v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A zoo name, or a TOML document with a `[model]` table.
fn resolve(model: &str) -> PyResult<HamiltonianModel> {
    if model.contains('[') {
        let f: ModelFile = parse_toml(model).map_err(py_err)?;
        f.model.build().map_err(py_err)
    } else {
        zoo::by_name(model).map_err(py_err)
    }
}

/// Names accepted wherever a model is expected.
#[pyfunction]
fn zoo_names() -> Vec<&'static str> {
    zoo::ZOO_NAMES.to_vec()
}

/// Returns `(q, error_radius)` at `z = r e^{i theta}`.
#[pyfunction]
#[pyo3(signature = (model, r, theta = std::f64::consts::FRAC_PI_2, tol = 1e-8))]
fn eval_q(py: Python<'_>, model: &str, r: f64, theta: f64, tol: f64) -> PyResult<(num_complex::Complex64, f64)> {
    let m = resolve(model)?;
    let v = py.detach(|| core_weyl::eval_q(&m, C64::from_polar(r, theta), tol)).map_err(py_err)?;
    Ok((C64::new(v.value.0, v.value.1), v.error_radius))
}

#[pyfunction]
#[pyo3(signature = (model, r, eta = scales::DEFAULT_ETA))]
fn envelopes<'py>(py: Python<'py>, model: &str, r: f64, eta: f64) -> PyResult<Bound<'py, PyAny>> {
    let m = resolve(model)?;
    let e = scales::envelopes(&m, r, eta).map_err(py_err)?;
    to_py(py, &e)
}

/// Estimate records over the given radii.
#[pyfunction]
fn theorem1<'py>(py: Python<'py>, model: &str, radii: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let m = resolve(model)?;
    let recs = py.detach(|| theorem1_report(&m, &radii, &EstimateOptions::default())).map_err(py_err)?;
    to_py(py, &recs)
}

/// `(name, passed, margin)` of one check.
type CheckTuple = (String, bool, f64);

/// Runs one acceptance criterion; returns `(passed, [(name, pass, margin), ...])`.
#[pyfunction]
fn verify_criterion(py: Python<'_>, id: u32) -> PyResult<(bool, Vec<CheckTuple>)> {
    let rep = py.detach(|| verify::run_criterion(id)).map_err(py_err)?;
    Ok((rep.pass(), rep.checks.iter().map(|c| (c.name.clone(), c.pass, c.margin)).collect()))
}

#[pymodule]
pub fn weyl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(zoo_names, m)?)?;
    m.add_function(wrap_pyfunction!(eval_q, m)?)?;
    m.add_function(wrap_pyfunction!(envelopes, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(verify_criterion, m)?)?;
    Ok(())
}
