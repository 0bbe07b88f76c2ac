//! Python bindings: solve a system, measure its zero cycle, compute eta.
//!
//! Systems are passed as text (`"x1^2 - x2; x2^3 - 1"`) or as the JSON
//! document accepted by the command line tool.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use torus_equidist::cycles::{angle_discrepancy as dang, radius_discrepancy as drad};
use torus_equidist::et_bounds;
use torus_equidist::laurent::SystemSpec;
use torus_equidist::solver::{zero_cycle, ZeroCycle};
use torus_equidist::{window, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::UnsupportedDimension { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse(system: &str) -> PyResult<SystemSpec> {
    let s = system.trim_start();
    if s.starts_with('{') { SystemSpec::from_json_str(s) } else { SystemSpec::parse(s) }.map_err(to_py)
}

fn cycle_of(points: Vec<Vec<Complex64>>) -> PyResult<ZeroCycle> {
    let n = points.first().map_or(1, Vec::len);
    ZeroCycle::from_points(n, points).map_err(to_py)
}

/// Roots of the system, one list of coordinates per root (with multiplicity).
#[pyfunction]
fn solve(py: Python<'_>, system: &str) -> PyResult<Vec<Vec<Complex64>>> {
    let s = parse(system)?;
    let z = py.detach(|| zero_cycle(&s)).map_err(to_py)?;
    Ok(z.points.iter().flat_map(|p| std::iter::repeat_n(p.z.clone(), p.m as usize)).collect())
}

#[pyfunction]
fn mixed_volume(system: &str) -> PyResult<u64> {
    parse(system)?.mixed_volume().map_err(to_py)
}

#[pyfunction]
fn angle_discrepancy(points: Vec<Vec<Complex64>>) -> PyResult<f64> {
    Ok(dang(&cycle_of(points)?).map_err(to_py)?.value)
}

#[pyfunction]
fn radius_discrepancy(points: Vec<Vec<Complex64>>, eps: f64) -> PyResult<f64> {
    drad(&cycle_of(points)?, eps).map_err(to_py)
}

/// `(lower, upper)` enclosure of eta.
#[pyfunction]
fn eta(py: Python<'_>, system: &str) -> PyResult<(f64, f64)> {
    let s = parse(system)?;
    let e = py.detach(|| et_bounds::eta(&s)).map_err(to_py)?;
    Ok((e.eta_interval.lower, e.eta_interval.upper))
}

/// `(name, value, expected, pass)` rows of the window self-check.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn window_check(seed: u64) -> Vec<(String, f64, f64, bool)> {
    window::window_check(seed).into_iter().map(|r| (r.name, r.value, r.expected, r.pass)).collect()
}

#[pymodule]
pub fn torus_equidist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_volume, m)?)?;
    m.add_function(wrap_pyfunction!(angle_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(radius_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(window_check, m)?)?;
    Ok(())
}
