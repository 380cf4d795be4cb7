//! Python module `bdi`: a thin layer over `bdi-core`.
//!
//! Inputs are plain floats and lists; results come back as complex numbers,
//! tuples or dicts. Input errors raise `ValueError`, numerical failures
//! raise `RuntimeError`.

use bdi_core::ensembles::MatrixField;
use bdi_core::kernels::{self, Kernel3Route, KernelContext};
use bdi_core::linalg::CMatrix;
use bdi_core::oracle::{self, Scheme, SuiteBudgets};
use bdi_core::pfassembly::{self, SkewMatrix};
use bdi_core::quad::QuadConfig;
use bdi_core::rng::StreamSeed;
use bdi_core::{spherical, winding, Error, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidDimension(_)
        | Error::DimensionMismatch(_)
        | Error::Domain(_)
        | Error::InvalidField(_)
        | Error::DegenerateMomenta(_)
        | Error::NotSkew(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_route(route: &str) -> Result<Kernel3Route, Error> {
    match route {
        "reduced" => Ok(Kernel3Route::Reduced),
        "alternative" => Ok(Kernel3Route::Alternative),
        other => Err(Error::Domain(format!("unknown route '{other}' (expected reduced or alternative)"))),
    }
}

/// Analytic Z_{k|k}(q, p) for the Trig field: (value, err_est, rotation).
pub fn z_analytic(q: &[f64], p: &[f64], n: usize, route: &str, rel_tol: f64) -> Result<(C64, f64, f64), Error> {
    let field = MatrixField::trig(n)?;
    let ctx = KernelContext::new(n, QuadConfig::default().with_rel_tol(rel_tol))?;
    let z = pfassembly::z_generating(&field, q, p, &ctx, parse_route(route)?)?;
    Ok((z.complex(), z.err_est, z.rotation))
}

/// Monte Carlo Z_{k|l}(q, p) for the Trig field: (mean, stderr, skipped).
pub fn z_mc(q: &[f64], p: &[f64], n: usize, samples: usize, seed: u64, scheme: &str) -> Result<(C64, f64, usize), Error> {
    let field = MatrixField::trig(n)?;
    let e = oracle::mc_ratio_estimate(&field, q, p, samples, StreamSeed::new(seed), scheme.parse::<Scheme>()?)?;
    Ok((e.value(), e.stderr, e.skipped))
}

/// Winding histogram for the Trig field: (counts by W, rejected runs).
pub fn winding_counts(n: usize, samples: usize, grid: usize, seed: u64) -> Result<(BTreeMap<i64, usize>, usize), Error> {
    let s = winding::winding_histogram(&MatrixField::trig(n)?, samples, grid, StreamSeed::new(seed))?;
    Ok((s.histogram, s.rejected))
}

/// Pfaffian of a skew-symmetric matrix given by rows.
pub fn pfaffian_rows(rows: &[Vec<C64>]) -> Result<C64, Error> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    let m = CMatrix::from_fn(d, d, |i, j| rows[i][j]);
    pfassembly::pfaffian(&SkewMatrix::new(m)?)
}

#[pyfunction]
fn xi1(a1: C64, b1: C64, a2: C64, b2: C64, n: usize) -> PyResult<C64> {
    if n < 2 {
        return Err(PyValueError::new_err("n must be at least 2"));
    }
    Ok(kernels::xi1(a1, b1, a2, b2, n))
}

#[pyfunction]
#[pyo3(signature = (q, p, n = 4, route = "reduced", rel_tol = 1e-8))]
fn z_generating(py: Python<'_>, q: Vec<f64>, p: Vec<f64>, n: usize, route: &str, rel_tol: f64) -> PyResult<Py<PyDict>> {
    let (value, err, rotation) = py.detach(|| z_analytic(&q, &p, n, route, rel_tol)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", value)?;
    d.set_item("err_est", err)?;
    d.set_item("rotation", rotation)?;
    d.set_item("route", route)?;
    Ok(d.unbind())
}

#[pyfunction]
#[pyo3(signature = (q, p, n = 4, samples = 100_000, seed = 0, scheme = "mom"))]
fn mc_ratio_estimate(
    py: Python<'_>,
    q: Vec<f64>,
    p: Vec<f64>,
    n: usize,
    samples: usize,
    seed: u64,
    scheme: &str,
) -> PyResult<Py<PyDict>> {
    let (mean, stderr, skipped) = py.detach(|| z_mc(&q, &p, n, samples, seed, scheme)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mean", mean)?;
    d.set_item("stderr", stderr)?;
    d.set_item("skipped", skipped)?;
    Ok(d.unbind())
}

#[pyfunction]
#[pyo3(signature = (n = 4, samples = 1000, grid = 256, seed = 0))]
fn winding_histogram(py: Python<'_>, n: usize, samples: usize, grid: usize, seed: u64) -> PyResult<(BTreeMap<i64, usize>, usize)> {
    py.detach(|| winding_counts(n, samples, grid, seed)).map_err(py_err)
}

/// (mean, stderr) of the number of real eigenvalues of the spherical ensemble.
#[pyfunction]
#[pyo3(signature = (n, samples = 10_000, seed = 0))]
fn real_count(py: Python<'_>, n: usize, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let s = py.detach(|| spherical::real_count_stats(n, samples, StreamSeed::new(seed))).map_err(py_err)?;
    Ok((s.mean, s.stderr))
}

#[pyfunction]
fn pfaffian(rows: Vec<Vec<C64>>) -> PyResult<C64> {
    pfaffian_rows(&rows).map_err(py_err)
}

/// Run the validation suite; returns (all_pass, report lines).
#[pyfunction]
#[pyo3(signature = (smoke = true, seed = None))]
fn validate(py: Python<'_>, smoke: bool, seed: Option<u64>) -> PyResult<(bool, Vec<String>)> {
    let mut b = if smoke { SuiteBudgets::smoke() } else { SuiteBudgets::default() };
    if let Some(s) = seed {
        b.seed = s;
    }
    let reports = py.detach(|| oracle::validate_suite(&b)).map_err(py_err)?;
    Ok((reports.iter().all(|r| r.pass), reports.iter().map(|r| r.line()).collect()))
}

#[pymodule]
fn bdi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", bdi_core::VERSION)?;
    m.add_function(wrap_pyfunction!(xi1, m)?)?;
    m.add_function(wrap_pyfunction!(z_generating, m)?)?;
    m.add_function(wrap_pyfunction!(mc_ratio_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(winding_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(real_count, m)?)?;
    m.add_function(wrap_pyfunction!(pfaffian, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
