//! Python bindings for `jitterpart`. Regions use the command-line grammar:
//! `uniform`, `halfplane:a,b,c`, `quarterdisk:r`, `polyline:x0,y0;x1,y1;...`
//! or `curvefile:PATH`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use jitterpart::cli::parse_region;
use jitterpart::discrepancy;
use jitterpart::integral_equation::{self, ResidualContext};
use jitterpart::mc_oracle;
use jitterpart::regions::{Point, Region};
use jitterpart::solver::{self, SolverConfig};

fn py_err(e: jitterpart::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn region(spec: &str) -> PyResult<Region> {
    parse_region(spec).map_err(py_err)
}

/// Measure of the region, or None for `uniform`.
#[pyfunction]
fn region_area(spec: &str) -> PyResult<Option<f64>> {
    Ok(region(spec)?.area())
}

/// Expected squared L2 discrepancy of the jittered two-point sample.
#[pyfunction]
#[pyo3(signature = (spec, tol = discrepancy::DEFAULT_TOL, route = "general"))]
fn expected_l2sq(py: Python<'_>, spec: &str, tol: f64, route: &str) -> PyResult<f64> {
    let r = region(spec)?;
    let result = py.detach(|| match route {
        "general" => discrepancy::expected_l2sq(&r, tol),
        "reformulated" => discrepancy::expected_l2sq_reformulated(&r, tol),
        other => Err(jitterpart::Error::InvalidParameter(format!("unknown route {other:?}"))),
    });
    Ok(result.map_err(py_err)?.value)
}

/// Exact squared L2 star discrepancy of the point set `{a, b}`.
#[pyfunction]
fn l2sq_two_points(a: (f64, f64), b: (f64, f64)) -> f64 {
    discrepancy::l2sq_two_points(Point::new(a.0, a.1), Point::new(b.0, b.1))
}

/// Optimality residual of the polynomial `sum c_i x^i` at `x`.
#[pyfunction]
fn residual(x: f64, coefficients: Vec<f64>, alpha: f64, p: f64) -> PyResult<f64> {
    let ctx = ResidualContext::new(coefficients, alpha, p).map_err(py_err)?;
    integral_equation::residual(x, &ctx).map_err(py_err)
}

/// Solve for the optimal boundary enclosing area `p`; returns a dict.
#[pyfunction]
#[pyo3(signature = (p, degree = 10, samples = 201))]
fn solve_for_p<'py>(py: Python<'py>, p: f64, degree: usize, samples: usize) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SolverConfig {
        degree,
        ..SolverConfig::default()
    };
    let o = py.detach(|| solver::solve_for_p(p, &cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p_target", o.p_target)?;
    d.set_item("p_achieved", o.p_achieved)?;
    d.set_item("alpha", o.alpha)?;
    d.set_item("discrepancy", o.discrepancy.value)?;
    d.set_item("residual_rms", o.residual_rms)?;
    d.set_item("converged", o.converged)?;
    d.set_item("iterations", o.iterations)?;
    d.set_item("x0", o.curve.x0)?;
    d.set_item("x_max", o.curve.x_max)?;
    d.set_item("y_max", o.curve.y_max)?;
    d.set_item("coefficients", o.curve.base.coefficients.clone())?;
    d.set_item("curve", o.curve.samples(samples.max(2) - 1))?;
    Ok(d)
}

/// Seeded Monte Carlo estimate; returns `(mean, std_error)`.
#[pyfunction]
#[pyo3(signature = (spec, n_samples = 1_000_000, seed = 0, shards = 1))]
fn mc_estimate(py: Python<'_>, spec: &str, n_samples: u64, seed: u64, shards: usize) -> PyResult<(f64, f64)> {
    let r = region(spec)?;
    let m = py
        .detach(|| mc_oracle::estimate_sharded(&r, n_samples, seed, shards))
        .map_err(py_err)?;
    Ok((m.mean, m.std_error))
}

#[pymodule]
fn pyjitterpart(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(region_area, m)?)?;
    m.add_function(wrap_pyfunction!(expected_l2sq, m)?)?;
    m.add_function(wrap_pyfunction!(l2sq_two_points, m)?)?;
    m.add_function(wrap_pyfunction!(residual, m)?)?;
    m.add_function(wrap_pyfunction!(solve_for_p, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    Ok(())
}
