//! Python bindings: kernels, house-moving densities, path samplers and the
//! validation suites.

use ::bessel_house as core_lib;
use core_lib::housemoving::HouseMovingModel;
use core_lib::kernels::{self, ProcessParams, SeriesPolicy};
use core_lib::sampler::{self, BridgeMethod, ConditionedOptions, HousePathSampler, SamplePath};
use core_lib::specfun;
use core_lib::validate::{self, SuiteConfig};
use core_lib::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(bessel_house, NumericalError, PyRuntimeError, "A series, quadrature or sampler failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Order { .. } | Error::UnknownSuite(_) => PyValueError::new_err(e.to_string()),
        _ => NumericalError::new_err(e.to_string()),
    }
}

/// Truncation rules of the Fourier-Bessel series.
#[pyclass(name = "SeriesPolicy", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySeriesPolicy(SeriesPolicy);

#[pymethods]
impl PySeriesPolicy {
    #[new]
    #[pyo3(signature = (rel_tol=1e-12, n_min=8, n_max=20_000, tau_floor=1e-6))]
    fn new(rel_tol: f64, n_min: usize, n_max: usize, tau_floor: f64) -> PyResult<Self> {
        let p = SeriesPolicy { rel_tol, n_min, n_max, tau_floor };
        p.validate().map_err(to_py)?;
        Ok(PySeriesPolicy(p))
    }

    #[getter]
    fn rel_tol(&self) -> f64 {
        self.0.rel_tol
    }

    #[getter]
    fn n_min(&self) -> usize {
        self.0.n_min
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.0.n_max
    }

    #[getter]
    fn tau_floor(&self) -> f64 {
        self.0.tau_floor
    }

    fn __repr__(&self) -> String {
        let p = self.0;
        format!("SeriesPolicy(rel_tol={}, n_min={}, n_max={}, tau_floor={})", p.rel_tol, p.n_min, p.n_max, p.tau_floor)
    }
}

fn policy(p: Option<PySeriesPolicy>) -> SeriesPolicy {
    p.map(|p| p.0).unwrap_or_default()
}

fn order(delta: f64) -> PyResult<ProcessParams> {
    ProcessParams::with_delta(delta).map_err(to_py)
}

/// The house-moving process H from a to b in dimension delta.
#[pyclass(name = "HouseMovingModel", frozen)]
struct PyHouseMovingModel(HouseMovingModel);

#[pymethods]
impl PyHouseMovingModel {
    #[new]
    #[pyo3(signature = (delta, a, b, policy=None))]
    fn new(delta: f64, a: f64, b: f64, policy: Option<PySeriesPolicy>) -> PyResult<Self> {
        let p = ProcessParams::new(delta, a, b).map_err(to_py)?;
        Ok(PyHouseMovingModel(HouseMovingModel::new(p, self::policy(policy)).map_err(to_py)?))
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.params().delta()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.params().a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.params().b()
    }

    /// Density of H(t) at y.
    fn marginal_density(&self, t: f64, y: f64) -> PyResult<f64> {
        Ok(self.0.marginal_density(t, y).map_err(to_py)?.value)
    }

    fn transition_density(&self, s: f64, x: f64, t: f64, y: f64) -> PyResult<f64> {
        Ok(self.0.transition_density(s, x, t, y).map_err(to_py)?.value)
    }

    fn transition_density_via_hitting(&self, s: f64, x: f64, t: f64, y: f64) -> PyResult<f64> {
        self.0.transition_density_via_hitting(s, x, t, y).map_err(to_py)
    }

    /// P(max of H on [0,t] <= x_bar, H(t) <= z).
    fn joint_max_cdf(&self, t: f64, x_bar: f64, z: f64) -> PyResult<f64> {
        Ok(self.0.joint_max_cdf(t, x_bar, z).map_err(to_py)?.value)
    }

    #[pyo3(signature = (t, w_t, below=true))]
    fn rn_density(&self, t: f64, w_t: f64, below: bool) -> PyResult<f64> {
        self.0.rn_density(t, w_t, below).map_err(to_py)
    }

    fn mean(&self, t: f64) -> PyResult<f64> {
        Ok(self.0.mean_curve(&[t]).map_err(to_py)?[0].1)
    }

    /// Returns (y_grid, values, mass).
    #[pyo3(signature = (t, grid=512))]
    fn density_curve(&self, t: f64, grid: usize) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        let c = self.0.density_curve(t, grid).map_err(to_py)?;
        Ok((c.y_grid, c.values, c.mass))
    }

    fn conditioned_bridge_density(&self, eta: f64, t: f64, y: f64) -> PyResult<f64> {
        self.0.conditioned_bridge_density(eta, t, y).map_err(to_py)
    }

    /// `paths` house-moving paths on `steps` uniform steps; returns
    /// (times, list of value lists).
    #[pyo3(signature = (paths, steps, seed=42))]
    fn sample(&self, py: Python<'_>, paths: usize, steps: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let out =
            py.detach(|| HousePathSampler::new(&self.0, steps).and_then(|s| s.sample_paths(seed, 0..paths as u64)));
        Ok(unzip(out.map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        let p = self.0.params();
        format!("HouseMovingModel(delta={}, a={}, b={})", p.delta(), p.a(), p.b())
    }
}

fn unzip(paths: Vec<SamplePath>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let times = paths.first().map(|p| p.times.clone()).unwrap_or_default();
    (times, paths.into_iter().map(|p| p.values).collect())
}

/// Probability that the Bessel bridge from x to y over time tau stays below c.
#[pyfunction]
#[pyo3(signature = (delta, c, tau, x, y, policy=None))]
fn max_dist_bridge(delta: f64, c: f64, tau: f64, x: f64, y: f64, policy: Option<PySeriesPolicy>) -> PyResult<f64> {
    Ok(kernels::max_dist_bridge(&order(delta)?, c, tau, x, y, &self::policy(policy)).map_err(to_py)?.value)
}

/// Sub-barrier transition kernel q1 below level c.
#[pyfunction]
#[pyo3(signature = (delta, c, s, x, t, y, policy=None))]
fn q1(delta: f64, c: f64, s: f64, x: f64, t: f64, y: f64, policy: Option<PySeriesPolicy>) -> PyResult<f64> {
    Ok(kernels::q1(&order(delta)?, c, s, x, t, y, &self::policy(policy)).map_err(to_py)?.value)
}

/// Barrier derivative q2, twice the hitting density of b from y.
#[pyfunction]
#[pyo3(signature = (delta, b, tau, y, policy=None))]
fn q2(delta: f64, b: f64, tau: f64, y: f64, policy: Option<PySeriesPolicy>) -> PyResult<f64> {
    Ok(kernels::q2(&order(delta)?, b, tau, y, &self::policy(policy)).map_err(to_py)?.value)
}

/// Density at t of the first time BES(delta) from a reaches b.
#[pyfunction]
#[pyo3(signature = (delta, a, b, t, policy=None))]
fn hitting_density(delta: f64, a: f64, b: f64, t: f64, policy: Option<PySeriesPolicy>) -> PyResult<f64> {
    let p = ProcessParams::new(delta, a, b).map_err(to_py)?;
    Ok(kernels::hitting_density(&p, t, &self::policy(policy)).map_err(to_py)?.value)
}

#[pyfunction]
#[pyo3(signature = (delta, a, b, t, policy=None))]
fn hitting_cdf(delta: f64, a: f64, b: f64, t: f64, policy: Option<PySeriesPolicy>) -> PyResult<f64> {
    let p = ProcessParams::new(delta, a, b).map_err(to_py)?;
    Ok(kernels::kent_hitting_cdf(&p, t, &self::policy(policy)).map_err(to_py)?.value)
}

#[pyfunction]
fn bessel_j(nu: f64, z: f64) -> PyResult<f64> {
    specfun::bessel_j(nu, z).map_err(to_py)
}

/// First n positive zeros of J_nu.
#[pyfunction]
fn bessel_j_zeros(nu: f64, n: usize) -> PyResult<Vec<f64>> {
    Ok(specfun::zero_table(nu, n).map_err(to_py)?.zeros()[..n].to_vec())
}

fn bridge_method(name: &str) -> PyResult<BridgeMethod> {
    match name {
        "auto" => Ok(BridgeMethod::Auto),
        "inverse_cdf" => Ok(BridgeMethod::InverseCdf),
        "brownian_norm" => Ok(BridgeMethod::BrownianNorm),
        _ => Err(PyValueError::new_err(format!("unknown bridge method {name:?}"))),
    }
}

/// Exact BES(delta) skeletons from a on a uniform grid over [0, horizon].
#[pyfunction]
#[pyo3(signature = (delta, a, paths, steps, horizon=1.0, seed=42))]
fn sample_bessel_paths(
    py: Python<'_>,
    delta: f64,
    a: f64,
    paths: usize,
    steps: usize,
    horizon: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = ProcessParams::new(delta, a, a + 1.0).map_err(to_py)?;
    let grid = sampler::uniform_grid(steps, horizon);
    let out = py.detach(|| sampler::ensemble(seed, paths, |s| sampler::sample_bessel_path(&p, &grid, s)));
    Ok(unzip(out.map_err(to_py)?))
}

/// Bessel bridges from a to b on [0,1], optionally kept only below b + eta.
/// Returns (times, values, attempts).
#[pyfunction]
#[pyo3(signature = (delta, a, b, paths, steps, eta=None, method="auto", crossing_correction=false, seed=42))]
#[allow(clippy::too_many_arguments)]
fn sample_bridges(
    py: Python<'_>,
    delta: f64,
    a: f64,
    b: f64,
    paths: usize,
    steps: usize,
    eta: Option<f64>,
    method: &str,
    crossing_correction: bool,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let p = ProcessParams::new(delta, a, b).map_err(to_py)?;
    let method = bridge_method(method)?;
    let grid = sampler::uniform_grid(steps, 1.0);
    let out = py.detach(|| match eta {
        Some(eta) => {
            let opts = ConditionedOptions { method, crossing_correction, ..Default::default() };
            sampler::ensemble(seed, paths, |s| sampler::sample_conditioned_bridge(&p, eta, &grid, &opts, s))
        }
        None => sampler::ensemble(seed, paths, |s| sampler::sample_bessel_bridge(&p, b, &grid, method, s)),
    });
    let out = out.map_err(to_py)?;
    let attempts = out.iter().map(|p| p.meta.attempts.unwrap_or(1)).sum();
    let (times, values) = unzip(out);
    Ok((times, values, attempts))
}

/// Names of the validation suites.
#[pyfunction]
fn suites() -> Vec<&'static str> {
    validate::SUITES.to_vec()
}

/// Runs a validation suite; returns its report as JSON.
#[pyfunction]
#[pyo3(signature = (name, seed=42, paths=None, delta=None, timings=false))]
fn run_suite(
    py: Python<'_>,
    name: &str,
    seed: u64,
    paths: Option<usize>,
    delta: Option<f64>,
    timings: bool,
) -> PyResult<String> {
    let cfg = SuiteConfig { seed, paths, delta, timings, ..Default::default() };
    let report = py.detach(|| validate::run_suite(name, &cfg)).map_err(to_py)?;
    Ok(report.to_json())
}

#[pymodule]
fn bessel_house(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PySeriesPolicy>()?;
    m.add_class::<PyHouseMovingModel>()?;
    m.add_function(wrap_pyfunction!(max_dist_bridge, m)?)?;
    m.add_function(wrap_pyfunction!(q1, m)?)?;
    m.add_function(wrap_pyfunction!(q2, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_density, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bessel_paths, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bridges, m)?)?;
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
