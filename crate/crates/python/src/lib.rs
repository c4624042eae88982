//! Python bindings for the sum-rule library.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sumrule_core::analysis_fit;
use sumrule_core::rr_spectrum;
use sumrule_core::sum_rules;
use sumrule_core::zero_mode_pt;
use sumrule_core::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Domain { .. } | Error::InvalidDensity { .. } => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Mass density `1 + lambda * sigma(x)` on `[-1/2, 1/2]`, with polynomial
/// `sigma` given by ascending coefficients.
#[pyclass(name = "DensityModel", module = "sumrule", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensityModel(sumrule_core::DensityModel);

#[pymethods]
impl PyDensityModel {
    #[new]
    #[pyo3(signature = (sigma_coeffs, lam = 1.0))]
    fn new(sigma_coeffs: Vec<f64>, lam: f64) -> PyResult<Self> {
        sumrule_core::DensityModel::new(lam, sigma_coeffs)
            .map(Self)
            .map_err(to_py)
    }

    /// `1 + kappa * x`.
    #[staticmethod]
    fn linear(kappa: f64) -> PyResult<Self> {
        sumrule_core::DensityModel::linear(kappa)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn homogeneous() -> Self {
        Self(sumrule_core::DensityModel::homogeneous())
    }

    #[getter]
    fn kappa(&self) -> Option<f64> {
        self.0.kappa()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn __repr__(&self) -> String {
        format!(
            "DensityModel(lambda={}, sigma={:?})",
            self.0.lambda(),
            self.0.sigma().coeffs()
        )
    }
}

/// A sum-rule value split by order in the density.
#[pyclass(name = "SumRuleResult", module = "sumrule", frozen)]
struct PySumRuleResult(sum_rules::SumRuleResult);

#[pymethods]
impl PySumRuleResult {
    #[getter]
    fn s(&self) -> f64 {
        self.0.s
    }

    #[getter]
    fn total(&self) -> f64 {
        self.0.total
    }

    #[getter]
    fn value_by_order(&self) -> [f64; 3] {
        self.0.value_by_order
    }

    #[getter]
    fn tail_estimate(&self) -> f64 {
        self.0.tail_estimate
    }

    #[getter]
    fn truncation(&self) -> usize {
        self.0.truncation
    }

    #[getter]
    fn n_max(&self) -> Option<usize> {
        self.0.n_max
    }

    #[getter]
    fn route(&self) -> &'static str {
        self.0.route.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "SumRuleResult(s={}, total={:.17e}, route={}, tail_estimate={:.3e})",
            self.0.s,
            self.0.total,
            self.0.route.as_str(),
            self.0.tail_estimate
        )
    }
}

/// Renormalized second-order sum rule `Z(s)` for `1 < s <= 3/2`.
#[pyfunction]
#[pyo3(signature = (s, density, interior_modes = 2000))]
fn z_tilde(s: f64, density: &PyDensityModel, interior_modes: usize) -> PyResult<PySumRuleResult> {
    sum_rules::z_tilde(s, &density.0, interior_modes)
        .map(PySumRuleResult)
        .map_err(to_py)
}

/// The exact order-one sum rule.
#[pyfunction]
fn z1_exact(density: &PyDensityModel) -> PySumRuleResult {
    PySumRuleResult(sum_rules::z1_exact(&density.0))
}

/// Sum rule from a Rayleigh-Ritz spectrum plus asymptotic tail.
#[pyfunction]
#[pyo3(signature = (s, kappa, n_max = 200, basis_size = 2001))]
fn z_numerical(
    py: Python<'_>,
    s: f64,
    kappa: f64,
    n_max: usize,
    basis_size: usize,
) -> PyResult<PySumRuleResult> {
    py.detach(|| rr_spectrum::z_numerical(s, kappa, n_max, basis_size))
        .map(PySumRuleResult)
        .map_err(to_py)
}

/// Ascending Rayleigh-Ritz eigenvalues, the zero mode first.
#[pyfunction]
#[pyo3(signature = (density, basis_size = 2001))]
fn spectrum(py: Python<'_>, density: &PyDensityModel, basis_size: usize) -> PyResult<Vec<f64>> {
    let density = density.0.clone();
    py.detach(|| rr_spectrum::solve(&density, basis_size))
        .map(|s| s.eigenvalues)
        .map_err(to_py)
}

/// Zero-mode energy coefficients `[E0(1), E0(2), ...]` up to `max_order`.
#[pyfunction]
#[pyo3(signature = (density, max_order = 4))]
fn e0_series(density: &PyDensityModel, max_order: usize) -> PyResult<Vec<f64>> {
    zero_mode_pt::e0_series(&density.0, max_order)
        .map(|series| series.energies)
        .map_err(to_py)
}

/// Least-squares polynomial fit; returns `(coefficients, residual_norm)`.
#[pyfunction]
fn polyfit(xs: Vec<f64>, ys: Vec<f64>, degree: usize) -> PyResult<(Vec<f64>, f64)> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    let samples: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    analysis_fit::polyfit(&samples, degree)
        .map(|fit| (fit.coefficients, fit.residual_norm))
        .map_err(to_py)
}

/// `(c0, c2, D, D_tail_bound)` of `Z(3/2) = c0 + c2 kappa^2 + O(kappa^4)`.
#[pyfunction]
#[pyo3(signature = (truncation = 4000))]
fn z32_constants(py: Python<'_>, truncation: usize) -> PyResult<(f64, f64, f64, f64)> {
    py.detach(|| analysis_fit::z32_constants(truncation))
        .map(|c| (c.c0, c.c2, c.d, c.d_tail_bound))
        .map_err(to_py)
}

#[pymodule]
fn sumrule(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDensityModel>()?;
    m.add_class::<PySumRuleResult>()?;
    m.add_function(wrap_pyfunction!(z_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(z1_exact, m)?)?;
    m.add_function(wrap_pyfunction!(z_numerical, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(e0_series, m)?)?;
    m.add_function(wrap_pyfunction!(polyfit, m)?)?;
    m.add_function(wrap_pyfunction!(z32_constants, m)?)?;
    Ok(())
}
