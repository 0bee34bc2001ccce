//! Python bindings: `import pyfracdelay`.

use fracdelay::laplace::{self, ImpulseTrace, InversionOptions};
use fracdelay::rational::{self, IntPoly};
use fracdelay::{self as core, IntegrationOptions, ParamBinding};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Normalized characteristic function.
#[pyclass(name = "CharFn", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCharFn {
    inner: core::CharFn,
    derivative: core::DerivedFn,
}

impl PyCharFn {
    fn wrap(inner: core::CharFn) -> Self {
        let derivative = core::differentiate(&inner);
        PyCharFn { inner, derivative }
    }
}

#[pymethods]
impl PyCharFn {
    #[new]
    #[pyo3(signature = (expression, params = None))]
    fn new(expression: &str, params: Option<ParamBinding>) -> PyResult<Self> {
        let parsed = core::parse(expression).map_err(value_error)?;
        let cf =
            core::bind_and_normalize(&parsed, &params.unwrap_or_default()).map_err(value_error)?;
        Ok(PyCharFn::wrap(cf))
    }

    #[getter]
    fn alpha_n(&self) -> f64 {
        self.inner.alpha_n()
    }

    #[getter]
    fn has_delays(&self) -> bool {
        self.inner.has_delays()
    }

    /// Δ(s).
    fn evaluate(&self, s: Complex64) -> PyResult<Complex64> {
        self.inner.evaluate(s).map_err(value_error)
    }

    /// Δ′(s).
    fn derivative(&self, s: Complex64) -> PyResult<Complex64> {
        self.derivative.evaluate(s).map_err(value_error)
    }

    /// Canonical text of Δ′.
    fn derivative_text(&self) -> String {
        self.derivative.to_string()
    }

    /// Re{Δ′(iω)/Δ(iω)}.
    fn integrand(&self, omega: f64) -> PyResult<f64> {
        core::integrand(&self.inner, &self.derivative, omega).map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("CharFn('{}')", self.inner)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyclass(name = "StabilityReport", frozen, get_all)]
struct PyReport {
    alpha_n: f64,
    m_raw: f64,
    m_rounded: u32,
    residual: f64,
    verdict: String,
    unstable_roots: Option<u32>,
    integral_value: f64,
    integral_error_estimate: f64,
    omega_used: f64,
    doublings: u32,
    warnings: Vec<String>,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "StabilityReport(verdict={}, m_raw={}, residual={:e})",
            self.verdict, self.m_raw, self.residual
        )
    }
}

/// Parses and normalizes an expression, returning its canonical text.
#[pyfunction]
#[pyo3(signature = (expression, params = None))]
fn normalize(expression: &str, params: Option<ParamBinding>) -> PyResult<String> {
    Ok(PyCharFn::new(expression, params)?.inner.to_string())
}

/// Free parameter names of an expression.
#[pyfunction]
fn parameters(expression: &str) -> PyResult<Vec<String>> {
    Ok(core::parse(expression)
        .map_err(value_error)?
        .params
        .into_iter()
        .collect())
}

#[pyfunction]
#[pyo3(signature = (
    charfn, *, eps = None, omega_max = None, abs_tol = None, rel_tol = None,
    max_doublings = None, residual_warn = None
))]
#[allow(clippy::too_many_arguments)]
fn count_unstable(
    charfn: &PyCharFn,
    eps: Option<f64>,
    omega_max: Option<f64>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_doublings: Option<u32>,
    residual_warn: Option<f64>,
) -> PyResult<PyReport> {
    let d = IntegrationOptions::default();
    let opts = IntegrationOptions {
        eps: eps.unwrap_or(d.eps),
        omega_max: omega_max.unwrap_or(d.omega_max),
        abs_tol: abs_tol.unwrap_or(d.abs_tol),
        rel_tol: rel_tol.unwrap_or(d.rel_tol),
        max_doublings: max_doublings.unwrap_or(d.max_doublings),
        residual_warn: residual_warn.unwrap_or(d.residual_warn),
        ..d
    };
    let r = core::count_unstable(&charfn.inner, &opts).map_err(value_error)?;
    Ok(PyReport {
        alpha_n: r.alpha_n,
        m_raw: r.m_raw,
        m_rounded: r.m_rounded,
        residual: r.residual,
        verdict: r.verdict.to_string(),
        unstable_roots: match r.verdict {
            core::Verdict::Stable => Some(0),
            core::Verdict::Unstable(n) => Some(n),
            core::Verdict::Indeterminate => None,
        },
        integral_value: r.integral_value,
        integral_error_estimate: r.integral_error_estimate,
        omega_used: r.omega_used,
        doublings: r.doublings,
        warnings: r.warnings,
    })
}

/// Impulse response of 1/Δ(s); returns `(times, values)` with `None` for
/// failed samples.
#[pyfunction]
#[pyo3(signature = (charfn, t_max, points = 200, *, shift = 6.0, series_len = 20, euler_depth = 19))]
fn impulse_response(
    py: Python<'_>,
    charfn: &PyCharFn,
    t_max: f64,
    points: usize,
    shift: f64,
    series_len: usize,
    euler_depth: usize,
) -> PyResult<(Vec<f64>, Vec<Option<f64>>)> {
    let opts = InversionOptions {
        shift,
        series_len,
        euler_depth,
    };
    let cf = charfn.inner.clone();
    let trace = py
        .detach(move || laplace::impulse_response(&cf, t_max, points, &opts))
        .map_err(value_error)?;
    Ok((trace.times, trace.values))
}

/// "Decaying", "Growing" or "Inconclusive" for a sampled trace.
#[pyfunction]
fn decay_check(values: Vec<Option<f64>>) -> PyResult<String> {
    let trace = ImpulseTrace {
        times: (1..=values.len()).map(|k| k as f64).collect(),
        values,
    };
    Ok(laplace::decay_check(&trace)
        .map_err(value_error)?
        .to_string())
}

/// Number of roots with Re > margin of the polynomial with ascending
/// coefficients `coeffs`.
#[pyfunction]
#[pyo3(signature = (coeffs, margin = 0.0))]
fn count_rhp(coeffs: Vec<f64>, margin: f64) -> PyResult<usize> {
    let p = IntPoly::new(coeffs).map_err(value_error)?;
    rational::count_rhp(&p, margin).map_err(value_error)
}

/// Roots of the polynomial with ascending coefficients `coeffs`.
#[pyfunction]
fn poly_roots(coeffs: Vec<f64>) -> PyResult<Vec<Complex64>> {
    let p = IntPoly::new(coeffs).map_err(value_error)?;
    rational::roots(&p).map_err(value_error)
}

#[pymodule]
fn pyfracdelay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCharFn>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(parameters, m)?)?;
    m.add_function(wrap_pyfunction!(count_unstable, m)?)?;
    m.add_function(wrap_pyfunction!(impulse_response, m)?)?;
    m.add_function(wrap_pyfunction!(decay_check, m)?)?;
    m.add_function(wrap_pyfunction!(count_rhp, m)?)?;
    m.add_function(wrap_pyfunction!(poly_roots, m)?)?;
    Ok(())
}
