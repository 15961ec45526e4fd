//! Python bindings for `qsl-core`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qsl_core::divisibility::{classify_with, critical_k_scan, DEFAULT_SAMPLES};
use qsl_core::propagator::{propagate_analytic, propagate_ode, TimeGrid, DEFAULT_NODES};
use qsl_core::qsl::{blp_measure_ad, dl_ratio_ad, qsl_ratio_with};
use qsl_core::rates::{self, RateFn};
use qsl_core::scan::{qsl_surface_scan, ModelSpec, ScanConfig};
use qsl_core::state::{pure_state_from_a, PureStateParam};
use qsl_core::{Error, Tolerances};

create_exception!(qsl_lab, NumericalError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn tolerances(rtol: Option<f64>, atol: Option<f64>) -> Tolerances {
    let d = Tolerances::default();
    Tolerances { rtol: rtol.unwrap_or(d.rtol), atol: atol.unwrap_or(d.atol) }
}

/// Phase-covariant rate model.
#[pyclass(name = "RateModel", frozen, module = "qsl_lab")]
struct PyRateModel {
    inner: rates::RateModel,
}

#[pymethods]
impl PyRateModel {
    #[staticmethod]
    #[pyo3(signature = (nu = 8.0, omega = 5.0))]
    fn cp_oscillating(nu: f64, omega: f64) -> PyResult<Self> {
        Ok(Self { inner: rates::cp_oscillating_model(nu, omega).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (k = 0.5))]
    fn pdiv_crossover(k: f64) -> PyResult<Self> {
        Ok(Self { inner: rates::pdiv_crossover_model(k).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (k = 0.5))]
    fn sign_violation(k: f64) -> PyResult<Self> {
        Ok(Self { inner: rates::sign_violation_model(k).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma = 1.0))]
    fn amplitude_damping(gamma: f64) -> Self {
        Self { inner: rates::amplitude_damping_model(RateFn::Constant(gamma)) }
    }

    #[staticmethod]
    #[pyo3(signature = (gamma = 1.0))]
    fn pure_dephasing(gamma: f64) -> Self {
        Self { inner: rates::pure_dephasing_model(RateFn::Constant(gamma)) }
    }

    #[staticmethod]
    fn zero() -> Self {
        Self { inner: rates::RateModel::zero() }
    }

    /// Built-in model by CLI name, e.g. `RateModel.builtin("cp-osc", nu=8)`.
    #[staticmethod]
    #[pyo3(signature = (name, **params))]
    fn builtin(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        Ok(Self { inner: rates::builtin_model(name, &params.unwrap_or_default()).map_err(to_py)? })
    }

    /// Model from a CSV table with header `t,gamma1,gamma2,gamma3[,omega]`.
    #[staticmethod]
    fn from_csv(path: std::path::PathBuf) -> PyResult<Self> {
        let table = rates::TabulatedRates::from_csv_path(path).map_err(to_py)?;
        Ok(Self { inner: rates::rates_from_table(table) })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.inner.params.clone()
    }

    /// `(omega_h, gamma1, gamma2, gamma3)` at time `t`.
    fn rates_at(&self, t: f64) -> PyResult<(f64, f64, f64, f64)> {
        let r = self.inner.rates_at(t).map_err(to_py)?;
        Ok((r.omega_h, r.gamma1, r.gamma2, r.gamma3))
    }

    fn __repr__(&self) -> String {
        format!("RateModel({:?}, {:?})", self.inner.name, self.inner.params)
    }
}

#[pyclass(name = "QslReport", frozen, module = "qsl_lab")]
struct PyQslReport {
    #[pyo3(get)]
    tau: f64,
    #[pyo3(get)]
    bures_angle: f64,
    #[pyo3(get)]
    lambda_op: f64,
    #[pyo3(get)]
    tau_qsl: f64,
    #[pyo3(get)]
    ratio: f64,
}

#[pymethods]
impl PyQslReport {
    fn __repr__(&self) -> String {
        format!(
            "QslReport(tau={}, bures_angle={}, lambda_op={}, tau_qsl={}, ratio={})",
            self.tau, self.bures_angle, self.lambda_op, self.tau_qsl, self.ratio
        )
    }
}

/// One scan row: `(a, tau, ratio, bures_angle, lambda_op)`.
type Row = (f64, f64, f64, f64, f64);

fn param(a: f64) -> PyResult<PureStateParam> {
    PureStateParam::new(a).map_err(to_py)
}

/// QSL report for the pure state `a` at horizon `tau`.
#[pyfunction]
#[pyo3(signature = (model, a, tau, rtol = None, atol = None))]
fn qsl_ratio(model: &PyRateModel, a: f64, tau: f64, rtol: Option<f64>, atol: Option<f64>) -> PyResult<PyQslReport> {
    let r = qsl_ratio_with(&model.inner, param(a)?, tau, tolerances(rtol, atol)).map_err(to_py)?;
    Ok(PyQslReport { tau: r.tau, bures_angle: r.bures_angle, lambda_op: r.lambda_op, tau_qsl: r.tau_qsl, ratio: r.ratio })
}

/// Density matrices along a uniform grid as a dict of lists.
#[pyfunction]
#[pyo3(signature = (model, a, tau, nodes = DEFAULT_NODES, engine = "ode"))]
fn propagate<'py>(
    py: Python<'py>,
    model: &PyRateModel,
    a: f64,
    tau: f64,
    nodes: usize,
    engine: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = TimeGrid::uniform(tau, nodes).map_err(to_py)?;
    let rho0 = pure_state_from_a(param(a)?);
    let traj = match engine {
        "ode" => propagate_ode(&model.inner, &rho0, &grid),
        "analytic" => propagate_analytic(&model.inner, &rho0, &grid),
        other => return Err(PyValueError::new_err(format!("engine must be 'ode' or 'analytic', got {other:?}"))),
    }
    .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("t", traj.times().to_vec())?;
    out.set_item("rho00", traj.states().iter().map(|s| s.p0()).collect::<Vec<_>>())?;
    out.set_item("rho11", traj.states().iter().map(|s| s.p1()).collect::<Vec<_>>())?;
    out.set_item("rho01", traj.states().iter().map(|s| s.coherence()).collect::<Vec<_>>())?;
    out.set_item("fidelity", traj.fidelities().to_vec())?;
    out.set_item("gen_norm", traj.gen_norms().to_vec())?;
    Ok(out)
}

/// Divisibility verdict as a dict `{class, window, violations}`.
#[pyfunction]
#[pyo3(signature = (model, horizon = 20.0, samples = DEFAULT_SAMPLES))]
fn classify<'py>(py: Python<'py>, model: &PyRateModel, horizon: f64, samples: usize) -> PyResult<Bound<'py, PyDict>> {
    let v = classify_with(&model.inner, horizon, samples).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("class", v.class.to_string())?;
    out.set_item("window", (0.0, v.window))?;
    let records = v
        .violations
        .iter()
        .map(|x| {
            let d = PyDict::new(py);
            d.set_item("condition", x.condition.as_str())?;
            d.set_item("t_lo", x.t_lo)?;
            d.set_item("t_hi", x.t_hi)?;
            d.set_item("worst", x.worst)?;
            d.set_item("channel", x.channel.as_str())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("violations", records)?;
    Ok(out)
}

/// P-divisibility transition of a built-in family (`"pdiv-crossover"` or
/// `"sign-violation"`) in `[k_lo, k_hi]`.
#[pyfunction]
#[pyo3(signature = (family, k_lo = 0.5, k_hi = 1.5, horizon = 20.0))]
fn critical_k(family: &str, k_lo: f64, k_hi: f64, horizon: f64) -> PyResult<f64> {
    let name = family.to_string();
    critical_k_scan(|k| rates::builtin_model(&name, &BTreeMap::from([("k".to_string(), k)])), k_lo, k_hi, horizon)
        .map_err(to_py)
}

/// Surface scan of a built-in model; rows `(a, tau, ratio, bures_angle, lambda_op)`.
#[pyfunction]
#[pyo3(signature = (name, params = None, a_count = 101, tau_count = 200, tau_max = None, threads = None))]
fn scan(
    py: Python<'_>,
    name: &str,
    params: Option<BTreeMap<String, f64>>,
    a_count: usize,
    tau_count: usize,
    tau_max: Option<f64>,
    threads: Option<usize>,
) -> PyResult<Vec<Row>> {
    let mut spec = ModelSpec::new(name);
    spec.params = params.unwrap_or_default();
    let mut cfg = ScanConfig::new(spec);
    cfg.a_count = a_count;
    cfg.tau_count = tau_count;
    if let Some(t) = tau_max {
        cfg.tau_max = t;
    }
    cfg.threads = threads;
    let result = py.detach(|| qsl_surface_scan(&cfg)).map_err(to_py)?;
    Ok(result.rows.iter().map(|r| (r.a, r.tau, r.ratio, r.bures_angle, r.lambda_op)).collect())
}

/// BLP measure of an amplitude-damping population trace: `(N, intervals)`.
#[pyfunction]
fn blp_measure(times: Vec<f64>, populations: Vec<f64>) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let pop = zip(times, populations)?;
    let r = blp_measure_ad(&pop).map_err(to_py)?;
    Ok((r.n, r.intervals))
}

/// Closed-form amplitude-damping ratios at the end of the trace.
#[pyfunction]
fn dl_ratio<'py>(py: Python<'py>, times: Vec<f64>, populations: Vec<f64>, n: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = dl_ratio_ad(&zip(times, populations)?, n).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("printed", r.printed)?;
    out.set_item("total_variation", r.total_variation)?;
    out.set_item("printed_exceeds_bound", r.printed_exceeds_bound)?;
    Ok(out)
}

fn zip(times: Vec<f64>, populations: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    if times.len() != populations.len() {
        return Err(PyValueError::new_err("times and populations differ in length"));
    }
    Ok(times.into_iter().zip(populations).collect())
}

#[pymodule]
fn qsl_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRateModel>()?;
    m.add_class::<PyQslReport>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(qsl_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(critical_k, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(blp_measure, m)?)?;
    m.add_function(wrap_pyfunction!(dl_ratio, m)?)?;
    Ok(())
}
