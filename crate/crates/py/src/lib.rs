//! Python bindings: circuits, parameterized observables, closed forms,
//! training and the experiment runner.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qreadout_core::circuits::{self, Circuit};
use qreadout_core::experiment::{self, ExperimentConfig};
use qreadout_core::hamiltonians;
use qreadout_core::mixture::{self, QfiClosedForm};
use qreadout_core::observables::ParamObservable;
use qreadout_core::states::{ground_state, LabeledState, State};
use qreadout_core::training::{self, TrainConfig, TrainSet};
use qreadout_core::{DenseMatrix, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<C64>>) -> PyResult<DenseMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("density matrix must be square"));
    }
    Ok(DenseMatrix::from_fn(d, |i, j| rows[i][j]))
}

/// A state is either a list of amplitudes or a square list of rows.
fn extract_state(obj: &Bound<'_, PyAny>) -> PyResult<State> {
    if let Ok(v) = obj.extract::<Vec<C64>>() {
        return Ok(State::Pure(v));
    }
    let rows: Vec<Vec<C64>> = obj.extract()?;
    Ok(State::Mixed(matrix_from_rows(rows)?))
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<C64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

#[pyclass(name = "Circuit", module = "qreadout", skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit {
    inner: Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Parses the circuit text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().map_err(py_err)? })
    }

    #[staticmethod]
    fn hea(n: usize, layers: usize) -> PyResult<Self> {
        Ok(Self { inner: circuits::hea(n, layers).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, ring=false))]
    fn qcnn(n: usize, ring: bool) -> PyResult<Self> {
        Ok(Self { inner: circuits::qcnn(n, ring).map_err(py_err)? })
    }

    #[staticmethod]
    fn hva(n: usize, layers: usize) -> PyResult<Self> {
        Ok(Self { inner: circuits::hva_cluster(n, layers).map_err(py_err)? })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self { inner: circuits::identity_circuit(n) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn unitary(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<C64>>> {
        Ok(rows_of(&self.inner.unitary(&theta).map_err(py_err)?))
    }

    fn apply(&self, theta: Vec<f64>, psi: Vec<C64>) -> PyResult<Vec<C64>> {
        let mut v = psi;
        self.inner.apply(&theta, &mut v).map_err(py_err)?;
        Ok(v)
    }

    fn to_text(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Circuit(n={}, params={}, gates={})", self.inner.n(), self.inner.param_count(), self.inner.gates().len())
    }
}

/// `M = Σ λ_i U†(𝟙 ⊗ |i⟩⟨i|)U` with the last `m` qubits measured.
#[pyclass(name = "Observable", module = "qreadout", skip_from_py_object)]
#[derive(Clone)]
struct PyObservable {
    inner: ParamObservable,
}

#[pymethods]
impl PyObservable {
    #[new]
    fn new(circuit: &PyCircuit, m: usize, lambdas: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: ParamObservable::new(circuit.inner.clone(), m, lambdas).map_err(py_err)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    fn probabilities(&self, theta: Vec<f64>, state: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&theta, &extract_state(state)?).map_err(py_err)
    }

    fn expectation(&self, theta: Vec<f64>, state: &Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.expectation(&theta, &extract_state(state)?).map_err(py_err)
    }

    fn variance(&self, theta: Vec<f64>, state: &Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.variance(&theta, &extract_state(state)?).map_err(py_err)
    }

    /// Dense matrix of the observable.
    fn matrix(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<C64>>> {
        Ok(rows_of(&self.inner.matrix(&theta).map_err(py_err)?.matrix()))
    }
}

#[pyfunction]
fn ising_ground_state(n: usize, h: f64) -> PyResult<(Vec<C64>, f64)> {
    let g = ground_state(&hamiltonians::ising(n, h).map_err(py_err)?).map_err(py_err)?;
    Ok((g.vector, g.energy))
}

#[pyfunction]
fn qfi_half_closed(n: usize, r: f64) -> f64 {
    mixture::qfi_half_closed(n, r)
}

#[pyfunction]
#[pyo3(signature = (alpha, n, r, corrected=true))]
fn qfi_closed(alpha: f64, n: usize, r: f64, corrected: bool) -> f64 {
    let form = if corrected { QfiClosedForm::Corrected } else { QfiClosedForm::AsPrinted };
    mixture::qfi_closed(alpha, n, r, form)
}

#[pyfunction]
fn variance_full(alpha: f64, n: usize, r: f64) -> f64 {
    mixture::variance_full(alpha, n, r)
}

#[pyfunction]
fn variance_partial(alpha: f64, m: usize) -> f64 {
    mixture::variance_partial(alpha, m)
}

#[pyfunction]
fn optimal_eigenvalues_full(n: usize, r: f64) -> Vec<f64> {
    mixture::optimal_eigenvalues_full(n, r)
}

#[pyfunction]
fn optimal_eigenvalues_partial(n: usize, m: usize) -> PyResult<Vec<f64>> {
    mixture::optimal_eigenvalues_partial(n, m).map_err(py_err)
}

#[pyfunction]
fn f_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    mixture::f_divergence(&p, &q).map_err(py_err)
}

#[pyfunction]
fn validate_closed_forms(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let r = mixture::validate_closed_forms().map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("qfi_half", r.qfi_half)?;
    d.set_item("qfi_corrected", r.qfi_corrected)?;
    d.set_item("qfi_as_printed", r.qfi_as_printed)?;
    d.set_item("variance_full", r.variance_full)?;
    d.set_item("variance_partial", r.variance_partial)?;
    d.set_item("constraints", r.constraints)?;
    d.set_item("lyapunov", r.lyapunov)?;
    Ok(d)
}

/// Trains `(λ, θ)` on labeled states; keyword arguments override the
/// training defaults.
#[pyfunction]
#[pyo3(signature = (circuit, m, states, labels, **options))]
fn train<'py>(
    py: Python<'py>,
    circuit: &PyCircuit,
    m: usize,
    states: Vec<Bound<'py, PyAny>>,
    labels: Vec<f64>,
    options: Option<HashMap<String, f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    if states.len() != labels.len() {
        return Err(PyValueError::new_err("states and labels differ in length"));
    }
    let items = states
        .iter()
        .zip(&labels)
        .map(|(s, &a)| Ok(LabeledState::new(extract_state(s)?, a)))
        .collect::<PyResult<Vec<_>>>()?;
    let set = TrainSet::new(items).map_err(py_err)?;
    let mut cfg = TrainConfig::default();
    for (k, v) in options.unwrap_or_default() {
        match k.as_str() {
            "w_ls" => cfg.w_ls = v,
            "w_var" => cfg.w_var = v,
            "seed" => cfg.seed = v as u64,
            "restarts" => cfg.restarts = v as usize,
            "max_iters" => cfg.max_iters = v as usize,
            "grad_step" => cfg.grad_step = v,
            "conv_tol" => cfg.conv_tol = v,
            "lambda_jitter" => cfg.lambda_jitter = v,
            other => return Err(PyValueError::new_err(format!("unknown option '{other}'"))),
        }
    }
    let r = training::train(&circuit.inner, m, &set, &cfg).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("lambdas", r.lambdas)?;
    d.set_item("theta", r.theta)?;
    d.set_item("loss", r.loss)?;
    d.set_item("converged", r.converged)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("loss_history", r.loss_history)?;
    d.set_item("restart_losses", r.restart_losses)?;
    Ok(d)
}

/// Runs an experiment from `key=value` settings and returns the CSV text.
/// With `write=True` the CSV and sidecar are also written to `out`.
#[pyfunction]
#[pyo3(signature = (settings, write=false))]
fn run_experiment(settings: HashMap<String, String>, write: bool) -> PyResult<String> {
    let mut pairs: Vec<(&str, &str)> = settings.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    // Apply in a fixed order so repeated calls are reproducible.
    pairs.sort();
    let cfg = ExperimentConfig::from_pairs(pairs).map_err(py_err)?;
    let out = experiment::run(&cfg).map_err(py_err)?;
    if write {
        out.write().map_err(py_err)?;
    }
    String::from_utf8(out.csv_bytes().map_err(py_err)?).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn qreadout(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiment::VERSION)?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyObservable>()?;
    m.add_function(wrap_pyfunction!(ising_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_half_closed, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_closed, m)?)?;
    m.add_function(wrap_pyfunction!(variance_full, m)?)?;
    m.add_function(wrap_pyfunction!(variance_partial, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_eigenvalues_full, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_eigenvalues_partial, m)?)?;
    m.add_function(wrap_pyfunction!(f_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(validate_closed_forms, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
