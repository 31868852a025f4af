//! Python bindings. Bit strings are dictionary keys in qubit order (first
//! character = qubit 0).

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use sparsim::circuit::CircuitSpec;
use sparsim::oracle::{dense_simulate, exact_distribution};
use sparsim::reconstruct::{self, Diagnostic, ReconstructionParams};
use sparsim::{Amplitude, BitString, EstimationParams};

fn value_error(e: sparsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn check_promise(strict: bool, diagnostics: &[Diagnostic]) -> PyResult<()> {
    if strict && !diagnostics.is_empty() {
        let listed: Vec<String> = diagnostics.iter().map(|d| format!("{d:?}")).collect();
        return Err(PyValueError::new_err(format!(
            "sparseness promise violated: {}",
            listed.join("; ")
        )));
    }
    Ok(())
}

/// A parsed and validated circuit file.
#[pyclass(name = "Circuit", frozen, module = "sparsim")]
pub struct PyCircuit {
    spec: CircuitSpec,
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CircuitSpec::from_json(text).map(|spec| Self { spec }).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CircuitSpec::from_path(path).map(|spec| Self { spec }).map_err(value_error)
    }

    fn to_json(&self) -> PyResult<String> {
        self.spec.to_json().map_err(value_error)
    }

    #[getter]
    fn n(&self) -> usize {
        self.spec.n
    }

    #[getter]
    fn measure(&self) -> Vec<usize> {
        self.spec.measure.clone()
    }

    /// Exact distribution of the measured qubits by dense simulation (n <= 16).
    fn exact_distribution(&self) -> PyResult<BTreeMap<String, f64>> {
        let state = dense_simulate(&self.spec).map_err(value_error)?;
        let k = self.spec.measure.len();
        Ok(exact_distribution(&state, &self.spec.measure)
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(x, p)| (BitString::new(x as u64, k).expect("fits").to_string(), p))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Circuit(n={}, measure={:?})", self.spec.n, self.spec.measure)
    }
}

/// Reconstructs the measured output distribution.
#[pyfunction]
#[pyo3(signature = (circuit, t, epsilon, delta = 0.05, seed = 0, strict = false))]
fn simulate(
    circuit: &PyCircuit,
    t: usize,
    epsilon: f64,
    delta: f64,
    seed: u64,
    strict: bool,
) -> PyResult<BTreeMap<String, f64>> {
    let params = ReconstructionParams::new(t, epsilon, delta, seed).map_err(value_error)?;
    let ct = circuit.spec.ct_state().map_err(value_error)?;
    let oracle = circuit.spec.marginal_oracle(&ct).map_err(value_error)?;
    let rec = reconstruct::reconstruct_distribution(&oracle, &params).map_err(value_error)?;
    check_promise(strict, &rec.diagnostics)?;
    Ok(rec.distribution.iter().map(|(x, p)| (x.to_string(), p)).collect())
}

/// Reconstructs the full output state; every qubit must be measured.
#[pyfunction]
#[pyo3(signature = (circuit, t, epsilon, delta = 0.05, seed = 0, strict = false))]
fn reconstruct_state(
    circuit: &PyCircuit,
    t: usize,
    epsilon: f64,
    delta: f64,
    seed: u64,
    strict: bool,
) -> PyResult<BTreeMap<String, Amplitude>> {
    let spec = &circuit.spec;
    let params = ReconstructionParams::new(t, epsilon, delta, seed).map_err(value_error)?;
    let ct = spec.ct_state().map_err(value_error)?;
    let block = spec.second_block().map_err(value_error)?;
    let rec = reconstruct::reconstruct_state(&ct, &block, &spec.measure, &params).map_err(value_error)?;
    check_promise(strict, &rec.diagnostics)?;
    Ok(rec.state.iter().map(|(x, a)| (x.to_string(), a)).collect())
}

/// Output strings with `|<x|U2 U1|input>|^2 >= theta`, as
/// `(bits, weight, amplitude)` triples.
#[pyfunction]
#[pyo3(signature = (circuit, theta, pi = 0.05, epsilon = 0.05, delta = 0.05, seed = 0))]
fn significant_weights(
    circuit: &PyCircuit,
    theta: f64,
    pi: f64,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> PyResult<Vec<(String, f64, Amplitude)>> {
    let ct = circuit.spec.ct_state().map_err(value_error)?;
    let basis = circuit.spec.second_block().map_err(value_error)?.adjoint();
    let coefficient = EstimationParams::new(epsilon, delta, seed).map_err(value_error)?;
    let rep = reconstruct::significant_weights(&ct, &basis, theta, pi, &coefficient).map_err(value_error)?;
    Ok(rep
        .entries
        .into_iter()
        .map(|e| (e.bits.to_string(), e.weight, e.coefficient))
        .collect())
}

/// Largest entrywise deviations of the two QFT conjugation identities.
#[pyfunction]
fn verify_fourier_conjugation(k: usize) -> PyResult<(f64, f64)> {
    sparsim::oracle::verify_fourier_conjugation(k).map_err(value_error)
}

/// Adds the module contents to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_state, m)?)?;
    m.add_function(wrap_pyfunction!(significant_weights, m)?)?;
    m.add_function(wrap_pyfunction!(verify_fourier_conjugation, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "sparsim")]
fn sparsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
