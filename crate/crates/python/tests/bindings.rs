use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module<R>(f: impl for<'py> FnOnce(Python<'py>, &Bound<'py, PyModule>) -> R) -> R {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "sparsim").unwrap();
        sparsim_py::register(&m).unwrap();
        f(py, &m)
    })
}

#[test]
fn module_round_trip() {
    with_module(|py, m| {
        let locals = PyDict::new(py);
        locals.set_item("sparsim", m).unwrap();
        py.run(
            cr#"
c = sparsim.Circuit.from_json('{"n": 2, "input": "10", "u1": {"type": "basis"}, "u2": {"type": "product", "unitaries": ["I", "X"]}, "measure": [0, 1]}')
assert c.n == 2
assert c.exact_distribution() == {"11": 1.0}
assert sparsim.simulate(c, t=1, epsilon=0.1, seed=3) == {"11": 1.0}
state = sparsim.reconstruct_state(c, t=1, epsilon=0.1, seed=3)
assert list(state) == ["11"] and abs(abs(state["11"]) - 1) < 1e-12
f, b = sparsim.verify_fourier_conjugation(2)
assert f < 1e-12 and b < 1e-12
"#,
            None,
            Some(&locals),
        )
        .unwrap();
    });
}

#[test]
fn errors_become_value_errors() {
    with_module(|py, m| {
        let circuit = m.getattr("Circuit").unwrap();
        let err = circuit.call_method1("from_json", ("{\"n\": 1}",)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let uniform = circuit
            .call_method1(
                "from_json",
                (r#"{"n": 5, "input": "00000", "u1": {"type": "basis"},
                    "u2": {"type": "product", "unitaries": ["H", "H", "H", "H", "H"]}, "measure": [0, 1, 2, 3, 4]}"#,),
            )
            .unwrap();
        // every string sits at 1/32, below theta/2 = 0.05: strict mode reports it
        let kwargs = PyDict::new(py);
        kwargs.set_item("t", 1).unwrap();
        kwargs.set_item("epsilon", 0.1).unwrap();
        kwargs.set_item("strict", true).unwrap();
        let err = m.getattr("simulate").unwrap().call((uniform,), Some(&kwargs)).unwrap_err();
        assert!(err.to_string().contains("promise"), "{err}");
    });
}
