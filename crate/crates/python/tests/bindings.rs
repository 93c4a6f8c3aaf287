use std::sync::Once;

use pyo3::prelude::*;
use pyo3::types::PyDict;

use spikecap_py::spikecap_module;

fn with_module<R>(f: impl FnOnce(Python<'_>, &Bound<'_, PyDict>) -> R) -> R {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        pyo3::append_to_inittab!(spikecap_module);
        Python::initialize();
    });
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("sc", py.import("spikecap").unwrap()).unwrap();
        f(py, &globals)
    })
}

fn eval_f64(py: Python<'_>, globals: &Bound<'_, PyDict>, expr: &std::ffi::CStr) -> f64 {
    py.eval(expr, Some(globals), None).unwrap().extract().unwrap()
}

#[test]
fn worked_examples_through_python() {
    with_module(|py, g| {
        let revenue = eval_f64(py, g, c"sc.run_vcg([10.0, 6.0, 4.0], [0.7, 0.3]).revenue");
        assert!((revenue - 4.8).abs() < 1e-12);
        let h = eval_f64(py, g, c"sc.solve([10.0, 8.0, 5.0], [0.0, 0.1, 0.05]).objective_value");
        assert!((h - 8.85).abs() < 1e-12);
        let r = eval_f64(py, g, c"sc.combined_auction([12.0, 8.0, 6.0, 3.0], [1.0, 0.5], [0.7, 0.3]).sne_revenue");
        assert!((r - 8.95).abs() < 1e-12);
        let nu = eval_f64(py, g, c"sc.price_of_capacity_uniform([10.0, 5.0])");
        assert_eq!(nu, 1.5);
    });
}

#[test]
fn domain_errors_raise_value_error() {
    with_module(|py, g| {
        let e = py.eval(c"sc.run_vcg([10.0], [0.6, 0.3])", Some(g), None).unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        assert!(e.to_string().contains("SpikecapError"));
    });
}
