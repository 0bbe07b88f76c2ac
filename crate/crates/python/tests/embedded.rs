use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn module_runs_in_embedded_interpreter() {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(torus_equidist_py::torus_equidist_py)(py);
        let locals = PyDict::new(py);
        locals.set_item("te", m).unwrap();
        let code =
            c"roots = te.solve('x^6 - 1'); ok = len(roots) == 6 and abs(te.angle_discrepancy(roots) - 1/6) < 1e-12";
        py.run(code, None, Some(&locals)).unwrap();
        let ok: bool = locals.get_item("ok").unwrap().unwrap().extract().unwrap();
        assert!(ok);
        let err = py.run(c"te.solve('x1 + *')", None, Some(&locals)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}
