//! Runs the Python smoke script against the module registered in an embedded interpreter.

use pyo3::prelude::*;
use weyl::weyl;
use pyo3::types::PyDict;

#[test]
fn python_smoke_script() {
    pyo3::append_to_inittab!(weyl);
    Python::attach(|py| {
        let code = std::ffi::CString::new(include_str!("../python/smoke_test.py")).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("__name__", "__main__").unwrap();
        py.run(code.as_c_str(), Some(&globals), None).unwrap_or_else(|e| {
            e.display(py);
            panic!("smoke script failed: {e}");
        });
    });
}
