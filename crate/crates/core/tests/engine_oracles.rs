use weyl_core::zoo;
use weyl_core::{eval_q, HamiltonianModel, C64};

fn q(model: &HamiltonianModel, z: C64, tol: f64) -> C64 {
    eval_q(model, z, tol).unwrap_or_else(|e| panic!("{} at {z}: {e}", model.label())).q()
}

fn close(a: C64, b: C64, tol: f64) {
    assert!((a - b).norm() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn constant_diagonal_models() {
    let id = zoo::by_name("identity").unwrap();
    let d41 = zoo::by_name("diag41").unwrap();
    for r in [1e-3, 0.1, 1.0, 37.0, 1e3] {
        let z = C64::new(0.0, r);
        close(q(&id, z, 1e-10), C64::new(0.0, 1.0), 1e-8);
        close(q(&d41, z, 1e-10), C64::new(0.0, 2.0), 1e-8);
    }
    let z = C64::from_polar(3.0, 0.7);
    close(q(&id, z, 1e-10), C64::new(0.0, 1.0), 1e-8);
}

#[test]
fn type_zero_prefix_adds_z() {
    let m = zoo::type_zero_prefix();
    for z in [C64::new(0.0, 2.0), C64::new(1.5, 0.5), C64::new(-4.0, 10.0)] {
        close(q(&m, z, 1e-10), z + C64::new(0.0, 1.0), 1e-8 * (1.0 + z.norm()));
    }
}

#[test]
fn free_schrodinger_is_i_sqrt_z() {
    let m = zoo::free_schrodinger();
    for r in [1.0, 10.0, 1e3, 1e4] {
        let z = C64::new(0.0, r);
        let expect = C64::new(0.0, 1.0) * z.sqrt();
        close(q(&m, z, 1e-9 * r.sqrt()), expect, 1e-6 * expect.norm());
    }
}

#[test]
fn uniform_string_is_inverse_sqrt() {
    let m = zoo::uniform_string_hamiltonian();
    for r in [1.0, 10.0, 1e3, 1e4] {
        let z = C64::new(0.0, r);
        let expect = 1.0 / (-z).sqrt();
        close(q(&m, z, 1e-9 / r.sqrt()), expect, 1e-6 * expect.norm());
    }
}

#[test]
fn zoo_models_evaluate() {
    for name in ["powerlog", "hpl", "hpl13", "r3"] {
        let m = zoo::by_name(name).unwrap();
        for r in [1.0, 1e3, 1e6] {
            let v = eval_q(&m, C64::new(0.0, r), 1e-8).unwrap_or_else(|e| panic!("{name} r={r}: {e}"));
            assert!(v.value.1 > 0.0, "{name} r={r}: {:?}", v.value);
        }
    }
}
