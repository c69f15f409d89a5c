use std::f64::consts::{FRAC_PI_2, PI};
use weyl_core::estimates::{theorem1_record, BandConstants, EstimateOptions, BAND_ETA};
use weyl_core::scales::{envelopes, r_hat, t_hat, t_ring, DEFAULT_ETA};
use weyl_core::zoo;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn diagonal_scales_in_closed_form() {
    let (h1, h2) = (4.0, 1.0);
    let m = zoo::constant(h1, h2, 0.0).unwrap();
    for r in [1e-2, 1.0, 250.0, 1e6] {
        let expect = DEFAULT_ETA / (2.0 * r * (h1 * h2).sqrt());
        assert!(rel(t_hat(&m, r, DEFAULT_ETA).unwrap(), expect) < 1e-12);
        assert!(rel(t_ring(&m, r, DEFAULT_ETA).unwrap(), expect) < 1e-12);
        let e = envelopes(&m, r, DEFAULT_ETA).unwrap();
        assert!(rel(e.a_env, 2.0) < 1e-12 && rel(e.l_env, 2.0) < 1e-12, "{e:?}");
    }
    assert!(rel(r_hat(&m, 0.25, DEFAULT_ETA).unwrap(), 2.0) < 1e-12);
}

#[test]
fn off_diagonal_constant_splits_the_scales() {
    // Omega = t [[1, 1/2], [1/2, 1]]: det = 3 t^2 / 4, omega1 omega2 = t^2
    let m = zoo::constant(1.0, 1.0, 0.5).unwrap();
    let r = 10.0;
    assert!(rel(t_ring(&m, r, DEFAULT_ETA).unwrap(), 0.1) < 1e-12);
    assert!(rel(t_hat(&m, r, DEFAULT_ETA).unwrap(), 0.1 / 0.75f64.sqrt()) < 1e-12);
    let e = envelopes(&m, r, DEFAULT_ETA).unwrap();
    assert!(rel(e.a_env, 1.0) < 1e-12 && rel(e.l_env, 0.75) < 1e-12, "{e:?}");
}

#[test]
fn band_constants_at_the_optimal_eta() {
    let c = BandConstants::new(BAND_ETA, FRAC_PI_2).unwrap();
    assert!(rel(c.upper(), 1.5678) < 1e-3, "{c:?}");
    assert!(rel(c.lower(), 0.00232) < 5e-3, "{c:?}");
    assert!(rel(c.ratio(), 675.79) < 1e-3, "{c:?}");
    assert!(BandConstants::new(0.3, FRAC_PI_2).is_err());
    assert!(BandConstants::new(BAND_ETA, PI).is_err());
}

#[test]
fn identity_record_is_exact() {
    let m = zoo::by_name("identity").unwrap();
    let rec = theorem1_record(&m, 50.0, &EstimateOptions::default()).unwrap();
    assert!(rel(rec.im_q, 1.0) < 1e-9 && rel(rec.abs_q, 1.0) < 1e-9, "{rec:?}");
    assert!(rel(rec.a_env, 1.0) < 1e-12 && rel(rec.l_env, 1.0) < 1e-12);
}
