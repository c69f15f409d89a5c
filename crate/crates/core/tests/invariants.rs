use proptest::prelude::*;
use weyl_core::estimates::certified_band;
use weyl_core::models::PiecewiseConstant;
use weyl_core::report::fmt_f64;
use weyl_core::scales::{envelopes, t_hat, t_ring, DEFAULT_ETA};
use weyl_core::weyl::{eval_q, propagate, weyl_disk};
use weyl_core::{zoo, Density, HamiltonianModel, C64};

/// A positive semidefinite density from a 2x2 factor `B`, as `B B^T`.
fn psd() -> impl Strategy<Value = Density> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_filter_map("rank zero", |(a, b, c, d)| {
        let (h1, h2, h3) = (a * a + b * b, c * c + d * d, a * c + b * d);
        (h1 + h2 > 1e-3).then(|| Density::new(h1, h2, h3))
    })
}

/// Two to four segments; the last one is definite so the model is limit point.
fn piecewise() -> impl Strategy<Value = HamiltonianModel> {
    (prop::collection::vec((0.05..3.0f64, psd()), 1..4), 0.2..4.0f64, 0.2..4.0f64).prop_map(|(segs, h1, h2)| {
        let mut t = 0.0;
        let mut rows = Vec::new();
        for (len, d) in segs {
            rows.push((t, d));
            t += len;
        }
        rows.push((t, Density::new(h1, h2, 0.0)));
        HamiltonianModel::new(PiecewiseConstant::new(rows).unwrap())
    })
}

fn upper_half_plane() -> impl Strategy<Value = C64> {
    (-2.0..4.0f64, 0.05..3.1f64).prop_map(|(lr, th)| C64::from_polar(10f64.powf(lr), th))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn constant_diagonal_oracle(h1 in 0.01..100.0f64, h2 in 0.01..100.0f64, z in upper_half_plane()) {
        let m = zoo::constant(h1, h2, 0.0).unwrap();
        let q = eval_q(&m, z, 1e-10).unwrap().q();
        let expect = C64::new(0.0, (h1 / h2).sqrt());
        prop_assert!((q - expect).norm() <= 1e-7 * expect.norm(), "{q} vs {expect}");
    }

    #[test]
    fn q_is_herglotz(m in piecewise(), z in upper_half_plane()) {
        let v = eval_q(&m, z, 1e-8).unwrap();
        prop_assert!(v.value.1 > 0.0, "{:?}", v.value);
    }

    #[test]
    fn transfer_matrix_is_unimodular(m in piecewise(), z in upper_half_plane(), t in 0.01..8.0f64) {
        let w = propagate(&m, t, z, 1e-10).unwrap();
        let err = if w.ln_norm() > 0.0 {
            let wn = w.w.scale(1.0 / w.w.max_abs());
            (wn.det() - (-2.0 * w.ln_norm()).exp()).norm()
        } else {
            (w.det() - 1.0).norm()
        };
        prop_assert!(err < 1e-9, "det defect {err}");
    }

    #[test]
    fn disks_are_nested(m in piecewise(), z in upper_half_plane(), t1 in 0.01..4.0f64, dt in 0.01..4.0f64) {
        let d1 = weyl_disk(&propagate(&m, t1, z, 1e-11).unwrap()).unwrap();
        let d2 = weyl_disk(&propagate(&m, t1 + dt, z, 1e-11).unwrap()).unwrap();
        let slack = 1e-9 * d1.radius + d1.rounding + d2.rounding;
        prop_assert!((d2.center() - d1.center()).norm() + d2.radius <= d1.radius + slack,
            "{d1:?} does not contain {d2:?}");
    }

    #[test]
    fn scales_and_envelopes_are_ordered(m in piecewise(), lr in -1.0..4.0f64) {
        let r = 10f64.powf(lr);
        let (tr, th) = (t_ring(&m, r, DEFAULT_ETA).unwrap(), t_hat(&m, r, DEFAULT_ETA).unwrap());
        prop_assert!(tr <= th * (1.0 + 1e-12), "t_ring {tr} > t_hat {th}");
        let e = envelopes(&m, r, DEFAULT_ETA).unwrap();
        prop_assert!(e.l_env <= e.a_env * (1.0 + 1e-12), "{e:?}");
    }

    #[test]
    fn explicit_band_holds(m in piecewise(), theta in 0.2..2.9f64) {
        let grid = [0.3, 3.0, 30.0, 300.0];
        let res = certified_band(&m, &grid, theta).unwrap();
        prop_assert!(res.margin >= 0.0, "margin {}", res.margin);
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
