//! Adaptive Gauss-Kronrod quadrature for the three density components.

use crate::error::{Result, WeylError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub type V3 = [f64; 3];

fn axpy(acc: &mut V3, w: f64, v: V3) {
    for k in 0..3 {
        acc[k] += w * v[k];
    }
}

fn norm1(v: &V3) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Fixed 8-point Gauss-Legendre rule, used for short propagation steps.
pub fn gauss_legendre8<F: Fn(f64) -> V3>(f: &F, lo: f64, hi: f64) -> V3 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut acc = [0.0; 3];
    for (x, w) in GL8_X.iter().zip(GL8_W) {
        axpy(&mut acc, w * h, f(c - h * x));
        axpy(&mut acc, w * h, f(c + h * x));
    }
    acc
}

fn gk15<F: Fn(f64) -> V3>(f: &F, lo: f64, hi: f64) -> (V3, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = [0.0; 3];
    let mut gauss = [0.0; 3];
    axpy(&mut kron, WGK[7], fc);
    axpy(&mut gauss, WG[3], fc);
    for j in 0..7 {
        let f1 = f(c - h * XGK[j]);
        let f2 = f(c + h * XGK[j]);
        axpy(&mut kron, WGK[j], f1);
        axpy(&mut kron, WGK[j], f2);
        if j % 2 == 1 {
            axpy(&mut gauss, WG[j / 2], f1);
            axpy(&mut gauss, WG[j / 2], f2);
        }
    }
    let mut diff = [0.0; 3];
    for k in 0..3 {
        kron[k] *= h;
        diff[k] = kron[k] - gauss[k] * h;
    }
    (kron, norm1(&diff))
}

/// Globally adaptive integration of a vector integrand over `[lo, hi]`.
pub fn integrate3<F: Fn(f64) -> V3>(
    f: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(V3, f64)> {
    if hi <= lo {
        return Ok(([0.0; 3], 0.0));
    }
    let (v, e) = gk15(f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    loop {
        let mut total = [0.0; 3];
        let mut err = 0.0;
        for p in &parts {
            axpy(&mut total, 1.0, p.2);
            err += p.3;
        }
        let target = rel_tol * norm1(&total);
        if err <= target || err <= 1e-300 {
            return Ok((total, err));
        }
        if parts.len() >= max_intervals {
            return Err(WeylError::QuadratureFailure { lo, hi, err });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (l, h, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (l + h);
        if m <= l || m >= h {
            return Err(WeylError::QuadratureFailure { lo, hi, err });
        }
        let (v1, e1) = gk15(f, l, m);
        let (v2, e2) = gk15(f, m, h);
        parts.push((l, m, v1, e1));
        parts.push((m, h, v2, e2));
    }
}

/// Integral over `[a, t]` for integrands that may blow up at `a`: the range is cut
/// into blocks `[a + s 2^(-k-1), a + s 2^(-k)]` accumulated until the geometric
/// remainder is negligible or offsets stop being representable.
pub fn integrate3_singular_left<F: Fn(f64) -> V3>(
    f: &F,
    a: f64,
    t: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<V3> {
    let s = t - a;
    if s <= 0.0 {
        return Ok([0.0; 3]);
    }
    let mut total = [0.0; 3];
    let mut prev_block = f64::INFINITY;
    let mut hi = t;
    for _ in 0..1100 {
        let lo = a + 0.5 * (hi - a);
        if lo <= a || lo >= hi {
            break;
        }
        let (v, _) = integrate3(f, lo, hi, rel_tol * 0.1, max_intervals)?;
        axpy(&mut total, 1.0, v);
        let b = norm1(&v);
        let sum = norm1(&total);
        if sum > 0.0 && prev_block.is_finite() && b < prev_block {
            let ratio = b / prev_block;
            let remainder = b * ratio / (1.0 - ratio).max(1e-3);
            if remainder <= 0.01 * rel_tol * sum {
                break;
            }
        }
        prev_block = b;
        hi = lo;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let f = |x: f64| [x * x, 1.0, x.powi(7)];
        let (v, _) = integrate3(&f, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-13);
        assert!((v[1] - 2.0).abs() < 1e-13);
        assert!((v[2] - 32.0).abs() < 1e-11);
        let g = gauss_legendre8(&f, 0.0, 2.0);
        assert!((g[2] - 32.0).abs() < 1e-11);
    }

    #[test]
    fn singular_left_log_power() {
        // int_0^{1/e} t |log t|^3 dt = Gamma(4, 2)/16 = 6 e^{-2} (1 + 2 + 2 + 4/3) / 16
        let f = |t: f64| {
            let l = -t.ln();
            [t * l.powi(3), t.sqrt().recip(), 0.0]
        };
        let t = (-1.0f64).exp();
        let v = integrate3_singular_left(&f, 0.0, t, 1e-11, 200).unwrap();
        let exact = 6.0 * (-2.0f64).exp() * (1.0 + 2.0 + 2.0 + 4.0 / 3.0) / 16.0;
        assert!((v[0] / exact - 1.0).abs() < 1e-9, "{} vs {}", v[0], exact);
        assert!((v[1] / (2.0 * t.sqrt()) - 1.0).abs() < 1e-9);
    }
}
