//! Complex 2x2 matrices, just enough for transfer matrices.

use num_complex::Complex64;
use std::ops::Mul;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[ONE, ZERO], [ZERO, ONE]] };

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= o.m[i][j];
            }
        }
        out
    }

    /// Moebius action tau -> (w11 tau + w12)/(w21 tau + w22); `None` is the point at infinity.
    pub fn mobius(&self, tau: Option<C64>) -> Option<C64> {
        let (num, den) = match tau {
            Some(t) => (self.m[0][0] * t + self.m[0][1], self.m[1][0] * t + self.m[1][1]),
            None => (self.m[0][0], self.m[1][0]),
        };
        if den == ZERO {
            None
        } else {
            Some(num / den)
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_det() {
        let a = Mat2::new(ONE, C64::new(0.0, 2.0), ZERO, ONE);
        let b = Mat2::new(ONE, ZERO, C64::new(3.0, 0.0), ONE);
        let p = a * b;
        assert_eq!(p.m[0][0], C64::new(1.0, 6.0));
        assert!((p.det() - ONE).norm() < 1e-15);
    }

    #[test]
    fn mobius_infinity() {
        let m = Mat2::new(ZERO, ONE, ONE, C64::new(0.0, 1.0));
        assert_eq!(m.mobius(None), Some(ZERO));
        assert!((m.mobius(Some(ZERO)).unwrap() - C64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
