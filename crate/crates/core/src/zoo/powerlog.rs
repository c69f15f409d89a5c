//! `H(t) = t^(alpha-1) [[L^b1, L^b3], [L^b3, L^b2]]` with `L = |log t|`, `b3 = (b1+b2)/2`.
//!
//! Each primitive is an upper incomplete gamma function:
//! `omega_i(t) = alpha^(-b_i-1) Gamma(b_i + 1, alpha L)`.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, LogOmega, Tail};
use crate::special::ln_upper_gamma;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLogParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// end of the power-log stretch; a `diag(1, 0)` tail follows
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_t_max() -> f64 {
    (-1.0f64).exp()
}

impl PowerLogParams {
    pub fn new(alpha: f64, beta1: f64, beta2: f64) -> Self {
        PowerLogParams { alpha, beta1, beta2, t_max: default_t_max() }
    }

    pub fn beta3(&self) -> f64 {
        0.5 * (self.beta1 + self.beta2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(WeylError::InvalidParams(format!("powerlog: alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta1.is_finite() && self.beta2.is_finite()) {
            return Err(WeylError::InvalidParams("powerlog: beta1, beta2 must be finite".into()));
        }
        if self.beta1 == self.beta2 {
            return Err(WeylError::InvalidParams(format!("powerlog: beta1 == beta2 (= {}) is not allowed", self.beta1)));
        }
        if !(self.t_max > 0.0 && self.t_max < 1.0) {
            return Err(WeylError::InvalidParams(format!("powerlog: t_max must lie in (0, 1), got {}", self.t_max)));
        }
        Ok(())
    }
}

/// Integer orders `beta1, beta2, beta3 >= 0` admit a cancellation-free determinant:
/// `Gamma(n+1, x) = e^(-x) P_n(x)` with `P_n(x) = sum_k n!/k! x^k`, and the integer
/// polynomial `P_n1 P_n2 - P_n3^2` is formed coefficientwise.
fn integer_det_poly(b1: f64, b2: f64) -> Option<Vec<f64>> {
    let b3 = 0.5 * (b1 + b2);
    let ints = [b1, b2, b3];
    if ints.iter().any(|b| *b < 0.0 || b.fract() != 0.0 || *b > 20.0) {
        return None;
    }
    let p = |n: usize| -> Vec<f64> {
        // coefficient of x^k is n!/k!
        let mut c = vec![0.0; n + 1];
        let mut v = 1.0;
        for k in (0..=n).rev() {
            c[k] = v;
            v *= k.max(1) as f64;
        }
        c
    };
    let mul = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let (n1, n2, n3) = (b1 as usize, b2 as usize, b3 as usize);
    let left = mul(&p(n1), &p(n2));
    let right = mul(&p(n3), &p(n3));
    let mut d: Vec<f64> = left.iter().zip(right.iter().chain(std::iter::repeat(&0.0))).map(|(x, y)| x - y).collect();
    while d.last() == Some(&0.0) {
        d.pop();
    }
    Some(d)
}

#[derive(Debug, Clone)]
pub struct PowerLog {
    params: PowerLogParams,
    det_poly: Option<Vec<f64>>,
    tail_omega: LogOmega,
}

impl PowerLog {
    pub fn new(params: PowerLogParams) -> Result<Self> {
        params.validate()?;
        let det_poly = integer_det_poly(params.beta1, params.beta2);
        let mut pl = PowerLog { params, det_poly, tail_omega: LogOmega { ln_omega1: 0.0, ln_omega2: 0.0, f: 0.0, ln_one_minus_f2: 0.0 } };
        pl.tail_omega = pl.log_omega_core(params.t_max);
        Ok(pl)
    }

    pub fn params(&self) -> &PowerLogParams {
        &self.params
    }

    fn log_omega_core(&self, t: f64) -> LogOmega {
        let PowerLogParams { alpha, beta1, beta2, .. } = self.params;
        let beta3 = self.params.beta3();
        let x = -alpha * t.ln();
        let lw = |b: f64| -(b + 1.0) * alpha.ln() + ln_upper_gamma(b + 1.0, x);
        let (l1, l2, l3) = (lw(beta1), lw(beta2), lw(beta3));
        let ln_ratio = 2.0 * l3 - l1 - l2;
        let ln_one_minus_f2 = match &self.det_poly {
            Some(poly) => {
                // det = alpha^(-b1-b2-2) e^(-2x) poly(x); prod = exp(l1 + l2)
                let pv = poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
                -(beta1 + beta2 + 2.0) * alpha.ln() - 2.0 * x + pv.ln() - l1 - l2
            }
            None => (-ln_ratio.exp_m1()).ln(),
        };
        LogOmega { ln_omega1: l1, ln_omega2: l2, f: (0.5 * ln_ratio).exp(), ln_one_minus_f2 }
    }
}

impl Hamiltonian for PowerLog {
    fn label(&self) -> String {
        let p = &self.params;
        format!("powerlog({}, {}, {})", p.alpha, p.beta1, p.beta2)
    }

    fn left(&self) -> f64 {
        0.0
    }

    fn density(&self, t: f64) -> Density {
        if t >= self.params.t_max {
            return Density::new(1.0, 0.0, 0.0);
        }
        if t <= 0.0 {
            return Density::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        }
        let p = &self.params;
        let l = -t.ln();
        let ll = l.ln();
        let base = (p.alpha - 1.0) * t.ln();
        Density::new((base + p.beta1 * ll).exp(), (base + p.beta2 * ll).exp(), (base + p.beta3() * ll).exp())
    }

    fn log_primitive(&self, t: f64) -> Option<LogOmega> {
        if t <= 0.0 {
            return None;
        }
        if t <= self.params.t_max {
            return Some(self.log_omega_core(t));
        }
        // diag(1, 0) tail: omega1 grows linearly, omega2 and omega3 freeze
        let base = self.tail_omega;
        let w1 = base.ln_omega1.exp();
        let extra = t - self.params.t_max;
        let ln_omega1 = base.ln_omega1 + (extra / w1).ln_1p();
        let ln_shrink = base.ln_omega1 - ln_omega1;
        let f = base.f * (0.5 * ln_shrink).exp();
        // 1 - f^2 = 1 - f0^2 w1/(w1 + extra) = (det0 + extra w2) / (w2 (w1 + extra))
        let det0 = (base.ln_det()).exp();
        let w2 = base.ln_omega2.exp();
        let ln_one_minus_f2 = (det0 + extra * w2).ln() - base.ln_omega2 - ln_omega1;
        Some(LogOmega { ln_omega1, ln_omega2: base.ln_omega2, f, ln_one_minus_f2 })
    }

    fn breakpoints(&self) -> &[f64] {
        std::slice::from_ref(&self.params.t_max)
    }

    fn singular_left(&self) -> bool {
        true
    }

    fn commutes_on(&self, lo: f64, _hi: f64) -> bool {
        lo >= self.params.t_max
    }

    fn tail(&self) -> Option<Tail> {
        Some(Tail { start: self.params.t_max, angle: 0.0 })
    }
}

pub fn make_powerlog(params: PowerLogParams) -> Result<HamiltonianModel> {
    Ok(HamiltonianModel::new(PowerLog::new(params)?))
}

/// Leading-order asymptotic predictions for large `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLogPrediction {
    pub r: f64,
    pub a_env: f64,
    pub l_env: f64,
    /// order of magnitude of `Im q(ir)`, constant not asserted
    pub im_q_scale: f64,
    pub t_ring: f64,
    pub t_hat: f64,
    /// `det Omega(t) ~ det_constant t^(2 alpha) L^(2 (b3 - 1))`
    pub det_constant: f64,
}

/// Asymptotics with `eta = 2`, from regular variation of the primitives:
/// `omega_i ~ t^alpha L^b_i / alpha` and
/// `det Omega ~ ((b1 - b2) / (2 alpha))^2 / alpha^2 t^(2 alpha) L^(2 b3 - 2)`.
pub fn powerlog_predict(params: &PowerLogParams, r: f64) -> Result<PowerLogPrediction> {
    params.validate()?;
    if !(r > 1.0) {
        return Err(WeylError::InvalidParams(format!("powerlog_predict needs r > 1, got {r}")));
    }
    let PowerLogParams { alpha, beta1, beta2, .. } = *params;
    let b3 = params.beta3();
    let lr = r.ln();
    let c = ((beta1 - beta2) / (2.0 * alpha)).powi(2) / (alpha * alpha);
    // (omega1 omega2)(t) ~ t^(2 alpha) L^(2 b3) / alpha^2 = 1/r^2, with L ~ ln(r)/alpha
    let l_ring = lr / alpha;
    let t_ring = (alpha / (r * l_ring.powf(b3))).powf(1.0 / alpha);
    let l_hat = lr / alpha;
    let t_hat = (1.0 / (r * c.sqrt() * l_hat.powf(b3 - 1.0))).powf(1.0 / alpha);
    // A = 1/(r omega2(t_ring)) = (omega1/omega2)^(1/2) at t_ring ~ L^((b1 - b2)/2)
    let a_env = l_ring.powf(0.5 * (beta1 - beta2));
    let l_env = a_env * c * alpha * alpha / (l_ring * l_ring);
    let im_q_scale = (alpha * l_ring).powf(0.5 * (beta1 - beta2) - 1.0);
    Ok(PowerLogPrediction { r, a_env, l_env, im_q_scale, t_ring, t_hat, det_constant: c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> HamiltonianModel {
        make_powerlog(PowerLogParams::new(2.0, 1.0, 3.0)).unwrap()
    }

    #[test]
    fn density_at_inverse_e() {
        let m = toy();
        let t = 0.999 * (-1.0f64).exp();
        let d = m.eval_density(t).unwrap();
        let l = -t.ln();
        assert!((d.h1 - t * l).abs() < 1e-15 && (d.h2 - t * l.powi(3)).abs() < 1e-15);
        assert!(d.det().abs() < 1e-15, "rank one: {}", d.det());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let m = toy();
        for &t in &[1e-6, 1e-3, 0.05, 0.3] {
            let c = m.omega(t).unwrap();
            let q = m.omega_by_quadrature(t).unwrap();
            for (x, y) in [(c.omega1, q.omega1), (c.omega2, q.omega2), (c.omega3, q.omega3)] {
                assert!((x / y - 1.0).abs() < 1e-8, "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn integer_det_polynomial_for_toy() {
        assert_eq!(integer_det_poly(1.0, 3.0).unwrap(), vec![2.0, 4.0, 1.0]);
    }

    #[test]
    fn det_leading_constant() {
        let m = toy();
        let p = powerlog_predict(&PowerLogParams::new(2.0, 1.0, 3.0), 1e10).unwrap();
        assert!((p.det_constant - 1.0 / 16.0).abs() < 1e-15);
        let t: f64 = 1e-30;
        let l = -t.ln();
        let ratio = m.det_omega(t).unwrap() / (p.det_constant * t.powi(4) * l * l);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn rejects_equal_betas() {
        let e = make_powerlog(PowerLogParams::new(2.0, 1.5, 1.5)).unwrap_err();
        assert!(e.to_string().contains("beta1 == beta2"));
    }
}
