//! Spectral-measure tail diagnostics: the linear term `beta`, Stieltjes inversion of
//! `mu((x1, x2))`, and the integrability and growth comparisons between `mu` near
//! infinity and `Omega` near the left end.

use crate::error::{Result, WeylError};
use crate::hamiltonian::HamiltonianModel;
use crate::linalg::C64;
use crate::models::Restricted;
use crate::quad::{gauss_legendre8, integrate3};
use crate::weyl::eval_q;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};
use std::sync::Mutex;

/// Angles closer than this to `0` or `pi` count as `h2 = 0` on the prefix.
const ANGLE_TOL: f64 = 1e-9;

/// `beta` and `H_-` with `q_{H_-}(z) = q_H(z) - beta z`.
pub fn split_off_linear_term(model: &HamiltonianModel) -> Result<(f64, HamiltonianModel)> {
    let info = model.indivisible_info()?;
    match info.leading_type {
        Some(phi) if phi < ANGLE_TOL || PI - phi < ANGLE_TOL => {
            let beta = model.omega(info.a_hat)?.omega1;
            Ok((beta, HamiltonianModel::new(Restricted::new(model, info.a_hat)?)))
        }
        _ => Ok((0.0, model.clone())),
    }
}

/// `coef r^exponent ln(e + r)^log_exponent`, regularly varying of index `exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFunction {
    pub coef: f64,
    pub exponent: f64,
    #[serde(default)]
    pub log_exponent: f64,
}

impl ComparisonFunction {
    pub fn power(exponent: f64) -> Self {
        ComparisonFunction { coef: 1.0, exponent, log_exponent: 0.0 }
    }

    pub fn zero() -> Self {
        ComparisonFunction { coef: 0.0, exponent: 0.0, log_exponent: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.coef >= 0.0
            && self.coef.is_finite()
            && self.exponent.is_finite()
            && self.log_exponent.is_finite()
            && (self.exponent > 0.0 || (self.exponent == 0.0 && self.log_exponent >= 0.0));
        if !ok {
            return Err(WeylError::InvalidParams(format!("comparison function {self:?} is not nonnegative and nondecreasing")));
        }
        // monotonicity spot check, catches negative log exponents that dominate early
        let mut prev = 0.0;
        for k in -8..=16 {
            let v = self.eval(10f64.powi(k));
            if v < prev * (1.0 - 1e-12) {
                return Err(WeylError::InvalidParams(format!("comparison function decreases near r = 1e{k}")));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn index(&self) -> f64 {
        self.exponent
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        self.coef * r.powf(self.exponent) * (E + r).ln().powf(self.log_exponent)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let l = (E + r).ln();
        let mut d = self.exponent * r.powf(self.exponent - 1.0) * l.powf(self.log_exponent);
        if self.log_exponent != 0.0 {
            d += r.powf(self.exponent) * self.log_exponent * l.powf(self.log_exponent - 1.0) / (E + r);
        }
        self.coef * d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StieltjesEstimate {
    pub x1: f64,
    pub x2: f64,
    /// `(eps, (1/pi) int Im q(x + i eps) dx)`
    pub per_eps: Vec<(f64, f64)>,
    /// Richardson value from the two smallest `eps`, linear error model
    pub extrapolated: f64,
}

pub const DEFAULT_EPS: [f64; 3] = [4e-3, 2e-3, 1e-3];

/// Absolute target for each `q` evaluation inside the inversion integrals.
const INVERSION_Q_TOL: f64 = 1e-9;

fn smeared_mass(model: &HamiltonianModel, x1: f64, x2: f64, eps: f64) -> Result<f64> {
    let failure: Mutex<Option<WeylError>> = Mutex::new(None);
    let f = |x: f64| match eval_q(model, C64::new(x, eps), INVERSION_Q_TOL * (1.0 + x.abs())) {
        Ok(v) => [v.value.1, 0.0, 0.0],
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            [0.0; 3]
        }
    };
    let (v, _) = integrate3(&f, x1, x2, 1e-6, 4000)?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(v[0] / PI)
}

pub fn stieltjes_inversion(model: &HamiltonianModel, x1: f64, x2: f64, eps: &[f64]) -> Result<StieltjesEstimate> {
    if !(x1 <= x2) {
        return Err(WeylError::InvalidParams(format!("inversion interval [{x1}, {x2}] is reversed")));
    }
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(WeylError::InvalidParams("eps sequence must be positive and decreasing".into()));
    }
    let per_eps = eps
        .iter()
        .map(|&e| Ok((e, if x1 == x2 { 0.0 } else { smeared_mass(model, x1, x2, e)? })))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = match per_eps.as_slice() {
        [.., (e1, v1), (e2, v2)] => (e1 * v2 - e2 * v1) / (e1 - e2),
        [(_, v)] => *v,
        [] => unreachable!(),
    };
    Ok(StieltjesEstimate { x1, x2, per_eps, extrapolated })
}

/// `mu((-r, r))` from inversion.
pub fn mu_tilde(model: &HamiltonianModel, r: f64, eps: &[f64]) -> Result<f64> {
    Ok(stieltjes_inversion(model, -r, r, eps)?.extrapolated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    FiniteLooking,
    DivergentLooking,
}

/// Partial sums growing by at least this factor over the last blocks look divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.1;
const GROWTH_WINDOW: usize = 5;

/// Verdict from dyadic block integrals ordered toward the singular end.
pub fn classify_blocks(blocks: &[f64]) -> Finiteness {
    let partial: Vec<f64> = blocks
        .iter()
        .scan(0.0, |s, b| {
            *s += b;
            Some(*s)
        })
        .collect();
    let n = partial.len();
    if n <= GROWTH_WINDOW {
        return Finiteness::FiniteLooking;
    }
    let (last, before) = (partial[n - 1], partial[n - 1 - GROWTH_WINDOW]);
    if !last.is_finite() || (before > 0.0 && last / before >= DIVERGENCE_GROWTH) || (before == 0.0 && last > 0.0) {
        Finiteness::DivergentLooking
    } else {
        Finiteness::FiniteLooking
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct At0Side {
    /// dyadic block integrals, ordered toward the singular end
    pub blocks: Vec<f64>,
    pub total: f64,
    pub verdict: Finiteness,
}

impl At0Side {
    fn from_blocks(blocks: Vec<f64>) -> Self {
        let total = blocks.iter().sum();
        let verdict = classify_blocks(&blocks);
        At0Side { blocks, total, verdict }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct At0Result {
    /// `int_1^R mu_tilde(r) f(r) / r^3 dr`, truncated at `r_max`
    pub lhs: At0Side,
    pub r_max: f64,
    /// `int_{a_hat}^{a'} (1/w2^2) (w2, -w3) H (w2, -w3)^T f(det Omega^(-1/2)) dt`
    pub rhs: At0Side,
    /// `int (det Omega)' / (w2 det Omega^(1/2)) f'(det Omega^(-1/2)) dt`
    pub rhs_derivative: Option<At0Side>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct At0Options {
    pub lhs_blocks: usize,
    pub rhs_blocks: usize,
    pub eps: Vec<f64>,
    pub with_derivative: bool,
}

impl Default for At0Options {
    fn default() -> Self {
        At0Options { lhs_blocks: 20, rhs_blocks: 40, eps: DEFAULT_EPS.to_vec(), with_derivative: true }
    }
}

pub fn at0_check(model: &HamiltonianModel, f: &ComparisonFunction, a_prime: f64, opts: &At0Options) -> Result<At0Result> {
    f.validate()?;
    let (beta, _) = split_off_linear_term(model)?;
    if beta > 0.0 {
        return Err(WeylError::BetaNonzero { beta });
    }
    let a_hat = model.indivisible_info()?.a_hat;
    if !(a_prime > a_hat && a_prime < model.b()) {
        return Err(WeylError::InvalidParams(format!("a' = {a_prime} must lie in ({a_hat}, {})", model.b())));
    }

    // spectral side: blocks [2^k, 2^(k+1)]
    let lhs_blocks = (0..opts.lhs_blocks)
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = (2f64.powi(k as i32), 2f64.powi(k as i32 + 1));
            let failure: Mutex<Option<WeylError>> = Mutex::new(None);
            let g = |r: f64| match mu_tilde(model, r, &opts.eps) {
                Ok(m) => [m * f.eval(r) / (r * r * r), 0.0, 0.0],
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    [0.0; 3]
                }
            };
            let v = if f.coef == 0.0 { 0.0 } else { gauss_legendre8(&g, lo, hi)[0] };
            match failure.into_inner().expect("poisoned") {
                Some(e) => Err(e),
                None => Ok(v),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let r_max = 2f64.powi(opts.lhs_blocks as i32);

    // Omega side: blocks [a_hat + s 2^(-k-1), a_hat + s 2^(-k)]
    let s = a_prime - a_hat;
    let block_pairs = (0..opts.rhs_blocks)
        .into_par_iter()
        .map(|k| {
            let hi = a_hat + s * 0.5f64.powi(k as i32);
            let lo = a_hat + s * 0.5f64.powi(k as i32 + 1);
            let failure: Mutex<Option<WeylError>> = Mutex::new(None);
            let g = |t: f64| {
                let run = || -> Result<[f64; 3]> {
                    let o = model.omega(t)?;
                    let h = model.eval_density(t)?;
                    let det = o.det();
                    if !(det > 0.0) {
                        return Ok([f64::INFINITY, f64::INFINITY, 0.0]);
                    }
                    let (w2, w3) = (o.omega2, o.omega3);
                    let quad = h.h1 * w2 * w2 - 2.0 * h.h3 * w2 * w3 + h.h2 * w3 * w3;
                    let x = det.powf(-0.5);
                    let main = quad / (w2 * w2) * f.eval(x);
                    let ddet = h.h1 * o.omega2 + h.h2 * o.omega1 - 2.0 * h.h3 * o.omega3;
                    let deriv = ddet / (w2 * det.sqrt()) * f.derivative(x);
                    Ok([main, deriv, 0.0])
                };
                run().unwrap_or_else(|e| {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    [0.0; 3]
                })
            };
            let v = if f.coef == 0.0 { [0.0; 3] } else { gauss_legendre8(&g, lo, hi) };
            match failure.into_inner().expect("poisoned") {
                Some(e) => Err(e),
                None => Ok((v[0], v[1])),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let rhs = At0Side::from_blocks(block_pairs.iter().map(|p| p.0).collect());
    let rhs_derivative = opts.with_derivative.then(|| At0Side::from_blocks(block_pairs.iter().map(|p| p.1).collect()));
    let lhs = At0Side::from_blocks(lhs_blocks);
    let agree = lhs.verdict == rhs.verdict;
    Ok(At0Result { lhs, r_max, rhs, rhs_derivative, agree })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Zero,
    FinitePositive,
    Infinite,
}

/// Below/above these end-to-start ratios a sequence is read as tending to zero/infinity.
pub const ZERO_RATIO: f64 = 0.1;
pub const INFINITE_RATIO: f64 = 10.0;

/// Compares the sup over the last fifth of a sequence with the sup over its first fifth.
pub fn classify_growth(values: &[f64]) -> GrowthClass {
    let n = values.len();
    if n == 0 {
        return GrowthClass::FinitePositive;
    }
    let w = (n / 5).max(1);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
    let (head, tail) = (sup(&values[..w]), sup(&values[n - w..]));
    if !tail.is_finite() {
        return GrowthClass::Infinite;
    }
    if head == 0.0 {
        return if tail == 0.0 { GrowthClass::Zero } else { GrowthClass::Infinite };
    }
    let ratio = tail / head;
    if ratio < ZERO_RATIO {
        GrowthClass::Zero
    } else if ratio > INFINITE_RATIO {
        GrowthClass::Infinite
    } else {
        GrowthClass::FinitePositive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Y74Result {
    /// `(t, 1 / (w2(t) g(det Omega(t)^(-1/2))))`, ordered toward `a_hat`
    pub samples: Vec<(f64, f64)>,
    /// sup over the last fifth of the samples
    pub limsup: f64,
    pub class: GrowthClass,
}

/// `t_grid` is traversed in the given order, which should approach `a_hat`.
pub fn y74_quantity(model: &HamiltonianModel, g: &ComparisonFunction, t_grid: &[f64]) -> Result<Y74Result> {
    g.validate()?;
    let (beta, _) = split_off_linear_term(model)?;
    if beta > 0.0 {
        return Err(WeylError::BetaNonzero { beta });
    }
    let samples = t_grid
        .iter()
        .map(|&t| {
            let o = model.omega(t)?;
            Ok((t, 1.0 / (o.omega2 * g.eval(o.det().powf(-0.5)))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(samples))
}

fn summarize(samples: Vec<(f64, f64)>) -> Y74Result {
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let w = (values.len() / 5).max(1);
    let limsup = values[values.len().saturating_sub(w)..].iter().fold(0.0f64, |m, x| m.max(*x));
    Y74Result { class: classify_growth(&values), samples, limsup }
}

/// `mu_tilde(r) / g(r)` along an increasing `r_grid`.
pub fn y74_empirical(model: &HamiltonianModel, g: &ComparisonFunction, r_grid: &[f64], eps: &[f64]) -> Result<Y74Result> {
    g.validate()?;
    let samples = r_grid
        .par_iter()
        .map(|&r| Ok((r, mu_tilde(model, r, eps)? / g.eval(r))))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn linear_term_of_prefixes() {
        let (beta, rest) = split_off_linear_term(&zoo::type_zero_prefix()).unwrap();
        assert!((beta - 1.0).abs() < 1e-9 && (rest.a() - 1.0).abs() < 1e-9);
        let (beta, _) = split_off_linear_term(&zoo::type_half_pi_prefix()).unwrap();
        assert_eq!(beta, 0.0);
        let (beta, _) = split_off_linear_term(&zoo::by_name("identity").unwrap()).unwrap();
        assert_eq!(beta, 0.0);
    }

    #[test]
    fn block_classifier() {
        let geometric: Vec<f64> = (0..30).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(classify_blocks(&geometric), Finiteness::FiniteLooking);
        assert_eq!(classify_blocks(&[1.0; 20]), Finiteness::DivergentLooking);
        assert_eq!(classify_blocks(&[0.0; 20]), Finiteness::FiniteLooking);
    }

    #[test]
    fn growth_classifier() {
        let t: Vec<f64> = (0..40).map(|k| 10f64.powf(-0.2 * k as f64)).collect();
        assert_eq!(classify_growth(&t), GrowthClass::Zero);
        assert_eq!(classify_growth(&t.iter().map(|x| 1.0 / x).collect::<Vec<_>>()), GrowthClass::Infinite);
        assert_eq!(classify_growth(&[1.0; 10]), GrowthClass::FinitePositive);
    }

    #[test]
    fn comparison_function_validation() {
        assert!(ComparisonFunction::power(2.0).validate().is_ok());
        assert!(ComparisonFunction::zero().validate().is_ok());
        assert!(ComparisonFunction { coef: 1.0, exponent: -1.0, log_exponent: 0.0 }.validate().is_err());
        let f = ComparisonFunction { coef: 2.0, exponent: 1.5, log_exponent: 1.0 };
        let (r, h) = (7.0, 1e-5);
        assert!(((f.eval(r + h) - f.eval(r - h)) / (2.0 * h) - f.derivative(r)).abs() < 1e-6);
    }
}
