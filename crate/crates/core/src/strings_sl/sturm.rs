//! `-(p y')' + q y = z w y` on `[a, b)` with the fundamental solutions `c`, `s`
//! (`c(a) = 1, (p c')(a) = 0, s(a) = 0, (p s')(a) = 1`) and the rank-one Hamiltonian
//! `H_xi = w [[c^2, -s c], [-s c, s^2]]`, whose Weyl coefficient is `m(xi + z)`.

use crate::error::{Result, WeylError};
use crate::estimates::{theorem1_record, EstimateOptions};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, OmegaMatrix};
use crate::quad::gauss_legendre8;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A coefficient function of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coef {
    Constant { value: f64 },
    /// `coef * t^exponent`
    Power { coef: f64, exponent: f64 },
    /// `sum_k coeffs[k] t^k`
    Polynomial { coeffs: Vec<f64> },
}

impl Coef {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coef::Constant { value } => *value,
            Coef::Power { coef, exponent } => coef * t.powf(*exponent),
            Coef::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }
}

fn one() -> Coef {
    Coef::Constant { value: 1.0 }
}

fn zero() -> Coef {
    Coef::Constant { value: 0.0 }
}

fn default_t_max() -> f64 {
    200.0
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlProblem {
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub p: Coef,
    #[serde(default = "zero")]
    pub q: Coef,
    #[serde(default = "one")]
    pub w: Coef,
    #[serde(default)]
    pub xi: f64,
    /// right end of the solved range
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// local error target of the solver
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl SlProblem {
    pub fn free(xi: f64) -> Self {
        SlProblem { a: 0.0, p: one(), q: zero(), w: one(), xi, t_max: default_t_max(), tol: default_tol() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max > self.a && self.t_max.is_finite()) {
            return Err(WeylError::InvalidParams(format!("sl: need a < t_max, got [{}, {}]", self.a, self.t_max)));
        }
        if !(self.tol > 0.0) {
            return Err(WeylError::InvalidParams("sl: tol must be positive".into()));
        }
        for k in 0..=64 {
            let t = self.a + (self.t_max - self.a) * k as f64 / 64.0;
            let (p, w) = (self.p.eval(t), self.w.eval(t));
            if !(w > 0.0 && p != 0.0 && p.is_finite() && w.is_finite() && self.q.eval(t).is_finite()) {
                return Err(WeylError::InvalidParams(format!("sl: need w > 0 and finite p != 0 at t = {t}")));
            }
        }
        Ok(())
    }
}

/// `(y, p y')` for `c` and `s` at one node.
type State = [f64; 4];

/// Sampled solutions with cumulative Gram integrals.
#[derive(Debug, Clone)]
pub struct SlSolutions {
    problem: SlProblem,
    xi: f64,
    nodes: Vec<f64>,
    states: Vec<State>,
    /// `int_a^{t_k} w (c^2, s^2, c s)`
    gram: Vec<[f64; 3]>,
}

/// `exp(h M)` for the traceless `M = [[0, alpha], [beta, 0]]`.
fn step_matrix(alpha: f64, beta: f64, h: f64) -> [[f64; 2]; 2] {
    let d = alpha * beta * h * h;
    let (ch, sh) = if d > 0.0 {
        let k = d.sqrt();
        (k.cosh(), if k < 1e-8 { 1.0 + d / 6.0 } else { k.sinh() / k })
    } else {
        let k = (-d).sqrt();
        (k.cos(), if k < 1e-8 { 1.0 + d / 6.0 } else { k.sin() / k })
    };
    [[ch, sh * h * alpha], [sh * h * beta, ch]]
}

fn apply(m: &[[f64; 2]; 2], u: State) -> State {
    [
        m[0][0] * u[0] + m[0][1] * u[1],
        m[1][0] * u[0] + m[1][1] * u[1],
        m[0][0] * u[2] + m[0][1] * u[3],
        m[1][0] * u[2] + m[1][1] * u[3],
    ]
}

impl SlSolutions {
    fn coeffs(&self, t: f64) -> (f64, f64) {
        let pr = &self.problem;
        (1.0 / pr.p.eval(t), pr.q.eval(t) - self.xi * pr.w.eval(t))
    }

    fn frozen(&self, t0: f64, t1: f64) -> [[f64; 2]; 2] {
        let (alpha, beta) = self.coeffs(0.5 * (t0 + t1));
        step_matrix(alpha, beta, t1 - t0)
    }

    fn solve(&mut self) -> Result<()> {
        let (a, b, tol) = (self.problem.a, self.problem.t_max, self.problem.tol);
        let mut t = a;
        let mut u: State = [1.0, 0.0, 0.0, 1.0];
        let mut h = (b - a) * 1e-3;
        while t < b {
            let (alpha, beta) = self.coeffs(t);
            // cap the local phase so off-node evaluation stays accurate
            let hmax = 0.1 / (alpha * beta).abs().sqrt().max(1e-300);
            h = h.min(hmax).min(b - t);
            let t1 = if h >= b - t { b } else { t + h };
            let mid = 0.5 * (t + t1);
            if !(mid > t && t1 > mid) {
                return Err(WeylError::StepUnderflow { t });
            }
            let full = apply(&self.frozen(t, t1), u);
            let halves = apply(&self.frozen(mid, t1), apply(&self.frozen(t, mid), u));
            let scale = 1.0 + halves.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = full.iter().zip(&halves).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
            if err <= tol {
                self.nodes.push(t1);
                self.states.push(halves);
                u = halves;
                t = t1;
                h = (t1 - self.nodes[self.nodes.len() - 2]) * (0.9 * (tol / err.max(1e-300)).cbrt()).min(2.0);
            } else {
                h *= (0.9 * (tol / err).cbrt()).max(0.1);
            }
        }
        let mut gram = vec![[0.0; 3]];
        for k in 1..self.nodes.len() {
            let inc = gauss_legendre8(&|s| self.gram_integrand(k - 1, s), self.nodes[k - 1], self.nodes[k]);
            let prev = gram[k - 1];
            gram.push([prev[0] + inc[0], prev[1] + inc[1], prev[2] + inc[2]]);
        }
        self.gram = gram;
        Ok(())
    }

    /// Solution on panel `k`, advanced from the left node with the frozen two-half step.
    fn interp(&self, k: usize, t: f64) -> State {
        let t0 = self.nodes[k];
        if t <= t0 {
            return self.states[k];
        }
        let mid = 0.5 * (t0 + t);
        apply(&self.frozen(mid, t), apply(&self.frozen(t0, mid), self.states[k]))
    }

    fn gram_integrand(&self, k: usize, t: f64) -> [f64; 3] {
        let u = self.interp(k, t);
        let w = self.problem.w.eval(t);
        [w * u[0] * u[0], w * u[2] * u[2], w * u[0] * u[2]]
    }

    fn panel(&self, t: f64) -> Result<usize> {
        let (a, b) = (self.problem.a, self.problem.t_max);
        if !(t >= a && t <= b) {
            return Err(WeylError::OutOfDomain { t, a, b });
        }
        Ok(self.nodes.partition_point(|&n| n <= t).saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// `(c, p c', s, p s')` at `t`.
    pub fn eval(&self, t: f64) -> Result<State> {
        let k = self.panel(t)?;
        Ok(self.interp(k, t))
    }

    /// `(||c||^2, ||s||^2, (c, s))` in `L^2(w)` over `[a, t]`.
    pub fn gram(&self, t: f64) -> Result<[f64; 3]> {
        let k = self.panel(t)?;
        let inc = gauss_legendre8(&|s| self.gram_integrand(k, s), self.nodes[k], t);
        let g = self.gram[k];
        Ok([g[0] + inc[0], g[1] + inc[1], g[2] + inc[2]])
    }

    /// `p (c s' - c' s)`, identically one for exact solutions.
    pub fn wronskian(&self, t: f64) -> Result<f64> {
        let u = self.eval(t)?;
        Ok(u[0] * u[3] - u[1] * u[2])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

pub fn sl_solutions(problem: &SlProblem, xi: f64) -> Result<SlSolutions> {
    problem.validate()?;
    let mut s = SlSolutions {
        problem: problem.clone(),
        xi,
        nodes: vec![problem.a],
        states: vec![[1.0, 0.0, 0.0, 1.0]],
        gram: Vec::new(),
    };
    s.solve()?;
    Ok(s)
}

struct SlHamiltonian {
    sol: Arc<SlSolutions>,
}

impl Hamiltonian for SlHamiltonian {
    fn label(&self) -> String {
        format!("sturm_liouville(xi = {})", self.sol.xi)
    }

    fn left(&self) -> f64 {
        self.sol.problem.a
    }

    fn right(&self) -> f64 {
        self.sol.problem.t_max
    }

    fn density(&self, t: f64) -> Density {
        let Ok(u) = self.sol.eval(t) else {
            return Density::new(f64::NAN, f64::NAN, f64::NAN);
        };
        let w = self.sol.problem.w.eval(t);
        Density::new(w * u[0] * u[0], w * u[2] * u[2], -w * u[0] * u[2])
    }

    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        let g = self.sol.gram(t).ok()?;
        Some(OmegaMatrix::new(g[0], g[1], -g[2], t))
    }
}

/// `H_xi` on `[a, t_max)`; its Weyl coefficient at `z` equals `m(xi + z)`.
pub fn sl_to_hamiltonian(problem: &SlProblem) -> Result<HamiltonianModel> {
    let sol = sl_solutions(problem, problem.xi)?;
    Ok(HamiltonianModel::new(SlHamiltonian { sol: Arc::new(sol) }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T9Record {
    pub r: f64,
    pub t_hat: f64,
    /// `||c||^2 ||s||^2 - (c, s)^2` at `t_hat`
    pub gram_det: f64,
    pub m_re: f64,
    pub m_im: f64,
    /// `Im m(xi + ir) r ||s||^2`
    pub ratio_s: f64,
    /// `Im m / |m|^2 r ||c||^2`
    pub ratio_c: f64,
}

pub fn theorem_t9_check(problem: &SlProblem, r_grid: &[f64]) -> Result<Vec<T9Record>> {
    let model = sl_to_hamiltonian(problem)?;
    let opts = EstimateOptions { tol_factor: 1e-7, ..EstimateOptions::default() };
    r_grid
        .par_iter()
        .map(|&r| {
            let rec = theorem1_record(&model, r, &opts)?;
            let gram_det = rec.omega1_hat * rec.omega2_hat - rec.omega3_hat * rec.omega3_hat;
            Ok(T9Record {
                r,
                t_hat: rec.t_hat,
                gram_det,
                m_re: rec.q.0,
                m_im: rec.q.1,
                ratio_s: rec.ratio_im,
                ratio_c: rec.ratio_inv,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_solutions() {
        let s = sl_solutions(&SlProblem { t_max: 10.0, ..SlProblem::free(0.0) }, 0.0).unwrap();
        let u = s.eval(3.3).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-13 && (u[2] - 3.3).abs() < 1e-12);
        let g = s.gram(2.0).unwrap();
        assert!((g[1] - 8.0 / 3.0).abs() < 1e-12 && (g[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trigonometric_solutions_and_wronskian() {
        let s = sl_solutions(&SlProblem { t_max: 20.0, ..SlProblem::free(1.0) }, 1.0).unwrap();
        for t in [0.3, 4.1, 17.9] {
            let u = s.eval(t).unwrap();
            assert!((u[0] - t.cos()).abs() < 1e-8 && (u[2] - t.sin()).abs() < 1e-8, "{t}: {u:?}");
            assert!((s.wronskian(t).unwrap() - 1.0).abs() < 1e-8);
        }
        for &t in s.nodes() {
            assert!((s.wronskian(t).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
