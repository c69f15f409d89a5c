//! Hamiltonians on `[a, b)`, their primitives `Omega(t)` and the indivisible prefix thresholds.

use crate::error::{Result, WeylError};
use crate::quad;
use serde::Serialize;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Pointwise density `H(t) = [[h1, h3], [h3, h2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Density {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl Density {
    pub const fn new(h1: f64, h2: f64, h3: f64) -> Self {
        Density { h1, h2, h3 }
    }

    pub fn det(&self) -> f64 {
        self.h1 * self.h2 - self.h3 * self.h3
    }

    pub fn trace(&self) -> f64 {
        self.h1 + self.h2
    }

    pub fn scaled(&self, k: f64) -> Density {
        Density::new(k * self.h1, k * self.h2, k * self.h3)
    }

    /// Rank-one density `h * v v^T` with `v = (cos phi, sin phi)`.
    pub fn rank_one(h: f64, phi: f64) -> Density {
        let (s, c) = phi.sin_cos();
        Density::new(h * c * c, h * s * s, h * c * s)
    }

    pub(crate) fn as_array(&self) -> [f64; 3] {
        [self.h1, self.h2, self.h3]
    }
}

/// Entrywise primitive `Omega(t)` of the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaMatrix {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub t: f64,
}

impl OmegaMatrix {
    pub fn new(omega1: f64, omega2: f64, omega3: f64, t: f64) -> Self {
        OmegaMatrix { omega1, omega2, omega3, t }
    }

    pub(crate) fn from_array(v: [f64; 3], t: f64) -> Self {
        OmegaMatrix::new(v[0], v[1], v[2], t)
    }

    /// `omega1 omega2 - omega3^2`, clamped at zero.
    pub fn det(&self) -> f64 {
        (self.omega1 * self.omega2 - self.omega3 * self.omega3).max(0.0)
    }

    pub fn prod(&self) -> f64 {
        self.omega1 * self.omega2
    }

    pub fn trace(&self) -> f64 {
        self.omega1 + self.omega2
    }

    pub fn as_density(&self) -> Density {
        Density::new(self.omega1, self.omega2, self.omega3)
    }
}

/// Log-domain primitive for models whose `Omega` spans hundreds of orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOmega {
    pub ln_omega1: f64,
    pub ln_omega2: f64,
    /// `omega3 / sqrt(omega1 omega2)`
    pub f: f64,
    /// `ln(1 - f^2)` computed without cancellation
    pub ln_one_minus_f2: f64,
}

impl LogOmega {
    pub fn ln_prod(&self) -> f64 {
        self.ln_omega1 + self.ln_omega2
    }

    pub fn ln_det(&self) -> f64 {
        self.ln_prod() + self.ln_one_minus_f2
    }

    pub fn to_omega(&self, t: f64) -> OmegaMatrix {
        let w1 = self.ln_omega1.exp();
        let w2 = self.ln_omega2.exp();
        OmegaMatrix::new(w1, w2, self.f * (0.5 * self.ln_prod()).exp(), t)
    }
}

/// Indivisible tail on `[start, infinity)` of angle `angle`: there `H = h(t) v v^T` with
/// `v = (cos angle, sin angle)` and infinite mass, so `q = W(start) . cot(angle)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tail {
    pub start: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndivisibleInfo {
    pub a_ring: f64,
    pub a_hat: f64,
    pub leading_type: Option<f64>,
}

/// The evaluators a concrete Hamiltonian provides. Only `left` and `density` are
/// mandatory; everything else refines accuracy or speed.
pub trait Hamiltonian: Send + Sync {
    fn label(&self) -> String;
    fn left(&self) -> f64;
    fn right(&self) -> f64 {
        f64::INFINITY
    }
    /// Right-continuous density: at a breakpoint the formula of the piece to its right.
    fn density(&self, t: f64) -> Density;
    fn primitive(&self, _t: f64) -> Option<OmegaMatrix> {
        None
    }
    fn log_primitive(&self, _t: f64) -> Option<LogOmega> {
        None
    }
    /// Exact `Omega(hi) - Omega(lo)` for `lo < hi` inside one piece, when cheaply known.
    fn omega_increment(&self, _lo: f64, _hi: f64) -> Option<OmegaMatrix> {
        None
    }
    /// Sorted points in `(a, b)` where the density formula changes.
    fn breakpoints(&self) -> &[f64] {
        &[]
    }
    fn singular_left(&self) -> bool {
        false
    }
    /// True when `H = h(t) P` with a fixed matrix `P` on `[lo, hi]`, an interval that
    /// contains no breakpoint in its interior.
    fn commutes_on(&self, _lo: f64, _hi: f64) -> bool {
        false
    }
    fn tail(&self) -> Option<Tail> {
        None
    }
}

/// Numerical knobs shared by all model-level operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericOptions {
    pub quad_rel_tol: f64,
    pub quad_max_intervals: usize,
    /// relative to the reference scale `|t1 - a|`
    pub bisect_rel_tol: f64,
    pub psd_tol: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { quad_rel_tol: 1e-10, quad_max_intervals: 2000, bisect_rel_tol: 1e-12, psd_tol: 1e-10 }
    }
}

/// A shareable, immutable Hamiltonian plus numeric options.
#[derive(Clone)]
pub struct HamiltonianModel {
    inner: Arc<dyn Hamiltonian>,
    opts: NumericOptions,
    info: Arc<OnceLock<Result<IndivisibleInfo>>>,
}

impl fmt::Debug for HamiltonianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HamiltonianModel({})", self.inner.label())
    }
}

impl HamiltonianModel {
    pub fn new<H: Hamiltonian + 'static>(h: H) -> Self {
        Self::from_arc(Arc::new(h))
    }

    pub fn from_arc(inner: Arc<dyn Hamiltonian>) -> Self {
        HamiltonianModel { inner, opts: NumericOptions::default(), info: Arc::new(OnceLock::new()) }
    }

    pub fn with_options(mut self, opts: NumericOptions) -> Self {
        self.opts = opts;
        self.info = Arc::new(OnceLock::new());
        self
    }

    pub fn options(&self) -> &NumericOptions {
        &self.opts
    }

    pub fn inner(&self) -> &Arc<dyn Hamiltonian> {
        &self.inner
    }

    pub fn label(&self) -> String {
        self.inner.label()
    }

    pub fn a(&self) -> f64 {
        self.inner.left()
    }

    pub fn b(&self) -> f64 {
        self.inner.right()
    }

    pub fn singular_left(&self) -> bool {
        self.inner.singular_left()
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.inner.breakpoints()
    }

    pub fn tail(&self) -> Option<Tail> {
        self.inner.tail()
    }

    pub fn has_closed_form(&self) -> bool {
        let t = self.probe_point();
        self.inner.primitive(t).is_some() || self.inner.log_primitive(t).is_some()
    }

    fn probe_point(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        if b.is_finite() {
            a + 0.5 * (b - a)
        } else {
            a + 0.5
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (a, b) = (self.a(), self.b());
        if !(t >= a && t < b) {
            return Err(WeylError::OutOfDomain { t, a, b });
        }
        Ok(())
    }

    /// Density with domain and positive-semidefiniteness checks.
    pub fn eval_density(&self, t: f64) -> Result<Density> {
        self.check_domain(t)?;
        let d = self.inner.density(t);
        let scale = (d.h1 * d.h2).abs().max(d.h3 * d.h3).max(f64::MIN_POSITIVE);
        let tol = self.opts.psd_tol;
        if d.h1 < -tol * d.h2.abs().max(1.0) || d.h2 < -tol * d.h1.abs().max(1.0) || d.det() < -tol * scale {
            return Err(WeylError::NonPsd { t, defect: d.det() });
        }
        Ok(d)
    }

    /// `Omega(t)`: closed form when available, adaptive quadrature otherwise.
    pub fn omega(&self, t: f64) -> Result<OmegaMatrix> {
        let a = self.a();
        if !(t >= a && t <= self.b()) {
            return Err(WeylError::OutOfDomain { t, a, b: self.b() });
        }
        if t == a {
            return Ok(OmegaMatrix::new(0.0, 0.0, 0.0, t));
        }
        if let Some(o) = self.inner.primitive(t) {
            return Ok(o);
        }
        if let Some(l) = self.inner.log_primitive(t) {
            return Ok(l.to_omega(t));
        }
        self.omega_by_quadrature(t)
    }

    /// Quadrature path regardless of closed forms; pieces split at breakpoints.
    pub fn omega_by_quadrature(&self, t: f64) -> Result<OmegaMatrix> {
        let a = self.a();
        if !(t >= a && t <= self.b()) {
            return Err(WeylError::OutOfDomain { t, a, b: self.b() });
        }
        let f = |s: f64| self.inner.density(s).as_array();
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().iter().copied().filter(|&x| x > a && x < t));
        cuts.push(t);
        let mut acc = [0.0; 3];
        for (k, w) in cuts.windows(2).enumerate() {
            let v = if k == 0 && self.singular_left() {
                quad::integrate3_singular_left(&f, w[0], w[1], self.opts.quad_rel_tol, self.opts.quad_max_intervals)?
            } else {
                quad::integrate3(&f, w[0], w[1], self.opts.quad_rel_tol, self.opts.quad_max_intervals)?.0
            };
            for i in 0..3 {
                acc[i] += v[i];
            }
        }
        Ok(OmegaMatrix::from_array(acc, t))
    }

    /// `Omega(hi) - Omega(lo)` for an interval inside one piece.
    pub fn omega_between(&self, lo: f64, hi: f64) -> Result<OmegaMatrix> {
        if hi <= lo {
            return Ok(OmegaMatrix::new(0.0, 0.0, 0.0, hi));
        }
        if let Some(o) = self.inner.omega_increment(lo, hi) {
            return Ok(o);
        }
        if lo == self.a() {
            return self.omega(hi);
        }
        if let Some(o2) = self.inner.primitive(hi) {
            let o1 = self.inner.primitive(lo).expect("primitive defined on the whole domain");
            return Ok(OmegaMatrix::new(o2.omega1 - o1.omega1, o2.omega2 - o1.omega2, o2.omega3 - o1.omega3, hi));
        }
        let f = |s: f64| self.inner.density(s).as_array();
        let (v, _) = quad::integrate3(&f, lo, hi, self.opts.quad_rel_tol, self.opts.quad_max_intervals)?;
        Ok(OmegaMatrix::from_array(v, hi))
    }

    /// Gauss-Legendre increment for short propagation steps.
    pub(crate) fn omega_step(&self, lo: f64, hi: f64) -> OmegaMatrix {
        if let Some(o) = self.inner.omega_increment(lo, hi) {
            return o;
        }
        let f = |s: f64| self.inner.density(s).as_array();
        OmegaMatrix::from_array(quad::gauss_legendre8(&f, lo, hi), hi)
    }

    /// Log-domain view of `Omega(t)`; `-inf` logs where a component vanishes.
    pub fn log_omega(&self, t: f64) -> Result<LogOmega> {
        if t > self.a() {
            if let Some(l) = self.inner.log_primitive(t) {
                return Ok(l);
            }
        }
        let o = self.omega(t)?;
        let prod = o.prod();
        let f = if prod > 0.0 { (o.omega3 / prod.sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        let det = o.det();
        let ln_det = det.ln();
        Ok(LogOmega {
            ln_omega1: o.omega1.ln(),
            ln_omega2: o.omega2.ln(),
            f,
            ln_one_minus_f2: if prod > 0.0 { ln_det - prod.ln() } else { 0.0 },
        })
    }

    pub fn ln_det_omega(&self, t: f64) -> Result<f64> {
        if t > self.a() {
            if let Some(l) = self.inner.log_primitive(t) {
                return Ok(l.ln_det());
            }
        }
        Ok(self.omega(t)?.det().ln())
    }

    pub fn ln_omega_prod(&self, t: f64) -> Result<f64> {
        if t > self.a() {
            if let Some(l) = self.inner.log_primitive(t) {
                return Ok(l.ln_prod());
            }
        }
        Ok(self.omega(t)?.prod().ln())
    }

    /// `det Omega(t)`, via `(omega1 omega2)(1 - f^2)` when a log primitive exists.
    pub fn det_omega(&self, t: f64) -> Result<f64> {
        Ok(self.ln_det_omega(t)?.exp())
    }

    pub fn omega_prod(&self, t: f64) -> Result<f64> {
        Ok(self.ln_omega_prod(t)?.exp())
    }

    /// A point `t1 > a` with `g(t1) > -inf`, scanning outward geometrically.
    fn reference_point(&self, g: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let (a, b) = (self.a(), self.b());
        let mut s = if b.is_finite() { 0.5 * (b - a) } else { 1.0 };
        for _ in 0..2100 {
            let t = a + s;
            if t >= b {
                break;
            }
            if g(t)? > f64::NEG_INFINITY {
                return Ok(t);
            }
            s *= 2.0;
            if !s.is_finite() {
                break;
            }
        }
        Err(WeylError::DegenerateModel(format!("{}: det Omega vanishes on every sampled t", self.label())))
    }

    /// `inf { t : g(t) > -inf }` for a nondecreasing log-valued `g`.
    fn leftmost_positive(&self, g: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let a = self.a();
        let mut hi = self.reference_point(g)?;
        let tol = self.opts.bisect_rel_tol * (hi - a);
        if g(a + tol)? > f64::NEG_INFINITY {
            return Ok(a);
        }
        let mut lo = a + tol;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if g(mid)? > f64::NEG_INFINITY {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for &bp in self.breakpoints() {
            if (bp - hi).abs() <= 2.0 * tol {
                return Ok(bp);
            }
        }
        if let Some(tail) = self.tail() {
            if (tail.start - hi).abs() <= 2.0 * tol {
                return Ok(tail.start);
            }
        }
        Ok(hi)
    }

    /// Thresholds `a_ring`, `a_hat` and the angle of an indivisible prefix.
    pub fn indivisible_info(&self) -> Result<IndivisibleInfo> {
        self.info.get_or_init(|| self.compute_indivisible_info()).clone()
    }

    fn compute_indivisible_info(&self) -> Result<IndivisibleInfo> {
        let a = self.a();
        let a_hat = self.leftmost_positive(&|t| self.ln_det_omega(t))?;
        let a_ring = self.leftmost_positive(&|t| self.ln_omega_prod(t))?;
        let leading_type = if a_hat > a {
            let o = self.omega(a_hat)?;
            let mut phi = (o.omega3.signum() * o.omega2.max(0.0).sqrt()).atan2(o.omega1.max(0.0).sqrt());
            if phi < 0.0 {
                phi += std::f64::consts::PI;
            }
            Some(phi)
        } else {
            None
        };
        Ok(IndivisibleInfo { a_ring, a_hat, leading_type })
    }

    /// Sample-grid sanity checks: PSD density, definiteness and growth of `tr Omega`.
    pub fn validate(&self) -> Result<()> {
        let a = self.a();
        let b = self.b();
        let span = if b.is_finite() { b - a } else { 16.0 };
        for k in 1..64 {
            let t = a + span * (k as f64 / 64.0);
            if t < b {
                self.eval_density(t)?;
            }
        }
        self.indivisible_info()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PiecewiseConstant;

    #[test]
    fn identity_density_and_omega() {
        let m = HamiltonianModel::new(PiecewiseConstant::constant(Density::new(1.0, 1.0, 0.0), 0.0));
        assert_eq!(m.eval_density(1.0).unwrap(), Density::new(1.0, 1.0, 0.0));
        let o = m.omega(2.0).unwrap();
        assert_eq!((o.omega1, o.omega2, o.omega3), (2.0, 2.0, 0.0));
        assert!((m.det_omega(3.0).unwrap() - 9.0).abs() < 1e-12);
        let info = m.indivisible_info().unwrap();
        assert_eq!((info.a_ring, info.a_hat, info.leading_type), (0.0, 0.0, None));
    }

    #[test]
    fn out_of_domain_and_nonpsd() {
        let m = HamiltonianModel::new(PiecewiseConstant::constant(Density::new(1.0, 1.0, 0.0), 0.0));
        assert!(matches!(m.eval_density(-1.0), Err(WeylError::OutOfDomain { .. })));
        let bad = PiecewiseConstant::new(vec![(0.0, Density::new(1.0, 1.0, 2.0))]);
        assert!(matches!(bad, Err(WeylError::NonPsd { .. })));
    }

    #[test]
    fn type_zero_prefix() {
        let m = HamiltonianModel::new(
            PiecewiseConstant::new(vec![(0.0, Density::new(1.0, 0.0, 0.0)), (1.0, Density::new(1.0, 1.0, 0.0))]).unwrap(),
        );
        let info = m.indivisible_info().unwrap();
        assert_eq!(info.a_ring, 1.0);
        assert_eq!(info.a_hat, 1.0);
        assert_eq!(info.leading_type, Some(0.0));
    }

    #[test]
    fn quadrature_matches_primitive() {
        let m = HamiltonianModel::new(
            PiecewiseConstant::new(vec![(0.0, Density::new(2.0, 0.5, 1.0)), (0.7, Density::new(1.0, 3.0, -1.0))]).unwrap(),
        );
        let exact = m.omega(2.0).unwrap();
        let quad = m.omega_by_quadrature(2.0).unwrap();
        assert!((exact.omega1 - quad.omega1).abs() < 1e-12);
        assert!((exact.omega3 - quad.omega3).abs() < 1e-12);
    }
}
