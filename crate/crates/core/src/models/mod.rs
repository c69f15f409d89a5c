//! Generic building blocks: piecewise-constant tables and model transformations.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, LogOmega, OmegaMatrix, Tail};
use std::f64::consts::PI;
use std::sync::Arc;

/// Angle in `[0, pi)` of the range of a rank-one PSD matrix.
pub fn rank_one_angle(d: &Density) -> f64 {
    let phi = (d.h3.signum() * d.h2.max(0.0).sqrt()).atan2(d.h1.max(0.0).sqrt());
    if phi < 0.0 {
        phi + PI
    } else {
        phi
    }
}

fn is_rank_one(d: &Density) -> bool {
    d.trace() > 0.0 && d.det().abs() <= 1e-14 * d.trace() * d.trace()
}

/// Piecewise-constant density: row `k` applies on `[t_k, t_{k+1})`, the last row to infinity.
#[derive(Debug, Clone)]
pub struct PiecewiseConstant {
    starts: Vec<f64>,
    values: Vec<Density>,
    cumulative: Vec<[f64; 3]>,
}

impl PiecewiseConstant {
    pub fn new(rows: Vec<(f64, Density)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(WeylError::InvalidParams("table needs at least one row".into()));
        }
        for w in rows.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(WeylError::InvalidParams(format!("table rows not strictly increasing at t = {}", w[1].0)));
            }
        }
        for (t, d) in &rows {
            if d.h1 < 0.0 || d.h2 < 0.0 || d.det() < -1e-12 * d.trace().powi(2) {
                return Err(WeylError::NonPsd { t: *t, defect: d.det() });
            }
            if !(d.h1.is_finite() && d.h2.is_finite() && d.h3.is_finite() && t.is_finite()) {
                return Err(WeylError::InvalidParams(format!("non-finite table row at t = {t}")));
            }
        }
        let last = rows.last().expect("nonempty").1;
        if last.trace() <= 0.0 {
            return Err(WeylError::InvalidParams("last table row must have positive trace (limit point)".into()));
        }
        let mut cumulative = vec![[0.0; 3]];
        for w in rows.windows(2) {
            let dt = w[1].0 - w[0].0;
            let prev = *cumulative.last().expect("seeded");
            let d = w[0].1;
            cumulative.push([prev[0] + dt * d.h1, prev[1] + dt * d.h2, prev[2] + dt * d.h3]);
        }
        let (starts, values) = rows.into_iter().unzip();
        Ok(PiecewiseConstant { starts, values, cumulative })
    }

    pub fn constant(d: Density, a: f64) -> Self {
        PiecewiseConstant::new(vec![(a, d)]).expect("valid constant model")
    }

    fn piece(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }
}

impl Hamiltonian for PiecewiseConstant {
    fn label(&self) -> String {
        if self.values.len() == 1 {
            let d = self.values[0];
            format!("constant({}, {}, {})", d.h1, d.h2, d.h3)
        } else {
            format!("table({} rows)", self.values.len())
        }
    }

    fn left(&self) -> f64 {
        self.starts[0]
    }

    fn density(&self, t: f64) -> Density {
        self.values[self.piece(t)]
    }

    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        let k = self.piece(t);
        let dt = t - self.starts[k];
        let c = self.cumulative[k];
        let d = self.values[k];
        Some(OmegaMatrix::new(c[0] + dt * d.h1, c[1] + dt * d.h2, c[2] + dt * d.h3, t))
    }

    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        let d = self.values[self.piece(lo)];
        let dt = hi - lo;
        Some(OmegaMatrix::new(dt * d.h1, dt * d.h2, dt * d.h3, hi))
    }

    fn breakpoints(&self) -> &[f64] {
        &self.starts[1..]
    }

    fn commutes_on(&self, _lo: f64, _hi: f64) -> bool {
        true
    }

    fn tail(&self) -> Option<Tail> {
        let last = self.values.last().expect("nonempty");
        if is_rank_one(last) {
            Some(Tail { start: *self.starts.last().expect("nonempty"), angle: rank_one_angle(last) })
        } else {
            None
        }
    }
}

/// `k H` for a scalar `k > 0`; its Weyl coefficient is `q_H(k z)`.
pub struct Scaled {
    inner: Arc<dyn Hamiltonian>,
    k: f64,
}

impl Scaled {
    pub fn new(model: &HamiltonianModel, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(WeylError::InvalidParams(format!("scale factor must be positive, got {k}")));
        }
        Ok(Scaled { inner: model.inner().clone(), k })
    }
}

impl Hamiltonian for Scaled {
    fn label(&self) -> String {
        format!("{} * {}", self.k, self.inner.label())
    }
    fn left(&self) -> f64 {
        self.inner.left()
    }
    fn right(&self) -> f64 {
        self.inner.right()
    }
    fn density(&self, t: f64) -> Density {
        self.inner.density(t).scaled(self.k)
    }
    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        self.inner.primitive(t).map(|o| OmegaMatrix::new(self.k * o.omega1, self.k * o.omega2, self.k * o.omega3, t))
    }
    fn log_primitive(&self, t: f64) -> Option<LogOmega> {
        let lk = self.k.ln();
        self.inner.log_primitive(t).map(|l| LogOmega { ln_omega1: l.ln_omega1 + lk, ln_omega2: l.ln_omega2 + lk, ..l })
    }
    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        self.inner
            .omega_increment(lo, hi)
            .map(|o| OmegaMatrix::new(self.k * o.omega1, self.k * o.omega2, self.k * o.omega3, hi))
    }
    fn breakpoints(&self) -> &[f64] {
        self.inner.breakpoints()
    }
    fn singular_left(&self) -> bool {
        self.inner.singular_left()
    }
    fn commutes_on(&self, lo: f64, hi: f64) -> bool {
        self.inner.commutes_on(lo, hi)
    }
    fn tail(&self) -> Option<Tail> {
        self.inner.tail()
    }
}

/// The same model with the off-diagonal entry removed.
pub struct DiagonalPart {
    inner: Arc<dyn Hamiltonian>,
}

impl DiagonalPart {
    pub fn new(model: &HamiltonianModel) -> Self {
        DiagonalPart { inner: model.inner().clone() }
    }
}

impl Hamiltonian for DiagonalPart {
    fn label(&self) -> String {
        format!("diag part of {}", self.inner.label())
    }
    fn left(&self) -> f64 {
        self.inner.left()
    }
    fn right(&self) -> f64 {
        self.inner.right()
    }
    fn density(&self, t: f64) -> Density {
        let d = self.inner.density(t);
        Density::new(d.h1, d.h2, 0.0)
    }
    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        self.inner.primitive(t).map(|o| OmegaMatrix::new(o.omega1, o.omega2, 0.0, t))
    }
    fn log_primitive(&self, t: f64) -> Option<LogOmega> {
        self.inner.log_primitive(t).map(|l| LogOmega { f: 0.0, ln_one_minus_f2: 0.0, ..l })
    }
    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        self.inner.omega_increment(lo, hi).map(|o| OmegaMatrix::new(o.omega1, o.omega2, 0.0, hi))
    }
    fn breakpoints(&self) -> &[f64] {
        self.inner.breakpoints()
    }
    fn singular_left(&self) -> bool {
        self.inner.singular_left()
    }
    fn commutes_on(&self, lo: f64, hi: f64) -> bool {
        self.inner.commutes_on(lo, hi)
    }
    fn tail(&self) -> Option<Tail> {
        // only axis-aligned rank-one tails survive dropping h3
        self.inner.tail().filter(|t| t.angle == 0.0 || (t.angle - PI / 2.0).abs() < 1e-15)
    }
}

/// `M H M^T` for `M` in `SL(2, R)`; the Weyl coefficient transforms as `q -> M . q`.
pub struct Congruence {
    inner: Arc<dyn Hamiltonian>,
    m: [[f64; 2]; 2],
}

impl Congruence {
    pub fn new(model: &HamiltonianModel, m: [[f64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - 1.0).abs() > 1e-12 {
            return Err(WeylError::InvalidParams(format!("congruence matrix must have det 1, got {det}")));
        }
        Ok(Congruence { inner: model.inner().clone(), m })
    }

    /// `[[1, p], [0, 1]] H [[1, 0], [p, 1]]`, which shifts `q` by `p`.
    pub fn shift(model: &HamiltonianModel, p: f64) -> Self {
        Congruence { inner: model.inner().clone(), m: [[1.0, p], [0.0, 1.0]] }
    }

    /// `J^T H J`, which maps `q` to `-1/q`.
    pub fn flip(model: &HamiltonianModel) -> Self {
        Congruence { inner: model.inner().clone(), m: [[0.0, 1.0], [-1.0, 0.0]] }
    }

    fn apply(&self, h1: f64, h2: f64, h3: f64) -> [f64; 3] {
        let [[a, b], [c, d]] = self.m;
        [
            a * a * h1 + 2.0 * a * b * h3 + b * b * h2,
            c * c * h1 + 2.0 * c * d * h3 + d * d * h2,
            a * c * h1 + (a * d + b * c) * h3 + b * d * h2,
        ]
    }
}

impl Hamiltonian for Congruence {
    fn label(&self) -> String {
        format!("{:?} . {}", self.m, self.inner.label())
    }
    fn left(&self) -> f64 {
        self.inner.left()
    }
    fn right(&self) -> f64 {
        self.inner.right()
    }
    fn density(&self, t: f64) -> Density {
        let d = self.inner.density(t);
        let v = self.apply(d.h1, d.h2, d.h3);
        Density::new(v[0], v[1], v[2])
    }
    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        let o = self.inner.primitive(t).or_else(|| self.inner.log_primitive(t).map(|l| l.to_omega(t)))?;
        Some(OmegaMatrix::from_array(self.apply(o.omega1, o.omega2, o.omega3), t))
    }
    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        let o = self.inner.omega_increment(lo, hi)?;
        Some(OmegaMatrix::from_array(self.apply(o.omega1, o.omega2, o.omega3), hi))
    }
    fn breakpoints(&self) -> &[f64] {
        self.inner.breakpoints()
    }
    fn singular_left(&self) -> bool {
        self.inner.singular_left()
    }
    fn commutes_on(&self, lo: f64, hi: f64) -> bool {
        self.inner.commutes_on(lo, hi)
    }
    fn tail(&self) -> Option<Tail> {
        let tail = self.inner.tail()?;
        let (s, c) = tail.angle.sin_cos();
        let [[a, b], [cc, d]] = self.m;
        let d = rank_one_angle(&Density::rank_one(1.0, (cc * c + d * s).atan2(a * c + b * s)));
        Some(Tail { start: tail.start, angle: d })
    }
}

/// `H` restricted to `[start, b)`.
pub struct Restricted {
    inner: Arc<dyn Hamiltonian>,
    start: f64,
    breaks: Vec<f64>,
}

impl Restricted {
    pub fn new(model: &HamiltonianModel, start: f64) -> Result<Self> {
        if !(start >= model.a() && start < model.b()) {
            return Err(WeylError::OutOfDomain { t: start, a: model.a(), b: model.b() });
        }
        let breaks = model.breakpoints().iter().copied().filter(|&x| x > start).collect();
        Ok(Restricted { inner: model.inner().clone(), start, breaks })
    }
}

impl Hamiltonian for Restricted {
    fn label(&self) -> String {
        format!("{} on [{}, b)", self.inner.label(), self.start)
    }
    fn left(&self) -> f64 {
        self.start
    }
    fn right(&self) -> f64 {
        self.inner.right()
    }
    fn density(&self, t: f64) -> Density {
        self.inner.density(t)
    }
    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        let o = self.inner.primitive(t)?;
        let s = self.inner.primitive(self.start)?;
        Some(OmegaMatrix::new(o.omega1 - s.omega1, o.omega2 - s.omega2, o.omega3 - s.omega3, t))
    }
    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        self.inner.omega_increment(lo, hi)
    }
    fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }
    fn commutes_on(&self, lo: f64, hi: f64) -> bool {
        self.inner.commutes_on(lo, hi)
    }
    fn tail(&self) -> Option<Tail> {
        self.inner.tail().map(|t| Tail { start: t.start.max(self.start), ..t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_primitive_and_tail() {
        let t = PiecewiseConstant::new(vec![
            (0.0, Density::new(1.0, 1.0, 0.0)),
            (2.0, Density::new(0.0, 3.0, 0.0)),
        ])
        .unwrap();
        let o = t.primitive(3.0).unwrap();
        assert_eq!((o.omega1, o.omega2), (2.0, 5.0));
        let tail = t.tail().unwrap();
        assert_eq!(tail.start, 2.0);
        assert!((tail.angle - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsorted_rows() {
        let r = PiecewiseConstant::new(vec![(1.0, Density::new(1.0, 1.0, 0.0)), (0.5, Density::new(1.0, 1.0, 0.0))]);
        assert!(r.is_err());
    }

    #[test]
    fn congruence_flip_swaps_diagonal() {
        let m = HamiltonianModel::new(PiecewiseConstant::constant(Density::new(4.0, 1.0, 0.5), 0.0));
        let f = Congruence::flip(&m);
        let d = f.density(1.0);
        assert_eq!((d.h1, d.h2, d.h3), (1.0, 4.0, -0.5));
    }
}
