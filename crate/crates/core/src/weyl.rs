//! Transfer matrices `W(t, z)`, Weyl disks and certified evaluation of `q_H(z)`.
//!
//! `W` solves `W' J = z W H` with `W(a) = I`, so it is built by right-multiplying
//! increments `exp(-z dOmega J)`. On pieces where `H = h(t) P` these increments are
//! exact; elsewhere each step freezes the exact average of `H` (second order) and the
//! step size is controlled by comparing one full step with two half steps.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, HamiltonianModel, OmegaMatrix};
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::scales;
use serde::Serialize;

/// `W(t, z)` stored as `exp(log_scale) * w` with `max |w_ij| = 1` once it grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub w: Mat2,
    pub log_scale: f64,
    pub t: f64,
    pub z: C64,
}

impl TransferMatrix {
    pub fn identity(t: f64, z: C64) -> Self {
        TransferMatrix { w: Mat2::IDENTITY, log_scale: 0.0, t, z }
    }

    /// Unscaled entries; may overflow for very large `|W|`.
    pub fn entries(&self) -> Mat2 {
        self.w.scale(self.log_scale.exp())
    }

    pub fn det(&self) -> C64 {
        self.w.det() * (2.0 * self.log_scale).exp()
    }

    /// `log max |w_ij|` of the unscaled matrix.
    pub fn ln_norm(&self) -> f64 {
        self.log_scale + self.w.max_abs().ln()
    }

    fn renormalize(&mut self) {
        let n = self.w.max_abs();
        if n > 1e64 || (n < 1e-64 && n > 0.0) {
            self.w = self.w.scale(1.0 / n);
            self.log_scale += n.ln();
        }
    }

    fn mul_right(&mut self, e: &Increment) {
        self.w = self.w * e.m;
        self.log_scale += e.log_scale;
        self.renormalize();
    }

    /// `W . tau` for `tau` in the closed upper half-plane; `None` is `tau = infinity`.
    pub fn apply(&self, tau: Option<C64>) -> Option<C64> {
        self.w.mobius(tau)
    }
}

/// `exp(log_scale) * m`.
#[derive(Debug, Clone, Copy)]
struct Increment {
    m: Mat2,
    log_scale: f64,
}

impl Increment {
    fn unscaled(&self) -> Mat2 {
        self.m.scale(self.log_scale.exp())
    }
}

fn increment(h1: f64, h2: f64, h3: f64, dt: f64, z: C64) -> Result<Increment> {
    let det = h1 * h2 - h3 * h3;
    let scale = (h1 * h2).abs().max(h3 * h3);
    if h1 < 0.0 || h2 < 0.0 || det < -1e-8 * scale {
        return Err(WeylError::NonPsd { t: f64::NAN, defect: det });
    }
    let s = -z * dt;
    let hj = Mat2::new(C64::from(h3), C64::from(-h1), C64::from(h2), C64::from(-h3));
    let mu = s * det.max(0.0).sqrt();
    let (c, sinc, log_scale) = if mu.norm() < 1e-3 {
        let m2 = mu * mu;
        (
            ONE - m2 * (0.5 - m2 * (1.0 / 24.0 - m2 / 720.0)),
            ONE - m2 * (1.0 / 6.0 - m2 * (1.0 / 120.0 - m2 / 5040.0)),
            0.0,
        )
    } else if mu.im.abs() < 300.0 {
        (mu.cos(), mu.sin() / mu, 0.0)
    } else {
        // factor out exp(|Im mu|) so that neither branch overflows
        let g = mu.im.abs();
        let i = C64::new(0.0, 1.0);
        let ep = (i * mu - g).exp();
        let em = (-i * mu - g).exp();
        ((ep + em) * 0.5, (ep - em) / (2.0 * i) / mu, g)
    };
    let mut m = hj.scale(1.0);
    for row in m.m.iter_mut() {
        for e in row.iter_mut() {
            *e *= s * sinc;
        }
    }
    m.m[0][0] += c;
    m.m[1][1] += c;
    Ok(Increment { m, log_scale })
}

/// `exp(-z dt H J)` for a constant PSD density, via `(HJ)^2 = -det H I`.
pub fn segment_exponential(d: Density, dt: f64, z: C64) -> Result<Mat2> {
    if dt < 0.0 {
        return Err(WeylError::InvalidParams(format!("negative step {dt}")));
    }
    Ok(increment(d.h1, d.h2, d.h3, dt, z)?.unscaled())
}

fn omega_increment(o: &OmegaMatrix, z: C64) -> Result<Increment> {
    increment(o.omega1, o.omega2, o.omega3, 1.0, z)
}

/// Disk `{ W . tau : Im tau >= 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylDisk {
    pub center: (f64, f64),
    pub radius: f64,
    /// floating-point error of the center from cancellation in the denominator
    pub rounding: f64,
}

impl WeylDisk {
    pub fn center(&self) -> C64 {
        C64::new(self.center.0, self.center.1)
    }

    pub fn contains(&self, p: C64, slack: f64) -> bool {
        (p - self.center()).norm() <= self.radius + slack
    }
}

/// Center and radius of the Weyl disk of `W` (assumed `det W = 1`).
pub fn weyl_disk(tm: &TransferMatrix) -> Result<WeylDisk> {
    let n = tm.w.scale(1.0 / tm.w.max_abs());
    let ls = tm.log_scale + tm.w.max_abs().ln();
    let [[w11, w12], [w21, w22]] = n.m;
    let im = (w21 * w22.conj()).im;
    if im.abs() <= 1e-15 * (w21.norm() * w22.norm()).max(1e-300) || im == 0.0 {
        return Err(WeylError::DegenerateDisk { t: tm.t, im });
    }
    let denom = w21 * w22.conj() - w21.conj() * w22;
    let center = (w11 * w22.conj() - w12 * w21.conj()) / denom;
    let radius = (-2.0 * ls).exp() / denom.norm();
    // first-order bound for the products in numerator and denominator
    let num_mag = w11.norm() * w22.norm() + w12.norm() * w21.norm();
    let den_mag = 2.0 * w21.norm() * w22.norm();
    let rounding = 4.0 * f64::EPSILON * (num_mag + center.norm() * den_mag) / denom.norm();
    Ok(WeylDisk { center: (center.re, center.im), radius, rounding })
}

/// A value of `q_H(z)` with `|q_H(z) - value| <= error_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QEvaluation {
    pub value: (f64, f64),
    pub error_radius: f64,
    pub t_used: f64,
    pub z: (f64, f64),
}

impl QEvaluation {
    pub fn q(&self) -> C64 {
        C64::new(self.value.0, self.value.1)
    }
}

/// Engine knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    /// local relative error target per step
    pub ode_tol: f64,
    /// `|z| tr Omega` below which `W = exp(-z Omega J)` is used directly
    pub start_eps: f64,
    pub max_doublings: usize,
    pub max_steps: usize,
    pub check_nesting: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { ode_tol: 1e-9, start_eps: 1e-7, max_doublings: 200, max_steps: 5_000_000, check_nesting: true }
    }
}

/// Incremental propagation of a fine and a coarse product from `a` onwards.
pub struct Propagator<'m> {
    model: &'m HamiltonianModel,
    z: C64,
    opts: EvalOptions,
    cuts: Vec<f64>,
    fine: TransferMatrix,
    coarse: TransferMatrix,
    h: f64,
    pub steps: usize,
}

impl<'m> Propagator<'m> {
    pub fn new(model: &'m HamiltonianModel, z: C64, opts: EvalOptions) -> Self {
        let a = model.a();
        let mut cuts: Vec<f64> = model.breakpoints().to_vec();
        if let Some(tail) = model.tail() {
            cuts.push(tail.start);
        }
        cuts.retain(|&c| c > a);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let id = TransferMatrix::identity(a, z);
        Propagator { model, z, opts, cuts, fine: id, coarse: id, h: 0.0, steps: 0 }
    }

    pub fn t(&self) -> f64 {
        self.fine.t
    }

    pub fn fine(&self) -> &TransferMatrix {
        &self.fine
    }

    pub fn coarse(&self) -> &TransferMatrix {
        &self.coarse
    }

    fn next_cut(&self, t: f64) -> f64 {
        let i = self.cuts.partition_point(|&c| c <= t);
        self.cuts.get(i).copied().unwrap_or(f64::INFINITY)
    }

    fn multiply_both(&mut self, e: &Increment, t: f64) {
        self.fine.mul_right(e);
        self.coarse.mul_right(e);
        self.fine.t = t;
        self.coarse.t = t;
    }

    /// Advance both products to `target`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        let a = self.model.a();
        if target < self.t() {
            return Err(WeylError::InvalidParams(format!("cannot propagate backwards to {target}")));
        }
        if target >= self.model.b() {
            return Err(WeylError::OutOfDomain { t: target, a, b: self.model.b() });
        }
        if self.z == ZERO {
            self.fine.t = target;
            self.coarse.t = target;
            return Ok(());
        }
        while self.t() < target {
            let t = self.t();
            let end = self.next_cut(t).min(target);
            if self.model.inner().commutes_on(t, end) {
                let inc = omega_increment(&self.model.omega_between(t, end)?, self.z)?;
                self.multiply_both(&inc, end);
                continue;
            }
            if t == a {
                self.initial_chunk(end)?;
                continue;
            }
            self.adaptive(end)?;
        }
        Ok(())
    }

    /// First-term Magnus start on `[a, t0]` where `|z| tr Omega(t0)` is tiny.
    fn initial_chunk(&mut self, end: f64) -> Result<()> {
        let a = self.model.a();
        let zabs = self.z.norm();
        let mut s = end - a;
        loop {
            let o = self.model.omega(a + s)?;
            if zabs * o.trace() <= self.opts.start_eps || s < 1e-300 {
                let inc = omega_increment(&o, self.z)?;
                self.multiply_both(&inc, a + s);
                self.h = s;
                return Ok(());
            }
            s *= 0.5;
            if a + s == a {
                return Err(WeylError::StepUnderflow { t: a });
            }
        }
    }

    fn adaptive(&mut self, end: f64) -> Result<()> {
        let a = self.model.a();
        let tol = self.opts.ode_tol;
        let singular = self.model.singular_left();
        let mut h = if self.h > 0.0 { self.h } else { end - self.t() };
        while self.t() < end {
            let t = self.t();
            if singular {
                h = h.min(t - a);
            }
            let last = h >= end - t;
            if last {
                h = end - t;
            }
            let t1 = if last { end } else { t + h };
            let mid = t + 0.5 * (t1 - t);
            if !(mid > t && t1 > mid) {
                return Err(WeylError::StepUnderflow { t });
            }
            let o1 = self.model.omega_step(t, mid);
            let o2 = self.model.omega_step(mid, t1);
            let full = OmegaMatrix::new(o1.omega1 + o2.omega1, o1.omega2 + o2.omega2, o1.omega3 + o2.omega3, t1);
            let e1 = omega_increment(&o1, self.z)?;
            let e2 = omega_increment(&o2, self.z)?;
            let ef = omega_increment(&full, self.z)?;
            let halves = Increment { m: e1.m * e2.m, log_scale: e1.log_scale + e2.log_scale };
            let shift = (ef.log_scale - halves.log_scale).exp();
            let diff = ef.m.scale(shift).sub(&halves.m);
            let err = diff.max_abs() / halves.m.max_abs().max(1e-300);
            if err <= tol {
                self.fine.mul_right(&halves);
                self.coarse.mul_right(&ef);
                self.fine.t = t1;
                self.coarse.t = t1;
                self.steps += 1;
                if self.steps > self.opts.max_steps {
                    return Err(WeylError::NoConvergence { re: self.z.re, im: self.z.im, t: t1, radius: f64::NAN });
                }
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).cbrt()).min(4.0) };
                if !last {
                    h = (t1 - t) * grow;
                }
                self.h = h.max((t1 - t) * grow.min(1.0));
            } else {
                h = (t1 - t) * (0.9 * (tol / err).cbrt()).max(0.1);
            }
        }
        Ok(())
    }
}

/// `W(t, z)` with local step tolerance `tol`.
pub fn propagate(model: &HamiltonianModel, t: f64, z: C64, tol: f64) -> Result<TransferMatrix> {
    let opts = EvalOptions { ode_tol: tol, ..EvalOptions::default() };
    let mut p = Propagator::new(model, z, opts);
    p.advance_to(t)?;
    Ok(p.fine)
}

/// `q_H(z)` to absolute accuracy `tol` with default engine options.
pub fn eval_q(model: &HamiltonianModel, z: C64, tol: f64) -> Result<QEvaluation> {
    eval_q_with(model, z, tol, &EvalOptions::default())
}

pub fn eval_q_with(model: &HamiltonianModel, z: C64, tol: f64, opts: &EvalOptions) -> Result<QEvaluation> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return Err(WeylError::InvalidParams(format!("eval_q needs Im z > 0, got {z}")));
    }
    if !(tol > 0.0) {
        return Err(WeylError::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let mut o = *opts;
    loop {
        let r = eval_q_once(model, z, tol, &o);
        let refine = matches!(r, Ok(Outcome::Refine) | Err(WeylError::NestingViolation { .. }));
        if refine && o.ode_tol > 1e-13 {
            o.ode_tol *= 0.01;
            continue;
        }
        return match r {
            Ok(Outcome::Done(q)) => Ok(q),
            Ok(Outcome::Refine) => {
                Err(WeylError::NoConvergence { re: z.re, im: z.im, t: f64::NAN, radius: f64::INFINITY })
            }
            Err(e) => Err(e),
        };
    }
}

enum Outcome {
    Done(QEvaluation),
    Refine,
}

fn rounding_floor(c: C64, steps: usize) -> f64 {
    8.0 * f64::EPSILON * c.norm().max(1e-300) * (1.0 + steps as f64).sqrt()
}

fn eval_q_once(model: &HamiltonianModel, z: C64, tol: f64, opts: &EvalOptions) -> Result<Outcome> {
    let a = model.a();
    let b = model.b();
    let tail = model.tail();
    let mut t = scales::t_hat(model, z.norm(), 2.0)?;
    if let Some(tl) = tail {
        t = t.min(tl.start);
    }
    let mut prop = Propagator::new(model, z, *opts);
    let mut prev: Option<(WeylDisk, f64)> = None;
    let mut last_radius = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        prop.advance_to(t)?;
        if let Some(tl) = tail {
            if t >= tl.start {
                let tau = if tl.angle == 0.0 { None } else { Some(C64::from(1.0 / tl.angle.tan())) };
                let (Some(v), Some(vc)) = (prop.fine.apply(tau), prop.coarse.apply(tau)) else {
                    return Err(WeylError::DegenerateDisk { t, im: 0.0 });
                };
                let err = (v - vc).norm() / 3.0 + rounding_floor(v, prop.steps);
                if err > tol {
                    return Ok(Outcome::Refine);
                }
                return Ok(Outcome::Done(QEvaluation { value: (v.re, v.im), error_radius: err, t_used: t, z: (z.re, z.im) }));
            }
        }
        match (weyl_disk(&prop.fine), weyl_disk(&prop.coarse)) {
            (Ok(d), Ok(dc)) => {
                let c = d.center();
                let discretization = (c - dc.center()).norm() / 3.0;
                let ode_err = discretization + rounding_floor(c, prop.steps) + d.rounding;
                if let (true, Some((p, perr))) = (opts.check_nesting, prev) {
                    let excess = (c - p.center()).norm() + d.radius - p.radius * (1.0 + 1e-9) - perr - ode_err;
                    if excess > 0.0 {
                        return Err(WeylError::NestingViolation { t, excess });
                    }
                }
                if d.radius + ode_err <= tol {
                    return Ok(Outcome::Done(QEvaluation {
                        value: (c.re, c.im),
                        error_radius: d.radius + ode_err,
                        t_used: t,
                        z: (z.re, z.im),
                    }));
                }
                // rounding shrinks with the disk, so only discretization error asks for finer steps
                if discretization > 0.5 * tol {
                    return Ok(Outcome::Refine);
                }
                last_radius = d.radius;
                prev = Some((d, ode_err));
            }
            (Err(WeylError::DegenerateDisk { .. }), _) | (_, Err(WeylError::DegenerateDisk { .. })) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        let mut next = a + 2.0 * (t - a);
        if let Some(tl) = tail {
            next = next.min(tl.start);
        }
        if next >= b {
            break;
        }
        t = next;
    }
    Err(WeylError::NoConvergence { re: z.re, im: z.im, t, radius: last_radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_exponential_is_rotation() {
        let z = C64::new(0.3, 0.7);
        let t = 1.7;
        let e = segment_exponential(Density::new(1.0, 1.0, 0.0), t, z).unwrap();
        let (c, s) = ((z * t).cos(), (z * t).sin());
        assert!(close(e.m[0][0], c, 1e-14) && close(e.m[0][1], s, 1e-14));
        assert!(close(e.m[1][0], -s, 1e-14) && close(e.m[1][1], c, 1e-14));
    }

    #[test]
    fn nilpotent_and_zero_step() {
        let z = C64::new(1.5, 2.0);
        let e = segment_exponential(Density::new(1.0, 0.0, 0.0), 0.25, z).unwrap();
        // I + s HJ with s = -z dt and HJ = [[0, -1], [0, 0]]
        assert!(close(e.m[0][1], z * 0.25, 1e-15) && close(e.m[1][0], ZERO, 0.0));
        let id = segment_exponential(Density::new(3.0, 1.0, 1.0), 0.0, z).unwrap();
        assert_eq!(id, Mat2::IDENTITY);
    }

    #[test]
    fn disk_of_simple_mobius() {
        // tau -> 1/(tau + i)
        let tm = TransferMatrix {
            w: Mat2::new(ZERO, ONE, ONE, C64::new(0.0, 1.0)),
            log_scale: 0.0,
            t: 1.0,
            z: C64::new(0.0, 1.0),
        };
        let d = weyl_disk(&tm).unwrap();
        assert!(close(d.center(), C64::new(0.0, -0.5), 1e-15));
        assert!((d.radius - 0.5).abs() < 1e-15);
        // circumcircle of the boundary images M(0), M(1), M(infinity)
        for tau in [Some(ZERO), Some(ONE), None] {
            let p = tm.apply(tau).unwrap();
            assert!(((p - d.center()).norm() - d.radius).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_half_plane_is_degenerate() {
        let tm = TransferMatrix::identity(0.0, C64::new(0.0, 1.0));
        assert!(matches!(weyl_disk(&tm), Err(WeylError::DegenerateDisk { .. })));
    }
}
