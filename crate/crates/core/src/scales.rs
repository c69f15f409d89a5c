//! Scale functions `t_hat`, `t_ring`, their inverses, and the envelopes `A(r)`, `L(r)`.

use crate::error::{Result, WeylError};
use crate::hamiltonian::HamiltonianModel;
use serde::Serialize;

/// Default normalization: `det Omega(t_hat(r)) = 1 / r^2`.
pub const DEFAULT_ETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelopes {
    pub r: f64,
    pub t_ring: f64,
    pub t_hat: f64,
    #[serde(rename = "A")]
    pub a_env: f64,
    #[serde(rename = "L")]
    pub l_env: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(WeylError::InvalidParams(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `ln(eta^2 / (4 r^2))`
fn ln_level(r: f64, eta: f64) -> f64 {
    2.0 * (eta / 2.0).ln() - 2.0 * r.ln()
}

/// Leftmost `t > lower` with `g(t) >= ln_target` for a nondecreasing log-valued `g`.
fn solve_level(
    model: &HamiltonianModel,
    g: &dyn Fn(f64) -> Result<f64>,
    lower: f64,
    ln_target: f64,
    what: &'static str,
) -> Result<f64> {
    let b = model.b();
    let fail = || WeylError::BracketFailure { what, target: ln_target.exp() };
    let mut s_hi = if b.is_finite() { 0.5 * (b - lower) } else { 1.0 };
    while g(lower + s_hi)? < ln_target {
        s_hi *= 2.0;
        if lower + s_hi >= b || s_hi > 1e300 {
            return Err(fail());
        }
    }
    let mut s_lo = s_hi;
    loop {
        s_lo *= 0.5;
        if lower + s_lo <= lower || s_lo < 1e-300 {
            return Err(fail());
        }
        if g(lower + s_lo)? < ln_target {
            break;
        }
        s_hi = s_lo;
    }
    while s_hi / s_lo > 1.001 {
        let mid = (s_lo * s_hi).sqrt();
        if g(lower + mid)? < ln_target {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    let rel = model.options().bisect_rel_tol.min(1e-14);
    for _ in 0..200 {
        if (lower + s_hi) - (lower + s_lo) <= rel * (lower + s_hi).abs().max(s_hi) {
            break;
        }
        let mid = 0.5 * (s_lo + s_hi);
        if mid <= s_lo || mid >= s_hi {
            break;
        }
        if g(lower + mid)? < ln_target {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    Ok(lower + s_hi)
}

/// The leftmost `t` with `det Omega(t) = eta^2 / (4 r^2)`.
pub fn t_hat(model: &HamiltonianModel, r: f64, eta: f64) -> Result<f64> {
    check_positive("r", r)?;
    check_positive("eta", eta)?;
    let info = model.indivisible_info()?;
    solve_level(model, &|t| model.ln_det_omega(t), info.a_hat, ln_level(r, eta), "t_hat")
}

/// The leftmost `t` with `(omega1 omega2)(t) = eta^2 / (4 r^2)`.
pub fn t_ring(model: &HamiltonianModel, r: f64, eta: f64) -> Result<f64> {
    check_positive("r", r)?;
    check_positive("eta", eta)?;
    let info = model.indivisible_info()?;
    solve_level(model, &|t| model.ln_omega_prod(t), info.a_ring, ln_level(r, eta), "t_ring")
}

/// `eta / (2 sqrt(det Omega(t)))`
pub fn r_hat(model: &HamiltonianModel, t: f64, eta: f64) -> Result<f64> {
    Ok(ln_r_hat(model, t, eta)?.exp())
}

pub fn ln_r_hat(model: &HamiltonianModel, t: f64, eta: f64) -> Result<f64> {
    let info = model.indivisible_info()?;
    if t <= info.a_hat {
        return Err(WeylError::OutOfDomain { t, a: info.a_hat, b: model.b() });
    }
    Ok((eta / 2.0).ln() - 0.5 * model.ln_det_omega(t)?)
}

/// `eta / (2 sqrt((omega1 omega2)(t)))`
pub fn r_ring(model: &HamiltonianModel, t: f64, eta: f64) -> Result<f64> {
    Ok(ln_r_ring(model, t, eta)?.exp())
}

pub fn ln_r_ring(model: &HamiltonianModel, t: f64, eta: f64) -> Result<f64> {
    let info = model.indivisible_info()?;
    if t <= info.a_ring {
        return Err(WeylError::OutOfDomain { t, a: info.a_ring, b: model.b() });
    }
    Ok((eta / 2.0).ln() - 0.5 * model.ln_omega_prod(t)?)
}

/// `A = eta / (2 r omega2(t_ring))` and `L = A det Omega / (omega1 omega2)` at `t_ring`.
pub fn envelopes(model: &HamiltonianModel, r: f64, eta: f64) -> Result<Envelopes> {
    let tr = t_ring(model, r, eta)?;
    let th = t_hat(model, r, eta)?;
    let lo = model.log_omega(tr)?;
    let ln_a = (eta / 2.0).ln() - r.ln() - lo.ln_omega2;
    let a_env = ln_a.exp();
    let l_env = (ln_a + lo.ln_one_minus_f2).exp();
    Ok(Envelopes { r, t_ring: tr, t_hat: th, a_env, l_env })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Density;
    use crate::models::PiecewiseConstant;

    fn identity() -> HamiltonianModel {
        HamiltonianModel::new(PiecewiseConstant::constant(Density::new(1.0, 1.0, 0.0), 0.0))
    }

    #[test]
    fn identity_scales() {
        let m = identity();
        assert!((t_hat(&m, 10.0, 2.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((t_ring(&m, 10.0, 2.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((r_hat(&m, 0.1, 2.0).unwrap() - 10.0).abs() < 1e-12);
        let e = envelopes(&m, 37.0, 2.0).unwrap();
        assert!((e.a_env - 1.0).abs() < 1e-12 && (e.l_env - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_hat_rejects_prefix() {
        let m = HamiltonianModel::new(
            PiecewiseConstant::new(vec![(0.0, Density::new(1.0, 0.0, 0.0)), (1.0, Density::new(1.0, 1.0, 0.0))]).unwrap(),
        );
        assert!(matches!(r_hat(&m, 0.5, 2.0), Err(WeylError::OutOfDomain { .. })));
        // det Omega(t) = t (t - 1) for t > 1
        let th = t_hat(&m, 1.0, 2.0).unwrap();
        assert!((th * (th - 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_spot_takes_leftmost() {
        // det Omega is constant on the type-0 stretch [1, 2)
        let m = HamiltonianModel::new(
            PiecewiseConstant::new(vec![
                (0.0, Density::new(1.0, 1.0, 0.0)),
                (1.0, Density::new(0.0, 1.0, 0.0)),
                (2.0, Density::new(1.0, 1.0, 0.0)),
            ])
            .unwrap(),
        );
        // det at t = 1 is 1; the level 1 is first reached at t = 1
        let th = t_hat(&m, 1.0, 2.0).unwrap();
        assert!((th - 1.0).abs() < 1e-12, "{th}");
    }
}
