//! Krein strings `(L, m)`: the moment determinant `delta`, the scale `tau_hat`, and the
//! canonical system `H = [[m_hat^2, m_hat], [m_hat, 1]]` built from the dual mass `m_hat`.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, OmegaMatrix, Tail};
use crate::linalg::C64;
use crate::models::PiecewiseConstant;
use crate::weyl::eval_q;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The mass distribution `m(t) = mass([0, t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassKind {
    /// `m(t) = density t`
    Uniform {
        #[serde(default = "one")]
        density: f64,
    },
    /// `m(t) = coef t^exponent`
    Power { coef: f64, exponent: f64 },
    /// point masses `mass_j` at positions `t_j`, given as `[t_j, mass_j]`
    JumpTable { atoms: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KreinString {
    /// string length, infinite when absent
    #[serde(default)]
    pub length: Option<f64>,
    pub mass: MassKind,
}

/// Prefix moments after each atom, accumulated with weighted Welford updates so that
/// `delta = M0 * sum m_j (x_j - mean)^2` stays free of cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Prefix {
    m0: f64,
    mean: f64,
    spread: f64,
}

impl Prefix {
    const EMPTY: Prefix = Prefix { m0: 0.0, mean: 0.0, spread: 0.0 };

    fn push(self, x: f64, m: f64) -> Prefix {
        let m0 = self.m0 + m;
        let mean = self.mean + m / m0 * (x - self.mean);
        Prefix { m0, mean, spread: self.spread + m * (x - self.mean) * (x - mean) }
    }

    fn delta(&self) -> f64 {
        self.m0 * self.spread
    }
}

impl KreinString {
    pub fn uniform(density: f64) -> Self {
        KreinString { length: None, mass: MassKind::Uniform { density } }
    }

    pub fn atoms(atoms: Vec<[f64; 2]>, length: Option<f64>) -> Self {
        KreinString { length, mass: MassKind::JumpTable { atoms } }
    }

    pub fn len(&self) -> f64 {
        self.length.unwrap_or(f64::INFINITY)
    }

    /// `(coef, exponent)` for the closed-form kinds.
    fn power(&self) -> Option<(f64, f64)> {
        match self.mass {
            MassKind::Uniform { density } => Some((density, 1.0)),
            MassKind::Power { coef, exponent } => Some((coef, exponent)),
            MassKind::JumpTable { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WeylError::MalformedString(m));
        let l = self.len();
        if !(l > 0.0) {
            return bad(format!("length must be positive, got {l}"));
        }
        match &self.mass {
            MassKind::JumpTable { atoms } => {
                if atoms.is_empty() {
                    return bad("jump table needs at least one atom".into());
                }
                for (k, [x, m]) in atoms.iter().enumerate() {
                    if !(*x >= 0.0 && *x < l && x.is_finite()) {
                        return bad(format!("atom {k} at {x} outside [0, L)"));
                    }
                    if !(*m > 0.0 && m.is_finite()) {
                        return bad(format!("atom {k} has non-positive mass {m}"));
                    }
                    if k > 0 && !(atoms[k - 1][0] < *x) {
                        return bad(format!("atom positions must increase strictly (atom {k} at {x})"));
                    }
                }
            }
            _ => {
                let (c, e) = self.power().expect("closed form");
                if !(c > 0.0 && c.is_finite() && e > 0.0 && e.is_finite()) {
                    return bad(format!("mass coefficient and exponent must be positive, got {c}, {e}"));
                }
            }
        }
        Ok(())
    }

    /// `m([0, t))`.
    pub fn mass_before(&self, t: f64) -> f64 {
        match &self.mass {
            MassKind::JumpTable { atoms } => atoms.iter().take_while(|a| a[0] < t).map(|a| a[1]).sum(),
            _ => {
                let (c, e) = self.power().expect("closed form");
                if t > 0.0 {
                    c * t.powf(e)
                } else {
                    0.0
                }
            }
        }
    }

    /// Total mass `m([0, L))`.
    pub fn total_mass(&self) -> f64 {
        match &self.mass {
            MassKind::JumpTable { atoms } => atoms.iter().map(|a| a[1]).sum(),
            _ => self.mass_before(self.len()),
        }
    }

    fn prefixes(&self) -> Vec<Prefix> {
        let MassKind::JumpTable { atoms } = &self.mass else {
            return Vec::new();
        };
        let mut v = vec![Prefix::EMPTY];
        for [x, m] in atoms {
            let last = *v.last().expect("seeded");
            v.push(last.push(*x, *m));
        }
        v
    }

    /// The dual string: `m_hat(xi) = inf { t > 0 : xi <= m(t) }` on `[0, m(L))`.
    pub fn dual(&self) -> Result<KreinString> {
        self.validate()?;
        let total = self.total_mass();
        let length = total.is_finite().then_some(total);
        match &self.mass {
            MassKind::JumpTable { atoms } => {
                // m_hat jumps by x_1 at 0 and by x_{j+1} - x_j where m reaches M_j
                let mut out = Vec::new();
                if atoms[0][0] > 0.0 {
                    out.push([0.0, atoms[0][0]]);
                }
                let mut cum = 0.0;
                for w in atoms.windows(2) {
                    cum += w[0][1];
                    out.push([cum, w[1][0] - w[0][0]]);
                }
                if out.is_empty() {
                    return Err(WeylError::MalformedString("dual of a single atom at 0 carries no mass".into()));
                }
                Ok(KreinString { length, mass: MassKind::JumpTable { atoms: out } })
            }
            _ => {
                let (c, e) = self.power().expect("closed form");
                Ok(KreinString { length, mass: MassKind::Power { coef: c.powf(-1.0 / e), exponent: 1.0 / e } })
            }
        }
    }
}

/// `delta(t) = (int x^2 dm)(int dm) - (int x dm)^2` over `[0, t)`.
pub fn delta_of(string: &KreinString, t: f64) -> Result<f64> {
    string.validate()?;
    if !(t >= 0.0 && t < string.len()) {
        return Err(WeylError::OutOfDomain { t, a: 0.0, b: string.len() });
    }
    Ok(match &string.mass {
        MassKind::JumpTable { atoms } => {
            let k = atoms.partition_point(|a| a[0] < t);
            string.prefixes()[k].delta()
        }
        _ => {
            let (c, e) = string.power().expect("closed form");
            power_delta_coef(c, e) * t.powf(2.0 * e + 2.0)
        }
    })
}

/// `delta(t) = K t^(2e + 2)` for `m = c t^e`, with the cancellation done symbolically.
fn power_delta_coef(c: f64, e: f64) -> f64 {
    c * c * e / ((e + 2.0) * (e + 1.0) * (e + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StringScales {
    pub r: f64,
    pub tau_hat: f64,
    pub f_r: f64,
    /// `delta(tau_hat)`, the left value at a jump
    pub delta_at_tau: f64,
}

/// `tau_hat(r) = inf { t > 0 : 1/r^2 <= delta(t) }` and the interpolated mass `f(r)`.
pub fn tau_hat_and_f(string: &KreinString, r: f64) -> Result<StringScales> {
    string.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(WeylError::InvalidParams(format!("r must be positive, got {r}")));
    }
    let target = r.powi(-2);
    match &string.mass {
        MassKind::JumpTable { atoms } => {
            let pre = string.prefixes();
            let Some(k) = (1..pre.len()).find(|&k| pre[k].delta() >= target) else {
                return Err(WeylError::BracketFailure { what: "tau_hat", target });
            };
            let (lo, hi) = (pre[k - 1].delta(), pre[k].delta());
            let f_r = pre[k - 1].m0 + atoms[k - 1][1] * (target - lo) / (hi - lo);
            Ok(StringScales { r, tau_hat: atoms[k - 1][0], f_r, delta_at_tau: lo })
        }
        _ => {
            let (c, e) = string.power().expect("closed form");
            let tau = (target / power_delta_coef(c, e)).powf(1.0 / (2.0 * e + 2.0));
            if tau >= string.len() {
                return Err(WeylError::BracketFailure { what: "tau_hat", target });
            }
            Ok(StringScales { r, tau_hat: tau, f_r: c * tau.powf(e), delta_at_tau: target })
        }
    }
}

/// Hamiltonian of a closed-form string: `m_hat(t) = (t / c)^(1/e)` up to the total mass,
/// then a rank-one tail along `(L, 1)`.
#[derive(Debug, Clone)]
struct PowerDual {
    /// `m_hat(t) = k t^s`
    k: f64,
    s: f64,
    end: Option<f64>,
    length: f64,
    breaks: Vec<f64>,
}

impl PowerDual {
    fn tail_density(&self) -> Density {
        if self.length.is_finite() {
            let l = self.length;
            Density::new(l * l, 1.0, l)
        } else {
            Density::new(1.0, 0.0, 0.0)
        }
    }

    fn core_primitive(&self, t: f64) -> OmegaMatrix {
        let (k, s) = (self.k, self.s);
        OmegaMatrix::new(k * k * t.powf(2.0 * s + 1.0) / (2.0 * s + 1.0), t, k * t.powf(s + 1.0) / (s + 1.0), t)
    }
}

impl Hamiltonian for PowerDual {
    fn label(&self) -> String {
        format!("string_dual(m_hat = {} t^{})", self.k, self.s)
    }

    fn left(&self) -> f64 {
        0.0
    }

    fn density(&self, t: f64) -> Density {
        match self.end {
            Some(e) if t >= e => self.tail_density(),
            _ => {
                let m = self.k * t.powf(self.s);
                Density::new(m * m, 1.0, m)
            }
        }
    }

    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        Some(match self.end {
            Some(e) if t > e => {
                let base = self.core_primitive(e);
                let d = self.tail_density();
                let dt = t - e;
                OmegaMatrix::new(base.omega1 + dt * d.h1, base.omega2 + dt * d.h2, base.omega3 + dt * d.h3, t)
            }
            _ => self.core_primitive(t),
        })
    }

    fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn commutes_on(&self, lo: f64, _hi: f64) -> bool {
        self.end.is_some_and(|e| lo >= e)
    }

    fn tail(&self) -> Option<Tail> {
        // atan2(1, inf) = 0 covers the infinite string
        self.end.map(|e| Tail { start: e, angle: 1.0f64.atan2(self.length) })
    }
}

/// The canonical system whose Weyl coefficient is the string's principal coefficient.
pub fn string_to_hamiltonian(string: &KreinString) -> Result<HamiltonianModel> {
    string.validate()?;
    let l = string.len();
    let tail_row = if l.is_finite() { Density::new(l * l, 1.0, l) } else { Density::new(1.0, 0.0, 0.0) };
    match &string.mass {
        MassKind::JumpTable { atoms } => {
            let mut rows = Vec::with_capacity(atoms.len() + 1);
            let mut cum = 0.0;
            for [x, m] in atoms {
                rows.push((cum, Density::new(x * x, 1.0, *x)));
                cum += m;
            }
            rows.push((cum, tail_row));
            Ok(HamiltonianModel::new(PiecewiseConstant::new(rows)?))
        }
        _ => {
            let (c, e) = string.power().expect("closed form");
            let total = string.total_mass();
            let end = total.is_finite().then_some(total);
            Ok(HamiltonianModel::new(PowerDual {
                k: c.powf(-1.0 / e),
                s: 1.0 / e,
                end,
                length: l,
                breaks: end.into_iter().collect(),
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A41Record {
    pub r: f64,
    pub tau_hat: f64,
    pub f_r: f64,
    pub im_q: f64,
    pub q_error: f64,
    /// `Im q_S(ir) r f(r)`
    pub ratio: f64,
}

pub fn theorem_a41_check(string: &KreinString, r_grid: &[f64]) -> Result<Vec<A41Record>> {
    let model = string_to_hamiltonian(string)?;
    r_grid
        .par_iter()
        .map(|&r| {
            let sc = tau_hat_and_f(string, r)?;
            let scale = 1.0 / (r * sc.f_r);
            let q = eval_q(&model, C64::new(0.0, r), 1e-7 * scale)?;
            Ok(A41Record {
                r,
                tau_hat: sc.tau_hat,
                f_r: sc.f_r,
                im_q: q.value.1,
                q_error: q.error_radius,
                ratio: q.value.1 / scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_delta_and_scale() {
        let s = KreinString::uniform(1.0);
        assert!((delta_of(&s, 2.0).unwrap() - 16.0 / 12.0).abs() < 1e-14);
        let sc = tau_hat_and_f(&s, 100.0).unwrap();
        assert!((sc.tau_hat - 12f64.powf(0.25) / 10.0).abs() < 1e-14);
        assert_eq!(sc.f_r, sc.tau_hat);
    }

    #[test]
    fn atoms_delta() {
        let one = KreinString::atoms(vec![[0.7, 3.0]], None);
        assert_eq!(delta_of(&one, 5.0).unwrap(), 0.0);
        let two = KreinString::atoms(vec![[0.5, 2.0], [1.5, 3.0]], None);
        assert!((delta_of(&two, 2.0).unwrap() - 6.0).abs() < 1e-14);
        assert_eq!(delta_of(&two, 1.5).unwrap(), 0.0);
        let sc = tau_hat_and_f(&two, 1.0).unwrap();
        assert_eq!(sc.tau_hat, 1.5);
        assert!(sc.f_r > 2.0 && sc.f_r < 5.0);
        assert!(tau_hat_and_f(&two, 0.1).is_err());
    }

    #[test]
    fn dual_of_jump_table() {
        let s = KreinString::atoms(vec![[0.0, 1.0], [1.0, 2.0]], None);
        let model = string_to_hamiltonian(&s).unwrap();
        assert_eq!(model.eval_density(0.5).unwrap(), Density::new(0.0, 1.0, 0.0));
        assert_eq!(model.eval_density(2.0).unwrap(), Density::new(1.0, 1.0, 1.0));
        assert_eq!(model.tail().unwrap().start, 3.0);
        let d = s.dual().unwrap();
        assert_eq!(d.mass, MassKind::JumpTable { atoms: vec![[1.0, 1.0]] });
    }

    #[test]
    fn power_dual_round_trip() {
        let s = KreinString { length: None, mass: MassKind::Power { coef: 3.0, exponent: 2.0 } };
        let dd = s.dual().unwrap().dual().unwrap();
        for t in [0.1, 1.0, 7.0] {
            assert!((dd.mass_before(t) / s.mass_before(t) - 1.0).abs() < 1e-14);
        }
    }
}
