//! The oscillating family `H_{p,l}` and its variant with `f(xi_n) = 1 - l^(n-1)`.
//!
//! `f` is piecewise linear through `f(t_n) = 1 - p^n` and `f(xi_n)` with the nodes
//! interleaved as `xi_{n+1} < t_n < xi_n`. With `S_i(t) = int_t^{t_1} alpha_i`:
//! on `[xi_{n+1}, t_n]`, `alpha_1 = alpha_2 = f'/(1-f)`, so `H` is a multiple of one
//! rank-one matrix; on `[t_n, xi_n]`, `alpha_1 = 0` and `alpha_2 = -2 f'/f`, so
//! `H = diag(0, h2)`. Every piece therefore propagates in one exact step.
//! `omega_i = exp(-S_i)` and `omega3 = sqrt(omega1 omega2) f`; after `t_1` a
//! `diag(1, 0)` tail is attached.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, LogOmega, OmegaMatrix, Tail};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HplVariant {
    /// `f(xi_n) = l^n`
    #[default]
    Standard,
    /// `f(xi_n) = 1 - l^(n-1)`, requires `l^2 > p`
    R3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HplParams {
    pub p: f64,
    pub l: f64,
    /// `xi_n = ratio^(-n)`
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// `t_n = t_frac xi_n`
    #[serde(default = "default_t_frac")]
    pub t_frac: f64,
    /// deepest level for which predictions are requested
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub variant: HplVariant,
}

fn default_ratio() -> f64 {
    4.0
}
fn default_t_frac() -> f64 {
    0.5
}
fn default_n_max() -> u32 {
    14
}

impl HplParams {
    pub fn new(p: f64, l: f64) -> Self {
        HplParams { p, l, ratio: 4.0, t_frac: 0.5, n_max: 14, variant: HplVariant::Standard }
    }

    pub fn r3(p: f64, l: f64) -> Self {
        HplParams { variant: HplVariant::R3, ..HplParams::new(p, l) }
    }

    /// `log l / log(p l)`
    pub fn delta(&self) -> f64 {
        self.l.ln() / (self.p * self.l).ln()
    }

    pub fn xi(&self, n: u32) -> f64 {
        self.ratio.powi(-(n as i32))
    }

    pub fn t(&self, n: u32) -> f64 {
        self.t_frac * self.xi(n)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WeylError::InvalidParams(m));
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("hpl: p must lie in (0, 1), got {}", self.p));
        }
        if !(self.l > 0.0 && self.l < 1.0) {
            return bad(format!("hpl: l must lie in (0, 1), got {}", self.l));
        }
        if !(self.ratio > 1.0 && self.t_frac > 1.0 / self.ratio && self.t_frac < 1.0) {
            return bad(format!(
                "hpl: interleaving xi_(n+1) < t_n < xi_n needs 1/ratio < t_frac < 1 (ratio {}, t_frac {})",
                self.ratio, self.t_frac
            ));
        }
        match self.variant {
            HplVariant::Standard if self.l * self.l + self.p >= 1.0 => {
                bad(format!("hpl: f must increase from xi_2 to t_1, needs l^2 + p < 1 (p {}, l {})", self.p, self.l))
            }
            HplVariant::R3 if self.l * self.l <= self.p => {
                bad(format!("r3: needs l^2 > p (p {}, l {})", self.p, self.l))
            }
            _ => Ok(()),
        }
    }
}

/// Node data at one level `n`.
#[derive(Debug, Clone, Copy)]
struct Level {
    t: f64,
    xi: f64,
    /// `f(t_n)`, `1 - f(t_n)` and logs
    f_t: f64,
    g_t: f64,
    ln_f_t: f64,
    ln_g_t: f64,
    /// `f(xi_n)`, `1 - f(xi_n)` and logs
    f_x: f64,
    g_x: f64,
    ln_f_x: f64,
    ln_g_x: f64,
    /// `S_i(t_n)`, `S_i(xi_n)`
    s1_t: f64,
    s2_t: f64,
    s1_x: f64,
    s2_x: f64,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    /// `[xi_{n+1}, t_n]`, rank-one
    Tangent(usize),
    /// `[t_{n+1}, xi_{n+1}]`, `diag(0, h2)`
    Vertical(usize),
    Tail,
    Below,
}

#[derive(Debug, Clone)]
pub struct Hpl {
    params: HplParams,
    /// `levels[n]` for `n = 1..=depth`, index 0 unused
    levels: Vec<Level>,
    breaks: Vec<f64>,
}

impl Hpl {
    pub fn new(params: HplParams) -> Result<Self> {
        params.validate()?;
        let (p, l) = (params.p, params.l);
        let node = |n: u32| -> Level {
            let nf = n as f64;
            let (f_x, g_x, ln_f_x, ln_g_x) = match params.variant {
                HplVariant::Standard => {
                    let v = l.powi(n as i32);
                    (v, 1.0 - v, nf * l.ln(), (-v).ln_1p())
                }
                HplVariant::R3 => {
                    let v = l.powi(n as i32 - 1);
                    (1.0 - v, v, (-v).ln_1p(), (nf - 1.0) * l.ln())
                }
            };
            let g_t = p.powi(n as i32);
            Level {
                t: params.t(n),
                xi: params.xi(n),
                f_t: 1.0 - g_t,
                g_t,
                ln_f_t: (-g_t).ln_1p(),
                ln_g_t: nf * p.ln(),
                f_x,
                g_x,
                ln_f_x,
                ln_g_x,
                s1_t: 0.0,
                s2_t: 0.0,
                s1_x: 0.0,
                s2_x: 0.0,
            }
        };
        let mut levels = vec![node(1), node(1)];
        let mut n = 1u32;
        loop {
            let prev = levels[n as usize];
            let mut next = node(n + 1);
            let jump = next.ln_g_x - prev.ln_g_t;
            next.s1_x = prev.s1_t + jump;
            next.s2_x = prev.s2_t + jump;
            next.s1_t = next.s1_x;
            next.s2_t = next.s2_x + 2.0 * (next.ln_f_t - next.ln_f_x);
            levels.push(next);
            n += 1;
            if next.s1_t.min(next.s2_t) > 800.0 || n >= 480 || next.xi < 1e-280 {
                break;
            }
        }
        let depth = levels.len() - 1;
        let mut breaks = Vec::with_capacity(2 * depth);
        for k in (1..=depth).rev() {
            if k >= 2 {
                breaks.push(levels[k].xi);
            }
            if k < depth {
                breaks.push(levels[k].t);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.retain(|&b| b < levels[1].t);
        Ok(Hpl { params, levels, breaks })
    }

    pub fn params(&self) -> &HplParams {
        &self.params
    }

    fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    fn piece(&self, t: f64) -> Piece {
        if t >= self.levels[1].t {
            return Piece::Tail;
        }
        // first guess from the geometric sequence, then correct
        let mut n = ((1.0 / t).ln() / self.params.ratio.ln()).floor().max(1.0) as usize;
        n = n.min(self.depth() - 1);
        while n > 1 && t >= self.levels[n].xi {
            n -= 1;
        }
        while n + 1 < self.depth() && t < self.levels[n + 1].xi {
            n += 1;
        }
        // now xi_{n+1} <= t < xi_n
        if t < self.levels[n + 1].xi {
            return Piece::Below;
        }
        if t < self.levels[n].t {
            Piece::Tangent(n)
        } else {
            Piece::Vertical(n - 1)
        }
    }

    /// `(f, 1 - f, f')` on a piece.
    fn interp(&self, piece: Piece, t: f64) -> (f64, f64, f64) {
        let (x0, x1, f0, f1, g0, g1) = match piece {
            Piece::Tangent(n) => {
                let (a, b) = (self.levels[n + 1], self.levels[n]);
                (a.xi, b.t, a.f_x, b.f_t, a.g_x, b.g_t)
            }
            Piece::Vertical(n) => {
                let (a, b) = (self.levels[n + 1], self.levels[n + 1]);
                (a.t, b.xi, a.f_t, b.f_x, a.g_t, b.g_x)
            }
            _ => unreachable!("interp on tail"),
        };
        // convex weights keep tiny node values like p^n exact at the nodes
        let lam = (t - x0) / (x1 - x0);
        let slope = (f1 - f0) / (x1 - x0);
        ((1.0 - lam) * f0 + lam * f1, (1.0 - lam) * g0 + lam * g1, slope)
    }

    /// The piecewise linear `f` of the construction.
    pub fn f(&self, t: f64) -> f64 {
        match self.piece(t) {
            Piece::Tail => self.levels[1].f_t / (1.0 + t - self.levels[1].t).sqrt(),
            Piece::Below => 0.0,
            p => self.interp(p, t).0,
        }
    }

    /// Level `n` with `t in [xi_{n+1}, xi_n)`.
    pub fn level_of(&self, t: f64) -> Option<u32> {
        match self.piece(t) {
            Piece::Tangent(n) => Some(n as u32),
            Piece::Vertical(n) => Some(n as u32 + 1),
            _ => None,
        }
    }

    fn log_omega_at(&self, t: f64) -> LogOmega {
        match self.piece(t) {
            Piece::Tail => {
                let w1 = 1.0 + (t - self.levels[1].t);
                let p = self.params.p;
                let f0 = self.levels[1].f_t;
                LogOmega {
                    ln_omega1: w1.ln(),
                    ln_omega2: 0.0,
                    f: f0 / w1.sqrt(),
                    ln_one_minus_f2: ((t - self.levels[1].t) + p * (2.0 - p)).ln() - w1.ln(),
                }
            }
            Piece::Below => LogOmega {
                ln_omega1: f64::NEG_INFINITY,
                ln_omega2: f64::NEG_INFINITY,
                f: 0.0,
                ln_one_minus_f2: 0.0,
            },
            piece @ Piece::Tangent(n) => {
                let (f, g, _) = self.interp(piece, t);
                let lv = self.levels[n];
                let d = g.ln() - lv.ln_g_t;
                LogOmega { ln_omega1: -(lv.s1_t + d), ln_omega2: -(lv.s2_t + d), f, ln_one_minus_f2: g.ln() + f.ln_1p() }
            }
            piece @ Piece::Vertical(n) => {
                let (f, g, _) = self.interp(piece, t);
                let lv = self.levels[n + 1];
                LogOmega {
                    ln_omega1: -lv.s1_x,
                    ln_omega2: -(lv.s2_x + 2.0 * (f.ln() - lv.ln_f_x)),
                    f,
                    ln_one_minus_f2: g.ln() + f.ln_1p(),
                }
            }
        }
    }
}

impl Hamiltonian for Hpl {
    fn label(&self) -> String {
        let p = &self.params;
        match p.variant {
            HplVariant::Standard => format!("H_(p={}, l={})", p.p, p.l),
            HplVariant::R3 => format!("r3_(p={}, l={})", p.p, p.l),
        }
    }

    fn left(&self) -> f64 {
        0.0
    }

    fn density(&self, t: f64) -> Density {
        match self.piece(t) {
            Piece::Tail => Density::new(1.0, 0.0, 0.0),
            Piece::Below => Density::new(0.0, 0.0, 0.0),
            piece @ Piece::Tangent(_) => {
                let (_, g, fp) = self.interp(piece, t);
                let lo = self.log_omega_at(t);
                let alpha = fp / g;
                let (w1, w2) = (lo.ln_omega1.exp(), lo.ln_omega2.exp());
                Density::new(alpha * w1, alpha * w2, alpha * (0.5 * lo.ln_prod()).exp())
            }
            piece @ Piece::Vertical(_) => {
                let (f, _, fp) = self.interp(piece, t);
                let lo = self.log_omega_at(t);
                Density::new(0.0, -2.0 * fp / f * lo.ln_omega2.exp(), 0.0)
            }
        }
    }

    fn log_primitive(&self, t: f64) -> Option<LogOmega> {
        if t <= 0.0 {
            return None;
        }
        Some(self.log_omega_at(t))
    }

    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        let piece = self.piece(lo);
        match piece {
            Piece::Tail => Some(OmegaMatrix::new(hi - lo, 0.0, 0.0, hi)),
            Piece::Below => None,
            Piece::Tangent(n) => {
                // omega_i = K_i / (1 - f), rank one with a fixed direction
                let lv = self.levels[n];
                let (_, g_lo, _) = self.interp(piece, lo);
                let (_, g_hi, _) = self.interp(piece, hi);
                let k1 = (lv.ln_g_t - lv.s1_t).exp();
                let k2 = (lv.ln_g_t - lv.s2_t).exp();
                let dg = g_lo - g_hi;
                let d_inv = dg / (g_lo * g_hi);
                Some(OmegaMatrix::new(k1 * d_inv, k2 * d_inv, (k1 * k2).sqrt() * d_inv, hi))
            }
            Piece::Vertical(n) => {
                // omega2 = K2 / f^2
                let lv = self.levels[n + 1];
                let (f_lo, _, _) = self.interp(piece, lo);
                let (f_hi, _, _) = self.interp(piece, hi);
                let k2 = (2.0 * lv.ln_f_x - lv.s2_x).exp();
                let d = k2 * (f_lo - f_hi) * (f_lo + f_hi) / (f_lo * f_lo * f_hi * f_hi);
                Some(OmegaMatrix::new(0.0, d, 0.0, hi))
            }
        }
    }

    fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn commutes_on(&self, _lo: f64, _hi: f64) -> bool {
        true
    }

    fn tail(&self) -> Option<Tail> {
        Some(Tail { start: self.levels[1].t, angle: 0.0 })
    }
}

pub fn make_hpl(params: HplParams) -> Result<HamiltonianModel> {
    Ok(HamiltonianModel::new(Hpl::new(HplParams { variant: HplVariant::Standard, ..params })?))
}

pub fn make_r3_variant(params: HplParams) -> Result<HamiltonianModel> {
    Ok(HamiltonianModel::new(Hpl::new(HplParams { variant: HplVariant::R3, ..params })?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HplQuantity {
    RRingT,
    RHatT,
    RRingXi,
    RHatXi,
    LogRRingOfT,
    LogRHatOfT,
}

/// Leading-order logs of the scales of `H_{p,l}` (eta = 2), up to bounded errors.
/// Node quantities take a level `n`; the `Of T` variants take a point `t` and use the
/// construction's `f(t)`.
pub fn hpl_predict(model: &Hpl, which: HplQuantity, n_or_t: f64) -> Result<f64> {
    let HplParams { p, l, n_max, .. } = *model.params();
    let lpl = (p * l).ln();
    let node = |n: f64| -> Result<f64> {
        if !(n >= 1.0 && n <= n_max as f64 && n.fract() == 0.0) {
            return Err(WeylError::InvalidParams(format!("hpl_predict: level {n} outside 1..={n_max}")));
        }
        Ok(-n * n * lpl / 2.0)
    };
    match which {
        HplQuantity::RRingT => Ok(node(n_or_t)? - n_or_t * (l / p).ln() / 2.0),
        HplQuantity::RHatT => Ok(node(n_or_t)? - n_or_t * l.ln() / 2.0),
        HplQuantity::RRingXi | HplQuantity::RHatXi => Ok(node(n_or_t)? + n_or_t * lpl / 2.0),
        HplQuantity::LogRRingOfT | HplQuantity::LogRHatOfT => {
            let t = n_or_t;
            let piece = model.piece(t);
            let (f, g) = match piece {
                Piece::Tangent(_) | Piece::Vertical(_) => {
                    let (f, g, _) = model.interp(piece, t);
                    (f, g)
                }
                _ => return Err(WeylError::InvalidParams(format!("hpl_predict: t = {t} outside (0, t_1)"))),
            };
            let ring = matches!(which, HplQuantity::LogRRingOfT);
            match piece {
                // t in [t_n, xi_n]
                Piece::Vertical(m) => {
                    let n = (m + 1) as f64;
                    let base = node(n)? - n * (l / p).ln() / 2.0 + f.ln();
                    Ok(if ring { base } else { base - g.ln() / 2.0 })
                }
                // t in [xi_{n+1}, t_n]
                Piece::Tangent(m) => {
                    let n = m as f64;
                    let base = node(n)? - n * lpl / 2.0;
                    Ok(if ring { base + g.ln() } else { base + g.ln() / 2.0 })
                }
                _ => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_at_t1() {
        let h = Hpl::new(HplParams::new(0.5, 0.5)).unwrap();
        let lo = h.log_omega_at(h.params().t(1) * (1.0 - 1e-15));
        assert!(lo.ln_omega1.abs() < 1e-12 && lo.ln_omega2.abs() < 1e-12);
        assert!((h.f(0.125 * (1.0 - 1e-15)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_zero_h1_on_vertical_pieces() {
        let h = Hpl::new(HplParams::new(0.5, 0.5)).unwrap();
        let p = h.params();
        let t = 0.5 * (p.t(3) + p.xi(3));
        let d = h.density(t);
        assert_eq!(d.h1, 0.0);
        assert!(d.h2 > 0.0);
    }

    #[test]
    fn increments_match_primitive_differences() {
        let h = Hpl::new(HplParams::new(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        let p = *h.params();
        for n in 2..6 {
            for (lo, hi) in [(p.xi(n + 1), p.t(n)), (p.t(n), p.xi(n))] {
                let (a, b) = (lo + 0.1 * (hi - lo), lo + 0.7 * (hi - lo));
                let inc = h.omega_increment(a, b).unwrap();
                let (oa, ob) = (h.log_omega_at(a).to_omega(a), h.log_omega_at(b).to_omega(b));
                assert!((inc.omega1 - (ob.omega1 - oa.omega1)).abs() <= 1e-10 * ob.omega1);
                assert!((inc.omega2 - (ob.omega2 - oa.omega2)).abs() <= 1e-10 * ob.omega2);
                assert!((inc.omega3 - (ob.omega3 - oa.omega3)).abs() <= 1e-9 * ob.omega3.abs().max(inc.omega3.abs()));
            }
        }
    }

    #[test]
    fn r3_node_value() {
        let h = Hpl::new(HplParams::r3(0.5, 0.8)).unwrap();
        let xi3 = h.params().xi(3);
        assert!((h.f(xi3) - (1.0 - 0.64)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(Hpl::new(HplParams::r3(0.5, 0.6)).is_err());
        assert!(Hpl::new(HplParams { t_frac: 0.2, ..HplParams::new(0.5, 0.5) }).is_err());
        assert!(Hpl::new(HplParams::new(1.2, 0.5)).is_err());
    }
}
