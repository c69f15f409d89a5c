//! Hamiltonians with a prescribed angle profile `f = omega3 / sqrt(omega1 omega2)`.
//!
//! Given `f` on `(a, b]` with `|f| < 1` and a budget `g >= Delta(f) = 2|f'|/(1 - sgn(f') f)`
//! that is not integrable at `a`, split `g = alpha1 + alpha2` and set
//! `omega_i(t) = exp(-int_t^b alpha_i)`, `omega3 = sqrt(omega1 omega2) f`.
//! Then `h_i = omega_i alpha_i` and `h3 = sqrt(omega1 omega2) (f' + f g / 2)`, which is
//! positive semidefinite exactly when `alpha1 alpha2 >= (f' + f g / 2)^2`.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, LogOmega, OmegaMatrix, Tail};
use crate::quad::gauss_legendre8;
use serde::{Deserialize, Serialize};

/// A real function of `t` with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `coef * t^exponent`
    Power { coef: f64, exponent: f64 },
    /// linear through `(t, value)` points, constant beyond the first and last
    PiecewiseLinear { points: Vec<[f64; 2]> },
}

impl Profile {
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Profile::Constant { value } => (*value, 0.0),
            Profile::Power { coef, exponent } => {
                let v = coef * t.powf(*exponent);
                (v, if *exponent == 0.0 { 0.0 } else { v * exponent / t })
            }
            Profile::PiecewiseLinear { points } => {
                let k = points.partition_point(|p| p[0] <= t);
                if k == 0 {
                    return (points[0][1], 0.0);
                }
                if k == points.len() {
                    return (points[k - 1][1], 0.0);
                }
                let ([x0, y0], [x1, y1]) = (points[k - 1], points[k]);
                let s = (y1 - y0) / (x1 - x0);
                (y0 + s * (t - x0), s)
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Profile::PiecewiseLinear { points } => points.iter().map(|p| p[0]).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Profile::PiecewiseLinear { points } = self {
            if points.is_empty() || points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(WeylError::InvalidParams(format!("{name}: points must be nonempty with increasing t")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Split {
    /// `alpha1 = alpha2 = g / 2`
    #[default]
    Equal,
    /// `alpha1 = fraction * g`
    Fraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedAngleSpec {
    #[serde(default)]
    pub a: f64,
    pub b: f64,
    pub f: Profile,
    pub g: Profile,
    /// use `g + Delta(f)` instead of `g`
    #[serde(default)]
    pub add_delta: bool,
    #[serde(default)]
    pub split: Split,
}

/// `Delta(f) = 2|f'| / (1 - sgn(f') f)`.
pub fn delta_of_angle(f: f64, fp: f64) -> f64 {
    if fp == 0.0 {
        0.0
    } else {
        2.0 * fp.abs() / (1.0 - fp.signum() * f)
    }
}

const NODES_PER_OCTAVE: f64 = 8.0;
const DEPTH_LIMIT: f64 = 800.0;

#[derive(Debug, Clone)]
pub struct PrescribedAngle {
    spec: PrescribedAngleSpec,
    /// descending from `b`
    nodes: Vec<f64>,
    /// `int_{nodes[k]}^b (alpha1, alpha2)`
    cum: Vec<[f64; 2]>,
    breaks: Vec<f64>,
    /// `omega1, omega2, omega3` at `b`
    at_b: [f64; 3],
}

impl PrescribedAngle {
    pub fn new(spec: PrescribedAngleSpec) -> Result<Self> {
        let (a, b) = (spec.a, spec.b);
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(WeylError::InvalidParams(format!("prescribed_angle: need a < b finite, got [{a}, {b}]")));
        }
        spec.f.validate("f")?;
        spec.g.validate("g")?;
        if let Split::Fraction { fraction } = spec.split {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(WeylError::InvalidParams(format!("prescribed_angle: split fraction {fraction} outside [0, 1]")));
            }
        }
        let mut kinks: Vec<f64> =
            spec.f.kinks().into_iter().chain(spec.g.kinks()).filter(|&k| k > a && k < b).collect();
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();

        let mut model = PrescribedAngle { spec, nodes: vec![b], cum: vec![[0.0; 2]], breaks: Vec::new(), at_b: [1.0, 1.0, 0.0] };
        let floor = (b - a) * 1e-300;
        let mut k = 1.0;
        let mut pending = kinks.clone();
        loop {
            let geo = a + (b - a) * (-k / NODES_PER_OCTAVE).exp2();
            let mut next = geo;
            if let Some(&kk) = pending.last() {
                if kk >= geo {
                    next = kk;
                    pending.pop();
                } else {
                    k += 1.0;
                }
            } else {
                k += 1.0;
            }
            let hi = *model.nodes.last().expect("seeded");
            if next >= hi {
                continue;
            }
            let inc = gauss_legendre8(
                &|s| {
                    let (a1, a2) = model.alphas(s);
                    [a1, a2, 0.0]
                },
                next,
                hi,
            );
            let prev = *model.cum.last().expect("seeded");
            let c = [prev[0] + inc[0], prev[1] + inc[1]];
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(WeylError::InvalidParams(format!("prescribed_angle: g not integrable near t = {next}")));
            }
            model.nodes.push(next);
            model.cum.push(c);
            if c[0].min(c[1]) > DEPTH_LIMIT || next - a < floor {
                break;
            }
        }
        let deepest = *model.cum.last().expect("seeded");
        if deepest[0].min(deepest[1]) < 40.0 {
            return Err(WeylError::InvalidParams(format!(
                "prescribed_angle: g must not be integrable at a (alpha integrals reach only {:.3e}, {:.3e})",
                deepest[0], deepest[1]
            )));
        }
        let mut breaks = kinks;
        breaks.push(b);
        model.breaks = breaks;
        let (fb, _) = model.spec.f.eval(b);
        model.at_b = [1.0, 1.0, fb];
        model.check_hypotheses()?;
        Ok(model)
    }

    fn g_total(&self, t: f64) -> (f64, f64, f64) {
        let (f, fp) = self.spec.f.eval(t);
        let (mut g, _) = self.spec.g.eval(t);
        if self.spec.add_delta {
            g += delta_of_angle(f, fp);
        }
        (f, fp, g)
    }

    fn alphas(&self, t: f64) -> (f64, f64) {
        let (_, _, g) = self.g_total(t);
        match self.spec.split {
            Split::Equal => (0.5 * g, 0.5 * g),
            Split::Fraction { fraction } => (fraction * g, (1.0 - fraction) * g),
        }
    }

    fn check_hypotheses(&self) -> Result<()> {
        for w in self.nodes.windows(2) {
            for lam in [0.25, 0.75] {
                let t = w[1] + lam * (w[0] - w[1]);
                let (f, fp, g) = self.g_total(t);
                if !(f.abs() < 1.0) {
                    return Err(WeylError::HypothesisViolated { t, what: format!("|f| = {} must stay below 1", f.abs()) });
                }
                let need = delta_of_angle(f, fp);
                if g < need * (1.0 - 1e-10) - 1e-300 {
                    return Err(WeylError::HypothesisViolated { t, what: format!("g = {g} below Delta(f) = {need}") });
                }
                let (a1, a2) = self.alphas(t);
                let m = fp + 0.5 * f * g;
                if a1 * a2 < m * m * (1.0 - 1e-9) - 1e-300 * g * g {
                    return Err(WeylError::SplitOutOfRange { t });
                }
            }
        }
        Ok(())
    }

    /// `int_t^b (alpha1, alpha2)` or `None` below the resolved depth.
    fn integrals(&self, t: f64) -> Option<[f64; 2]> {
        // nodes descend; first index with nodes[k] <= t
        let k = self.nodes.partition_point(|&n| n > t);
        if k == self.nodes.len() {
            return None;
        }
        let base = self.cum[k];
        if k == 0 || self.nodes[k] == t {
            return Some(base);
        }
        let inc = gauss_legendre8(
            &|s| {
                let (a1, a2) = self.alphas(s);
                [a1, a2, 0.0]
            },
            t,
            self.nodes[k - 1],
        );
        Some([self.cum[k - 1][0] + inc[0], self.cum[k - 1][1] + inc[1]])
    }

    fn ln_one_minus_f2(f: f64) -> f64 {
        (-f).ln_1p() + f.ln_1p()
    }
}

impl Hamiltonian for PrescribedAngle {
    fn label(&self) -> String {
        format!("prescribed_angle[{}, {}]", self.spec.a, self.spec.b)
    }

    fn left(&self) -> f64 {
        self.spec.a
    }

    fn density(&self, t: f64) -> Density {
        if t >= self.spec.b {
            return Density::new(1.0, 0.0, 0.0);
        }
        let Some([i1, i2]) = self.integrals(t) else {
            return Density::new(0.0, 0.0, 0.0);
        };
        let (f, fp, g) = self.g_total(t);
        let (a1, a2) = self.alphas(t);
        let (w1, w2) = ((-i1).exp(), (-i2).exp());
        Density::new(w1 * a1, w2 * a2, (-0.5 * (i1 + i2)).exp() * (fp + 0.5 * f * g))
    }

    fn log_primitive(&self, t: f64) -> Option<LogOmega> {
        if t >= self.spec.b {
            let [w1, w2, w3] = self.at_b;
            let o1 = w1 + (t - self.spec.b);
            let f = w3 / (o1 * w2).sqrt();
            return Some(LogOmega { ln_omega1: o1.ln(), ln_omega2: w2.ln(), f, ln_one_minus_f2: Self::ln_one_minus_f2(f) });
        }
        match self.integrals(t) {
            Some([i1, i2]) => {
                let (f, _) = self.spec.f.eval(t);
                Some(LogOmega { ln_omega1: -i1, ln_omega2: -i2, f, ln_one_minus_f2: Self::ln_one_minus_f2(f) })
            }
            None => Some(LogOmega {
                ln_omega1: f64::NEG_INFINITY,
                ln_omega2: f64::NEG_INFINITY,
                f: 0.0,
                ln_one_minus_f2: 0.0,
            }),
        }
    }

    fn omega_increment(&self, lo: f64, hi: f64) -> Option<OmegaMatrix> {
        (lo >= self.spec.b).then(|| OmegaMatrix::new(hi - lo, 0.0, 0.0, hi))
    }

    fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn singular_left(&self) -> bool {
        true
    }

    fn commutes_on(&self, lo: f64, _hi: f64) -> bool {
        lo >= self.spec.b
    }

    fn tail(&self) -> Option<Tail> {
        Some(Tail { start: self.spec.b, angle: 0.0 })
    }
}

pub fn make_prescribed_angle(spec: PrescribedAngleSpec) -> Result<HamiltonianModel> {
    Ok(HamiltonianModel::new(PrescribedAngle::new(spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angle_gives_diagonal_t() {
        let spec = PrescribedAngleSpec {
            a: 0.0,
            b: 1.0,
            f: Profile::Constant { value: 0.0 },
            g: Profile::Power { coef: 2.0, exponent: -1.0 },
            add_delta: false,
            split: Split::Equal,
        };
        let m = make_prescribed_angle(spec).unwrap();
        for t in [1e-8, 1e-3, 0.3, 0.77] {
            let o = m.omega(t).unwrap();
            assert!((o.omega1 / t - 1.0).abs() < 1e-12 && (o.omega2 / t - 1.0).abs() < 1e-12, "{o:?}");
            assert_eq!(o.omega3, 0.0);
        }
    }

    #[test]
    fn equality_case_is_rank_one() {
        let spec = PrescribedAngleSpec {
            a: 0.0,
            b: 1.0,
            f: Profile::Power { coef: 0.5, exponent: 1.0 },
            g: Profile::Power { coef: 1.0, exponent: -1.0 },
            add_delta: true,
            split: Split::Equal,
        };
        let m = make_prescribed_angle(spec.clone()).unwrap();
        let lo = m.log_omega(0.2).unwrap();
        assert!((lo.f - 0.1).abs() < 1e-15);
        let bad = PrescribedAngleSpec { split: Split::Fraction { fraction: 0.9 }, ..spec };
        assert!(matches!(make_prescribed_angle(bad), Err(WeylError::SplitOutOfRange { .. })));
    }

    #[test]
    fn integrable_budget_rejected() {
        let spec = PrescribedAngleSpec {
            a: 0.0,
            b: 1.0,
            f: Profile::Constant { value: 0.0 },
            g: Profile::Constant { value: 1.0 },
            add_delta: false,
            split: Split::Equal,
        };
        assert!(make_prescribed_angle(spec).is_err());
    }
}
