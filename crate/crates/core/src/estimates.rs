//! Two-sided estimates for `q_H(ir)` built from the scales, plus tangential-behaviour
//! diagnostics. Every report is a list of per-`r` records computed in parallel and
//! returned in grid order.

use crate::error::{Result, WeylError};
use crate::hamiltonian::HamiltonianModel;
use crate::linalg::C64;
use crate::scales::{self, DEFAULT_ETA};
use crate::weyl::{eval_q, QEvaluation};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

/// `points` log-spaced values from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points == 0 {
        return Err(WeylError::InvalidParams(format!("bad grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|k| match k {
            0 => lo,
            k if k == points - 1 => hi,
            k => (a + (b - a) * k as f64 / n).exp(),
        })
        .collect())
}

/// Grid with a fixed density per decade, as used by the reports (default 50 per 6 decades).
pub fn decade_grid(lo: f64, hi: f64, per_decade: f64) -> Result<Vec<f64>> {
    let decades = (hi / lo).log10();
    let points = (decades * per_decade).round().max(1.0) as usize + 1;
    log_grid(lo, hi, points)
}

/// Ordinary least squares slope and intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `(min, max)` of a sample.
pub fn extent(v: impl IntoIterator<Item = f64>) -> (f64, f64) {
    v.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Smallest `C >= 1` with every sample in `[1/C, C]` after dividing by the geometric mean.
pub fn band_constant(v: &[f64]) -> f64 {
    let (lo, hi) = extent(v.iter().copied());
    (hi / lo).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateOptions {
    pub eta: f64,
    /// per-point certificate relative to `A(r)`
    pub tol_factor: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { eta: DEFAULT_ETA, tol_factor: 1e-4 }
    }
}

/// Certificate target at `r`: `tol_factor A(r)`, tightened so it also stays far below `L(r)`.
fn point_tol(a_env: f64, l_env: f64, tol_factor: f64) -> f64 {
    (tol_factor * a_env).min(10.0 * tol_factor * l_env)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub r: f64,
    pub q: (f64, f64),
    pub im_q: f64,
    pub abs_q: f64,
    #[serde(rename = "A")]
    pub a_env: f64,
    #[serde(rename = "L")]
    pub l_env: f64,
    pub t_ring: f64,
    pub t_hat: f64,
    pub omega1_hat: f64,
    pub omega2_hat: f64,
    pub omega3_hat: f64,
    pub ratio_im: f64,
    pub ratio_inv: f64,
    pub ratio_center: f64,
    pub tangent: f64,
    pub tangent_pred: f64,
    /// certificate of `q`; not part of the CSV schema
    #[serde(skip)]
    pub q_error: f64,
}

pub fn theorem1_record(model: &HamiltonianModel, r: f64, opts: &EstimateOptions) -> Result<EstimateRecord> {
    let env = scales::envelopes(model, r, opts.eta)?;
    let o = model.omega(env.t_hat)?;
    let lo = model.log_omega(env.t_hat)?;
    let qe = eval_q(model, C64::new(0.0, r), point_tol(env.a_env, env.l_env, opts.tol_factor))?;
    let q = qe.q();
    let abs_q = q.norm();
    Ok(EstimateRecord {
        r,
        q: qe.value,
        im_q: q.im,
        abs_q,
        a_env: env.a_env,
        l_env: env.l_env,
        t_ring: env.t_ring,
        t_hat: env.t_hat,
        omega1_hat: o.omega1,
        omega2_hat: o.omega2,
        omega3_hat: o.omega3,
        ratio_im: q.im * r * o.omega2,
        ratio_inv: q.im / (abs_q * abs_q) * r * o.omega1,
        ratio_center: (q - o.omega3 / o.omega2).norm() * r * o.omega2,
        tangent: q.im / abs_q,
        tangent_pred: (0.5 * lo.ln_one_minus_f2).exp(),
        q_error: qe.error_radius,
    })
}

pub fn theorem1_report(model: &HamiltonianModel, r_grid: &[f64], opts: &EstimateOptions) -> Result<Vec<EstimateRecord>> {
    r_grid.par_iter().map(|&r| theorem1_record(model, r, opts)).collect()
}

/// Per-model bands of the three dimensionless ratios of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBands {
    pub ratio_im: f64,
    pub ratio_inv: f64,
    pub ratio_center: f64,
    pub tangent: f64,
}

pub fn ratio_bands(records: &[EstimateRecord]) -> RatioBands {
    let b = |f: fn(&EstimateRecord) -> f64| band_constant(&records.iter().map(f).collect::<Vec<_>>());
    RatioBands {
        ratio_im: b(|r| r.ratio_im),
        ratio_inv: b(|r| r.ratio_inv),
        ratio_center: b(|r| r.ratio_center),
        tangent: b(|r| r.tangent / r.tangent_pred),
    }
}

/// The normalization parameter that optimizes the explicit band.
pub const BAND_ETA: f64 = 0.13833;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandConstants {
    pub eta: f64,
    pub theta: f64,
    pub sigma: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

impl BandConstants {
    pub fn new(eta: f64, theta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0 - std::f64::consts::FRAC_1_SQRT_2) {
            return Err(WeylError::InvalidParams(format!("band needs eta in (0, 1 - 1/sqrt 2), got {eta}")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(WeylError::InvalidParams(format!("band needs theta in (0, pi), got {theta}")));
        }
        let sigma = (1.0 - eta).powi(-2) - 1.0;
        let s = theta.sin();
        let c_minus = eta * s / (2.0 * (1.0 + theta.cos().abs())) * (1.0 - sigma) / (1.0 + sigma);
        let c_plus = (sigma + 2.0 / (eta * s)) / (1.0 - sigma);
        Ok(BandConstants { eta, theta, sigma, c_minus, c_plus })
    }

    /// `c_minus eta / 2`, the lower constant against `1 / (r omega2(t_hat_eta))`.
    pub fn lower(&self) -> f64 {
        self.c_minus * self.eta / 2.0
    }

    pub fn upper(&self) -> f64 {
        self.c_plus * self.eta / 2.0
    }

    pub fn ratio(&self) -> f64 {
        self.c_plus / self.c_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRecord {
    pub r: f64,
    pub theta: f64,
    pub im_q: f64,
    pub q_error: f64,
    pub lower: f64,
    pub upper: f64,
    /// `ln` of the smaller slack factor, net of the certificate; negative means a violation
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandResult {
    pub constants: BandConstants,
    pub records: Vec<BandRecord>,
    pub pass: bool,
    pub margin: f64,
}

/// Checks `c_- (eta/2) / (r omega2(t_hat_eta(r))) <= Im q(r e^{i theta}) <= c_+ (eta/2) / (r omega2(...))`.
pub fn certified_band(model: &HamiltonianModel, r_grid: &[f64], theta: f64) -> Result<BandResult> {
    let constants = BandConstants::new(BAND_ETA, theta)?;
    let records: Vec<BandRecord> = r_grid
        .par_iter()
        .map(|&r| -> Result<BandRecord> {
            let t = scales::t_hat(model, r, BAND_ETA)?;
            let w2 = model.omega(t)?.omega2;
            let scale = 1.0 / (r * w2);
            let (lower, upper) = (constants.lower() * scale, constants.upper() * scale);
            let qe = eval_q(model, C64::from_polar(r, theta), 1e-3 * lower)?;
            let im = qe.value.1;
            let e = qe.error_radius;
            let margin = ((im - e) / lower).ln().min((upper / (im + e)).ln());
            Ok(BandRecord { r, theta, im_q: im, q_error: e, lower, upper, margin })
        })
        .collect::<Result<_>>()?;
    let margin = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(BandResult { constants, pass: margin >= 0.0, records, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropA4Record {
    pub r: f64,
    pub tangent: f64,
    pub tangent_pred: f64,
    pub tangent_ratio: f64,
    /// `r_ring(t_hat(r))`
    pub r_shifted: f64,
    /// `|q(i r_shifted)| / |q(ir)|`
    pub abs_ratio: f64,
}

pub fn prop_a4_report(model: &HamiltonianModel, r_grid: &[f64], opts: &EstimateOptions) -> Result<Vec<PropA4Record>> {
    r_grid
        .par_iter()
        .map(|&r| {
            let rec = theorem1_record(model, r, opts)?;
            let r_shifted = scales::r_ring(model, rec.t_hat, opts.eta)?;
            let env = scales::envelopes(model, r_shifted, opts.eta)?;
            let q2 = eval_q(model, C64::new(0.0, r_shifted), point_tol(env.a_env, env.l_env, opts.tol_factor))?;
            Ok(PropA4Record {
                r,
                tangent: rec.tangent,
                tangent_pred: rec.tangent_pred,
                tangent_ratio: rec.tangent / rec.tangent_pred,
                r_shifted,
                abs_ratio: q2.q().norm() / rec.abs_q,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorT5Record {
    pub r: f64,
    pub k: f64,
    /// `Im q(ikr)`
    pub im_qk: f64,
    /// `|q(ikr) - c(r)|` with `c = omega3/omega2` at `t_hat(r)`
    pub dist_k: f64,
    /// `|q(ir) - c(r)|`
    pub dist_1: f64,
    pub ratio_im_dist: f64,
    pub ratio_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorT5Result {
    pub records: Vec<CorT5Record>,
    /// `(min, max)` of `Im q(ikr) / |q(ikr) - c|`
    pub im_dist_extent: (f64, f64),
    /// `(min, max)` of `|q(ikr) - c| / |q(ir) - c|`
    pub dist_extent: (f64, f64),
}

pub fn cor_t5_check(model: &HamiltonianModel, r_grid: &[f64], k: f64, opts: &EstimateOptions) -> Result<CorT5Result> {
    if !(k > 0.0) {
        return Err(WeylError::InvalidParams(format!("k must be positive, got {k}")));
    }
    let records: Vec<CorT5Record> = r_grid
        .par_iter()
        .map(|&r| {
            let rec = theorem1_record(model, r, opts)?;
            let c = rec.omega3_hat / rec.omega2_hat;
            let env = scales::envelopes(model, k * r, opts.eta)?;
            let qk = eval_q(model, C64::new(0.0, k * r), point_tol(env.a_env, env.l_env, opts.tol_factor))?.q();
            let q1 = C64::new(rec.q.0, rec.q.1);
            let dist_k = (qk - c).norm();
            let dist_1 = (q1 - c).norm();
            Ok(CorT5Record {
                r,
                k,
                im_qk: qk.im,
                dist_k,
                dist_1,
                ratio_im_dist: qk.im / dist_k,
                ratio_dist: dist_k / dist_1,
            })
        })
        .collect::<Result<_>>()?;
    let im_dist_extent = extent(records.iter().map(|r| r.ratio_im_dist));
    let dist_extent = extent(records.iter().map(|r| r.ratio_dist));
    Ok(CorT5Result { records, im_dist_extent, dist_extent })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowVarRecord {
    pub r: f64,
    pub k: f64,
    pub tangent: f64,
    /// `|q(ikr) / q(ir) - 1|`
    pub deviation: f64,
    /// same with `kr` replaced by `k r tangent^(-1/2)`
    pub deviation_half: f64,
}

fn q_at(model: &HamiltonianModel, r: f64, opts: &EstimateOptions) -> Result<QEvaluation> {
    let env = scales::envelopes(model, r, opts.eta)?;
    eval_q(model, C64::new(0.0, r), point_tol(env.a_env, env.l_env, opts.tol_factor))
}

/// Deviations from slow variation. The `delta` variant stretches the ray by
/// `tangent^(-delta)`; `delta = 0` is the plain deviation.
pub fn slow_variation(model: &HamiltonianModel, k: f64, r_grid: &[f64], opts: &EstimateOptions) -> Result<Vec<SlowVarRecord>> {
    if !(k > 0.0) {
        return Err(WeylError::InvalidParams(format!("k must be positive, got {k}")));
    }
    r_grid
        .par_iter()
        .map(|&r| {
            let q1 = q_at(model, r, opts)?.q();
            let tangent = q1.im / q1.norm();
            let qk = q_at(model, k * r, opts)?.q();
            let qh = q_at(model, k * r / tangent.sqrt(), opts)?.q();
            Ok(SlowVarRecord {
                r,
                k,
                tangent,
                deviation: (qk / q1 - 1.0).norm(),
                deviation_half: (qh / q1 - 1.0).norm(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffdiagRecord {
    pub t: f64,
    pub r: f64,
    pub im_q_a: f64,
    pub im_q_b: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffdiagResult {
    pub records: Vec<OffdiagRecord>,
    /// empirical constant `max Im q_A / Im q_B`
    pub c: f64,
    /// fitted growth of `ln(ratio)` toward small `t` over the grid span
    pub drift: f64,
    pub pass: bool,
}

/// Largest upward drift of `ln(ratio)` tolerated across the grid.
pub const OFFDIAG_DRIFT_LIMIT: f64 = std::f64::consts::LN_2;

/// Compares `Im q` of two models with equal diagonals and `|omega3_A| >= |omega3_B|`
/// at `r = r_hat_A(t)`.
pub fn offdiag_monotonicity_check(
    model_a: &HamiltonianModel,
    model_b: &HamiltonianModel,
    t_grid: &[f64],
    opts: &EstimateOptions,
) -> Result<OffdiagResult> {
    let records: Vec<OffdiagRecord> = t_grid
        .par_iter()
        .map(|&t| {
            let (oa, ob) = (model_a.omega(t)?, model_b.omega(t)?);
            let same = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs());
            if !same(oa.omega1, ob.omega1) || !same(oa.omega2, ob.omega2) {
                return Err(WeylError::HypothesisViolated { t, what: "diagonal primitives differ".into() });
            }
            if oa.omega3.abs() < ob.omega3.abs() * (1.0 - 1e-12) {
                return Err(WeylError::HypothesisViolated { t, what: "|omega3_A| < |omega3_B|".into() });
            }
            let r = scales::r_hat(model_a, t, opts.eta)?;
            let qa = q_at(model_a, r, opts)?.value.1;
            let qb = q_at(model_b, r, opts)?.value.1;
            Ok(OffdiagRecord { t, r, im_q_a: qa, im_q_b: qb, ratio: qa / qb })
        })
        .collect::<Result<_>>()?;
    let c = records.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = records.iter().map(|r| r.t.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.ratio.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let (lo, hi) = extent(xs.iter().copied());
    let drift = (-slope * (hi - lo)).max(0.0);
    Ok(OffdiagResult { pass: c.is_finite() && drift <= OFFDIAG_DRIFT_LIMIT, records, c, drift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IncreaseVerdict {
    PositivelyIncreasing,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncreaseDiagnostic {
    pub verdict: IncreaseVerdict,
    /// per `lambda`: `(lambda, max ratio over the top half, extrapolated limit)`
    pub per_lambda: Vec<(f64, f64, f64)>,
}

/// Threshold on `limsup |q(i lambda r)| / |q(ir)|`.
pub const INCREASE_THRESHOLD: f64 = 0.95;

/// Tests `limsup |q(i lambda r)| / |q(ir)| < 1` on log-spaced samples `(r, |q(ir)|)`.
/// Besides the top-half maximum, the ratio is fitted as `c0 + c1 / ln r` and the limit
/// `c0` must also clear the threshold, so that slowly converging ratios such as those of
/// `log r` are not mistaken for a strict gap.
pub fn positive_increase_diagnostic(samples: &[(f64, f64)]) -> Result<IncreaseDiagnostic> {
    if samples.len() < 4 {
        return Err(WeylError::InsufficientSpan { decades: 0.0 });
    }
    let mut s: Vec<(f64, f64)> = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decades = (s[s.len() - 1].0 / s[0].0).log10();
    if decades < 4.0 {
        return Err(WeylError::InsufficientSpan { decades });
    }
    let xs: Vec<f64> = s.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = s.iter().map(|p| p.1.ln()).collect();
    let interp = |x: f64| -> Option<f64> {
        let k = xs.partition_point(|&v| v <= x);
        if k == 0 || k == xs.len() {
            return (x == xs[xs.len() - 1]).then(|| ys[ys.len() - 1]);
        }
        let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
        Some(ys[k - 1] + w * (ys[k] - ys[k - 1]))
    };
    let mid = 0.5 * (xs[0] + xs[xs.len() - 1]);
    let mut per_lambda = Vec::new();
    let mut verdict = IncreaseVerdict::Inconclusive;
    for lambda in [0.5f64, 0.25, 0.125] {
        let mut inv_log = Vec::new();
        let mut ratios = Vec::new();
        for (x, y) in xs.iter().zip(&ys).filter(|(x, _)| **x >= mid) {
            if let Some(yl) = interp(x + lambda.ln()) {
                ratios.push((yl - y).exp());
                inv_log.push(1.0 / x.abs().max(1.0));
            }
        }
        if ratios.len() < 2 {
            continue;
        }
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (_, c0) = linear_fit(&inv_log, &ratios);
        if max <= INCREASE_THRESHOLD && c0 <= INCREASE_THRESHOLD {
            verdict = IncreaseVerdict::PositivelyIncreasing;
        }
        per_lambda.push((lambda, max, c0));
    }
    Ok(IncreaseDiagnostic { verdict, per_lambda })
}

/// Default ray for the band checks.
pub const DEFAULT_THETA: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_constants_effective_values() {
        let b = BandConstants::new(BAND_ETA, FRAC_PI_2).unwrap();
        assert!((b.upper() - 1.568).abs() < 5e-4, "{}", b.upper());
        assert!((b.lower() - 0.00232).abs() < 5e-5, "{}", b.lower());
        assert!((b.ratio() - 675.772).abs() < 0.05, "{}", b.ratio());
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1e3, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!((g[3] - 1.0).abs() < 1e-12);
        assert_eq!(decade_grid(1.0, 1e6, 50.0 / 6.0).unwrap().len(), 51);
    }

    #[test]
    fn increase_diagnostic_cases() {
        let g = log_grid(1e2, 1e10, 81).unwrap();
        let sqrt: Vec<_> = g.iter().map(|&r| (r, r.sqrt())).collect();
        let log: Vec<_> = g.iter().map(|&r| (r, r.ln())).collect();
        assert_eq!(positive_increase_diagnostic(&sqrt).unwrap().verdict, IncreaseVerdict::PositivelyIncreasing);
        assert_eq!(positive_increase_diagnostic(&log).unwrap().verdict, IncreaseVerdict::Inconclusive);
        assert!(matches!(positive_increase_diagnostic(&sqrt[..20]), Err(WeylError::InsufficientSpan { .. })));
    }
}
