//! Window-relative growth classes, the ⪯ preorder with explicit constants,
//! and Abel step counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::spaces::validate_abel_hypotheses;

pub const R2_THRESHOLD: f64 = 0.95;
pub const MIN_SAMPLES: usize = 8;
/// Exponents in `[LINEAR_LO, LINEAR_HI)` are classified linear.
pub const LINEAR_LO: f64 = 0.85;
pub const LINEAR_HI: f64 = 1.15;
/// Below this log-log slope a good semi-log fit wins.
pub const LOG_SLOPE: f64 = 0.25;

/// Finite samples `(r, value)` with `r` strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSamples {
    points: Vec<(f64, f64)>,
}

impl FunctionSamples {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidQuery("no samples".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidQuery("samples must be finite".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidQuery("sample radii must be strictly increasing".into()));
        }
        Ok(FunctionSamples { points })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(radii: &[f64], f: F) -> Result<Self> {
        Self::new(radii.iter().map(|&r| (r, f(r))).collect())
    }

    pub fn from_spec(radii: &[f64], f: &FunctionSpec) -> Result<Self> {
        Self::from_fn(radii, |r| f.eval(r))
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Piecewise-linear interpolation, clamped at both ends.
    pub fn eval(&self, r: f64) -> f64 {
        let p = &self.points;
        let k = p.partition_point(|q| q.0 <= r);
        if k == 0 {
            return p[0].1;
        }
        if k == p.len() {
            return p[k - 1].1;
        }
        let (x0, y0) = p[k - 1];
        let (x1, y1) = p[k];
        y0 + (y1 - y0) * (r - x0) / (x1 - x0)
    }

    pub fn scaled(&self, c: f64) -> FunctionSamples {
        FunctionSamples { points: self.points.iter().map(|&(r, v)| (r, c * v)).collect() }
    }

    fn top_half(&self) -> &[(f64, f64)] {
        &self.points[self.points.len() / 2..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SublinearVerdict {
    SublinearOnWindow,
    NotSublinearOnWindow,
    Inconclusive,
}

/// The declared tail rule for "ratio → 0": replace each ratio by the sup of
/// the ratios at larger radii, then require the mean over the top half of
/// the samples to be less than half the mean over the bottom half.
pub fn ratio_tends_to_zero(ratios: &[(f64, f64)]) -> SublinearVerdict {
    if ratios.len() < MIN_SAMPLES || ratios.iter().any(|p| !p.1.is_finite() || p.1 < 0.0) {
        return SublinearVerdict::Inconclusive;
    }
    let mut tail_sup = vec![0.0; ratios.len()];
    let mut acc: f64 = 0.0;
    for k in (0..ratios.len()).rev() {
        acc = acc.max(ratios[k].1);
        tail_sup[k] = acc;
    }
    let half = ratios.len() / 2;
    let first = tail_sup[..half].iter().sum::<f64>() / half as f64;
    let last = tail_sup[half..].iter().sum::<f64>() / (ratios.len() - half) as f64;
    if first == 0.0 && last == 0.0 {
        return SublinearVerdict::SublinearOnWindow;
    }
    if last < 0.5 * first {
        SublinearVerdict::SublinearOnWindow
    } else {
        SublinearVerdict::NotSublinearOnWindow
    }
}

pub fn is_sublinear_window(f: &FunctionSamples) -> SublinearVerdict {
    let ratios: Vec<(f64, f64)> = f.points.iter().filter(|p| p.0 > 0.0).map(|&(r, v)| (r, v.max(0.0) / r)).collect();
    ratio_tends_to_zero(&ratios)
}

/// Search box for ⪯ constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantBox {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    pub c4: Vec<f64>,
}

impl Default for ConstantBox {
    fn default() -> Self {
        let geo = vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        let add = vec![0.0, 1.0, 4.0, 16.0];
        ConstantBox { c1: geo.clone(), c2: geo, c3: add.clone(), c4: add }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreorderFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub residual: f64,
}

impl PreorderFit {
    /// Largest amount by which `f(r) ≤ C1 g(C2 r + C3) + C4` fails on `points`.
    pub fn violation(c: (f64, f64, f64, f64), points: &[(f64, f64)], g: &FunctionSamples) -> f64 {
        let mut worst: f64 = 0.0;
        for &(r, v) in points {
            let bound = c.0 * g.eval(c.1 * r + c.2) + c.3;
            let slack = 1e-9 * bound.abs().max(1.0);
            if v > bound + slack {
                worst = worst.max(v - bound);
            }
        }
        worst
    }
}

/// Lexicographically smallest box constants with `f ⪯ g` on the shared window.
pub fn preceq_fit(f: &FunctionSamples, g: &FunctionSamples, cbox: &ConstantBox) -> Option<PreorderFit> {
    let (flo, fhi) = f.window();
    let (glo, ghi) = g.window();
    let lo = flo.max(glo);
    let hi = fhi.min(ghi);
    if lo > hi {
        return None;
    }
    let pts: Vec<(f64, f64)> = f.points.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect();
    if pts.is_empty() {
        return None;
    }
    let mut c1s = cbox.c1.clone();
    let mut c2s = cbox.c2.clone();
    let mut c3s = cbox.c3.clone();
    let mut c4s = cbox.c4.clone();
    for v in [&mut c1s, &mut c2s, &mut c3s, &mut c4s] {
        v.sort_by(f64::total_cmp);
    }
    for &c1 in &c1s {
        for &c2 in &c2s {
            for &c3 in &c3s {
                for &c4 in &c4s {
                    if PreorderFit::violation((c1, c2, c3, c4), &pts, g) == 0.0 {
                        return Some(PreorderFit { c1, c2, c3, c4, residual: 0.0 });
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GrowthClass {
    Bounded,
    Logarithmic,
    Power { alpha: f64 },
    Linear,
    Superlinear,
    Inconclusive,
}

impl GrowthClass {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthClass::Bounded => "bounded",
            GrowthClass::Logarithmic => "logarithmic",
            GrowthClass::Power { .. } => "power",
            GrowthClass::Linear => "linear",
            GrowthClass::Superlinear => "superlinear",
            GrowthClass::Inconclusive => "inconclusive",
        }
    }

    /// Same class ignoring the exponent value, except that sub- and
    /// super-linear powers differ.
    pub fn same_kind(&self, other: &GrowthClass) -> bool {
        match (self, other) {
            (GrowthClass::Power { alpha: a }, GrowthClass::Power { alpha: b }) => (*a < 1.0) == (*b < 1.0),
            _ => self.name() == other.name(),
        }
    }

    pub fn is_sublinear(&self) -> bool {
        match self {
            GrowthClass::Bounded | GrowthClass::Logarithmic => true,
            GrowthClass::Power { alpha } => *alpha < LINEAR_LO,
            _ => false,
        }
    }

    pub fn is_superlinear(&self) -> bool {
        match self {
            GrowthClass::Superlinear => true,
            GrowthClass::Power { alpha } => *alpha >= LINEAR_HI,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub window_samples: usize,
    pub slope_loglog: Option<f64>,
    pub r2_power: Option<f64>,
    pub r2_log: Option<f64>,
    pub r2_exp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub class: GrowthClass,
    pub exponent: Option<f64>,
    pub window: (f64, f64),
    pub diagnostics: FitDiagnostics,
}

/// Least-squares line; returns (slope, intercept, R²).
pub fn linear_fit(xy: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, intercept, r2))
}

pub fn classify_growth(f: &FunctionSamples) -> FitReport {
    let window_pts = f.top_half();
    let window = (window_pts[0].0, window_pts[window_pts.len() - 1].0);
    let mut diagnostics =
        FitDiagnostics { window_samples: window_pts.len(), slope_loglog: None, r2_power: None, r2_log: None, r2_exp: None };
    let report = |class, exponent, diagnostics| FitReport { class, exponent, window, diagnostics };
    if f.len() < MIN_SAMPLES {
        return report(GrowthClass::Inconclusive, None, diagnostics);
    }
    let max_abs = window_pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let lo = window_pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = window_pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= (1e-6 * max_abs).max(1e-9) {
        return report(GrowthClass::Bounded, None, diagnostics);
    }
    let positive: Vec<(f64, f64)> = window_pts.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    let loglog: Vec<(f64, f64)> = positive.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let semilog: Vec<(f64, f64)> = window_pts.iter().filter(|p| p.0 > 0.0).map(|p| (p.0.ln(), p.1)).collect();
    let explin: Vec<(f64, f64)> = positive.iter().map(|p| (p.0, p.1.ln())).collect();
    let pow = if positive.len() == window_pts.len() { linear_fit(&loglog) } else { None };
    let log = linear_fit(&semilog);
    let exp = linear_fit(&explin);
    diagnostics.slope_loglog = pow.map(|p| p.0);
    diagnostics.r2_power = pow.map(|p| p.2);
    diagnostics.r2_log = log.map(|p| p.2);
    diagnostics.r2_exp = exp.map(|p| p.2);
    let pow_ok = pow.filter(|p| p.2 >= R2_THRESHOLD);
    let log_ok = log.is_some_and(|p| p.2 >= R2_THRESHOLD && p.0 > 0.0);
    let exponent = pow_ok.map(|p| p.0);
    if let Some((alpha, _, _)) = pow_ok {
        if alpha < LOG_SLOPE && log_ok {
            return report(GrowthClass::Logarithmic, exponent, diagnostics);
        }
        let class = if (LINEAR_LO..LINEAR_HI).contains(&alpha) {
            GrowthClass::Linear
        } else {
            GrowthClass::Power { alpha }
        };
        return report(class, exponent, diagnostics);
    }
    if log_ok {
        return report(GrowthClass::Logarithmic, None, diagnostics);
    }
    if exp.is_some_and(|p| p.2 >= R2_THRESHOLD && p.0 > 0.0) {
        return report(GrowthClass::Superlinear, None, diagnostics);
    }
    report(GrowthClass::Inconclusive, None, diagnostics)
}

/// Minimal n with (Id − ρ)ⁿ(x) ∈ [A′, A).
pub fn abel_steps(rho: &FunctionSpec, a: f64, x: f64) -> Result<u64> {
    validate_abel_hypotheses(rho, a)?;
    let a_prime = a - rho.eval(a);
    let slack = 1e-7 * a.abs().max(1.0);
    if x < a_prime - slack || !x.is_finite() {
        return Err(Error::OutOfDomain(format!("x = {x} below A' = {a_prime}")));
    }
    let mut v = x;
    let mut n = 0u64;
    while v >= a - slack {
        v -= rho.eval(v);
        n += 1;
        if n > 100_000_000 {
            return Err(Error::InvalidFunction("Abel iteration does not terminate".into()));
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::geometric_grid;

    fn samples(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> FunctionSamples {
        FunctionSamples::from_fn(&geometric_grid(lo, hi, 4), f).unwrap()
    }

    #[test]
    fn sublinear_window_examples() {
        assert_eq!(is_sublinear_window(&samples(f64::sqrt, 1.0, 1e4)), SublinearVerdict::SublinearOnWindow);
        assert_eq!(is_sublinear_window(&samples(|r| r, 1.0, 1e4)), SublinearVerdict::NotSublinearOnWindow);
        assert_eq!(is_sublinear_window(&samples(|r| r / r.ln(), 2.0, 1e4)), SublinearVerdict::SublinearOnWindow);
        assert_eq!(is_sublinear_window(&samples(|r| r, 1.0, 2.0)), SublinearVerdict::Inconclusive);
    }

    #[test]
    fn preceq_examples() {
        let g = samples(|r| r, 1.0, 1e4);
        let fit = preceq_fit(&g, &g, &ConstantBox::default()).unwrap();
        assert_eq!((fit.c1, fit.c2, fit.c3, fit.c4), (1.0, 1.0, 0.0, 0.0));
        let f = samples(|r| 2.0 * r + 3.0, 1.0, 1e4);
        let fit = preceq_fit(&f, &g, &ConstantBox::default()).unwrap();
        assert_eq!((fit.c1, fit.c2, fit.c3, fit.c4), (2.0, 1.0, 0.0, 4.0));
        let lin = samples(|r| r, 2.0, 1e4);
        let log = samples(f64::ln, 2.0, 1e4);
        assert!(preceq_fit(&lin, &log, &ConstantBox::default()).is_none());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_growth(&samples(|_| 3.0, 1.0, 1e4)).class, GrowthClass::Bounded);
        assert_eq!(classify_growth(&samples(|r| r, 1.0, 1e4)).class, GrowthClass::Linear);
        assert_eq!(classify_growth(&samples(|r| r.ln() + 1.0, 1.0, 1e4)).class, GrowthClass::Logarithmic);
        let sq = classify_growth(&samples(f64::sqrt, 1.0, 1e4));
        assert!(matches!(sq.class, GrowthClass::Power { alpha } if (alpha - 0.5).abs() < 1e-9));
        let quad = classify_growth(&samples(|r| r * r, 1.0, 1e4));
        assert!(quad.class.is_superlinear());
        assert_eq!(classify_growth(&samples(|r| r, 1.0, 2.0)).class, GrowthClass::Inconclusive);
    }

    #[test]
    fn abel_examples() {
        let half = FunctionSpec::linear(0.5);
        assert_eq!(abel_steps(&half, 2.0, 16.0).unwrap(), 4);
        assert_eq!(abel_steps(&half, 2.0, 1.5).unwrap(), 0);
        assert!(abel_steps(&half, 2.0, 0.5).is_err());
        let rho = FunctionSpec::Power { coef: 2.0, exp: 0.5, offset: -1.0 };
        for k in 1..10u64 {
            assert_eq!(abel_steps(&rho, 1.0, (k * k) as f64).unwrap(), k);
        }
    }
}
