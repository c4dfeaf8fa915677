//! Real functions used as contraction bounds, Morse gauges and bead lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbolic or sampled function on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Identity,
    Const { c: f64 },
    /// `coef * r^exp + offset`
    Power { coef: f64, exp: f64, offset: f64 },
    /// `coef * log2(max(r, 1)) + offset`
    Log2 { coef: f64, offset: f64 },
    /// `min(r, r - log2 r)`
    RMinusLog2,
    Ceil { inner: Box<FunctionSpec> },
    /// Piecewise-linear interpolation, constant beyond both ends.
    Sampled { points: Vec<(f64, f64)> },
}

impl FunctionSpec {
    pub fn identity() -> Self {
        FunctionSpec::Identity
    }

    pub fn constant(c: f64) -> Self {
        FunctionSpec::Const { c }
    }

    pub fn linear(c: f64) -> Self {
        FunctionSpec::Power { coef: c, exp: 1.0, offset: 0.0 }
    }

    pub fn power(exp: f64) -> Self {
        FunctionSpec::Power { coef: 1.0, exp, offset: 0.0 }
    }

    pub fn ceil_sqrt() -> Self {
        FunctionSpec::Ceil { inner: Box::new(FunctionSpec::power(0.5)) }
    }

    pub fn sampled(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidFunction("no sample points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) || points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidFunction("sample abscissae must be distinct and finite".into()));
        }
        Ok(FunctionSpec::Sampled { points })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            FunctionSpec::Identity => r,
            FunctionSpec::Const { c } => *c,
            FunctionSpec::Power { coef, exp, offset } => {
                let base = if *exp == 1.0 { r } else { r.max(0.0).powf(*exp) };
                coef * base + offset
            }
            FunctionSpec::Log2 { coef, offset } => coef * r.max(1.0).log2() + offset,
            FunctionSpec::RMinusLog2 => {
                if r <= 1.0 {
                    r
                } else {
                    r - r.log2()
                }
            }
            FunctionSpec::Ceil { inner } => {
                let v = inner.eval(r);
                // absorb representation error so that ceil(sqrt(9)) = 3
                let nearest = v.round();
                if (v - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
                    nearest
                } else {
                    v.ceil()
                }
            }
            FunctionSpec::Sampled { points } => interpolate(points, r),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            FunctionSpec::Const { c } => *c == 0.0,
            FunctionSpec::Power { coef, offset, .. } => *coef == 0.0 && *offset == 0.0,
            FunctionSpec::Sampled { points } => points.iter().all(|p| p.1 == 0.0),
            _ => false,
        }
    }

    /// Parses the compact CLI notation, e.g. `id`, `const:2`, `lin:0.5`,
    /// `pow:2`, `pow:0.5:2:-1`, `log2:1:0`, `ceil:sqrt`, `r-log2`,
    /// `samples:1=0,2=1,4=2`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::InvalidFunction(format!("cannot parse function `{text}`"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        if let Some(rest) = t.strip_prefix("ceil:") {
            return Ok(FunctionSpec::Ceil { inner: Box::new(Self::parse(rest)?) });
        }
        if let Some(rest) = t.strip_prefix("samples:") {
            let mut pts = Vec::new();
            for item in rest.split(',') {
                let (a, b) = item.split_once('=').ok_or_else(bad)?;
                pts.push((num(a)?, num(b)?));
            }
            return Self::sampled(pts);
        }
        let parts: Vec<&str> = t.split(':').collect();
        let arg = |k: usize, default: f64| -> Result<f64> { parts.get(k).map(|s| num(s)).unwrap_or(Ok(default)) };
        match parts[0] {
            "id" | "identity" if parts.len() == 1 => Ok(FunctionSpec::Identity),
            "r-log2" if parts.len() == 1 => Ok(FunctionSpec::RMinusLog2),
            "sqrt" if parts.len() == 1 => Ok(FunctionSpec::power(0.5)),
            "const" if parts.len() == 2 => Ok(FunctionSpec::constant(arg(1, 0.0)?)),
            "lin" if parts.len() == 2 => Ok(FunctionSpec::linear(arg(1, 1.0)?)),
            "pow" if (2..=4).contains(&parts.len()) => Ok(FunctionSpec::Power {
                exp: arg(1, 1.0)?,
                coef: arg(2, 1.0)?,
                offset: arg(3, 0.0)?,
            }),
            "log2" if (1..=3).contains(&parts.len()) => Ok(FunctionSpec::Log2 { coef: arg(1, 1.0)?, offset: arg(2, 0.0)? }),
            _ => Err(bad()),
        }
    }

    /// True when the function is non-decreasing at the given abscissae.
    pub fn is_nondecreasing_on(&self, grid: &[f64]) -> bool {
        grid.windows(2).all(|w| {
            let a = self.eval(w[0]);
            let b = self.eval(w[1]);
            b >= a - 1e-12 * a.abs().max(1.0)
        })
    }
}

fn interpolate(points: &[(f64, f64)], r: f64) -> f64 {
    let k = points.partition_point(|p| p.0 <= r);
    if k == 0 {
        return points[0].1;
    }
    if k == points.len() {
        return points[k - 1].1;
    }
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

pub const INVERSE_TOLERANCE: f64 = 1e-9;

/// Solves `f(x) = target` for a non-decreasing `f` with `f(lo) <= target`,
/// by bracketing upward and bisecting to `INVERSE_TOLERANCE`.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64) -> Result<f64> {
    if f(lo) > target + 1e-12 * target.abs().max(1.0) {
        return Err(Error::OutOfDomain(format!("target {target} below f({lo})")));
    }
    let mut a = lo;
    let mut step = lo.abs().max(1.0);
    let mut b = lo + step;
    let mut guard = 0;
    while f(b) < target {
        a = b;
        step *= 2.0;
        b = lo + step;
        guard += 1;
        if guard > 200 || !b.is_finite() {
            return Err(Error::InvalidFunction(format!("cannot bracket inverse at {target}")));
        }
    }
    for _ in 0..400 {
        if b - a <= INVERSE_TOLERANCE {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        assert_eq!(FunctionSpec::ceil_sqrt().eval(9.0), 3.0);
        assert_eq!(FunctionSpec::ceil_sqrt().eval(10.0), 4.0);
        assert_eq!(FunctionSpec::ceil_sqrt().eval(4.0), 2.0);
        let two_sqrt_minus_one = FunctionSpec::Power { coef: 2.0, exp: 0.5, offset: -1.0 };
        assert_eq!(two_sqrt_minus_one.eval(4.0), 3.0);
        assert_eq!(FunctionSpec::Log2 { coef: 1.0, offset: 0.0 }.eval(8.0), 3.0);
        assert_eq!(FunctionSpec::RMinusLog2.eval(4.0), 2.0);
        let s = FunctionSpec::sampled(vec![(0.0, 0.0), (2.0, 4.0)]).unwrap();
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(5.0), 4.0);
        assert_eq!(s.eval(-1.0), 0.0);
    }

    #[test]
    fn parsing_round_trip() {
        assert_eq!(FunctionSpec::parse("pow:2").unwrap(), FunctionSpec::power(2.0));
        assert_eq!(FunctionSpec::parse("ceil:sqrt").unwrap(), FunctionSpec::ceil_sqrt());
        assert_eq!(FunctionSpec::parse("lin:0.5").unwrap().eval(4.0), 2.0);
        assert_eq!(FunctionSpec::parse("pow:0.5:2:-1").unwrap().eval(9.0), 5.0);
        assert_eq!(FunctionSpec::parse("samples:0=0,4=2").unwrap().eval(2.0), 1.0);
        assert!(FunctionSpec::parse("wobble").is_err());
        assert!(FunctionSpec::parse("const").is_err());
        let json = serde_json::to_string(&FunctionSpec::ceil_sqrt()).unwrap();
        assert_eq!(serde_json::from_str::<FunctionSpec>(&json).unwrap(), FunctionSpec::ceil_sqrt());
    }

    #[test]
    fn inversion() {
        let x = invert_increasing(|x| x / 2.0, 8.0, 2.0).unwrap();
        assert!((x - 16.0).abs() < 1e-8);
        assert!(invert_increasing(|x| x, 1.0, 2.0).is_err());
    }
}
