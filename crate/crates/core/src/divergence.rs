//! Λ/Δ divergence of a path with respect to proportional forbidden balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    classify_growth, preceq_fit, ratio_tends_to_zero, ConstantBox, FitReport, FunctionSamples, PreorderFit,
    SublinearVerdict,
};
use crate::error::{Error, Result};
use crate::graph::{Length, ParamPath, PointId};
use crate::profile::{Profile, ProfileKind, ProfileParams, ProfileSample};
use crate::search::{tol, with_workspace};
use crate::spaces::MarkedSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceParams {
    pub l: f64,
    pub a: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl DivergenceParams {
    pub fn new(l: f64, a: f64, lambda: f64, kappa: f64) -> Result<Self> {
        let ok = l >= 1.0 && a >= 0.0 && lambda > 0.0 && lambda <= 1.0 && kappa >= l + a && kappa.is_finite();
        if !ok {
            return Err(Error::InvalidParams(format!(
                "need L >= 1, A >= 0, 0 < lambda <= 1, kappa >= L + A; got ({l}, {a}, {lambda}, {kappa})"
            )));
        }
        Ok(DivergenceParams { l, a, lambda, kappa })
    }

    /// The parameters used for geodesics: (1, 0, 1/2, 2).
    pub fn geodesic_default() -> Self {
        DivergenceParams { l: 1.0, a: 0.0, lambda: 0.5, kappa: 2.0 }
    }

    /// λ(r/L − A) − κ; a non-positive value means nothing is forbidden.
    pub fn forbidden_radius(&self, r: Length) -> Length {
        self.lambda * (r / self.l - self.a) - self.kappa
    }
}

/// Which centres `s` along γ are tried when taking the infimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "snake_case", deny_unknown_fields)]
pub enum SGrid {
    EveryVertex,
    /// Every `step`-th vertex of γ, plus the positions of landmarks lying on γ.
    Stride { step: usize },
    Explicit { positions: Vec<f64> },
}

impl Default for SGrid {
    fn default() -> Self {
        SGrid::EveryVertex
    }
}

impl SGrid {
    pub fn describe(&self) -> String {
        match self {
            SGrid::EveryVertex => "every vertex of gamma".into(),
            SGrid::Stride { step } => format!("every {step}th vertex of gamma plus landmarks on gamma"),
            SGrid::Explicit { positions } => format!("{} explicit positions", positions.len()),
        }
    }

    /// Positions in processing order: landmarks on γ first, then ascending.
    fn positions(&self, space: &MarkedSpace, gamma: &ParamPath) -> Result<Vec<f64>> {
        let cum = gamma.cumulative_length();
        let mut rest: Vec<f64> = match self {
            SGrid::EveryVertex => cum.to_vec(),
            SGrid::Stride { step } => {
                if *step == 0 {
                    return Err(Error::InvalidParams("stride must be positive".into()));
                }
                cum.iter().step_by(*step).copied().collect()
            }
            SGrid::Explicit { positions } => {
                if positions.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidParams("non-finite s position".into()));
                }
                positions.clone()
            }
        };
        let mut first: Vec<f64> = Vec::new();
        if !matches!(self, SGrid::Explicit { .. }) {
            for &p in space.landmarks.values() {
                if let Some(k) = gamma.points().iter().position(|&q| q == p) {
                    first.push(cum[k]);
                }
            }
        }
        first.sort_by(f64::total_cmp);
        first.dedup();
        rest.sort_by(f64::total_cmp);
        rest.dedup();
        rest.retain(|p| first.binary_search_by(|q| q.total_cmp(p)).is_err());
        first.extend(rest);
        Ok(first)
    }
}

/// The forbidden ball and endpoints of one (r, s) cell.
struct Cell {
    start: PointId,
    end: PointId,
    centre: PointId,
    radius: Length,
}

fn cell(gamma: &ParamPath, r: Length, t: Length, dp: &DivergenceParams) -> Result<Cell> {
    let len = gamma.length();
    if t - r < -tol(len) || t + r > len + tol(len) {
        return Err(Error::WindowViolation(format!("[{}, {}] is outside gamma's range [0, {len}]", t - r, t + r)));
    }
    let pts = gamma.points();
    Ok(Cell {
        start: pts[gamma.index_at(t - r)],
        end: pts[gamma.index_at(t + r)],
        centre: pts[gamma.index_at(t)],
        radius: dp.forbidden_radius(r),
    })
}

/// Shortest start→end length avoiding the closed ball, if it does not exceed
/// `cutoff`. A path of exactly `cutoff` counts only when `allow_equal`.
fn solve(space: &MarkedSpace, c: &Cell, cutoff: f64, allow_equal: bool, want_path: bool) -> Option<(Length, Vec<PointId>)> {
    let g = &space.graph;
    with_workspace(|ball| {
        let radius = c.radius;
        let blocked = radius > 0.0;
        if blocked {
            ball.run(g, &[(c.centre.0, 0.0)], radius, |_| true, |_, _| true);
        }
        let cap = radius + tol(radius);
        let free = |v: u32| !blocked || ball.dist(v) > cap;
        if !free(c.start.0) || !free(c.end.0) {
            return None;
        }
        with_workspace(|ws| {
            let mut found = None;
            ws.run(g, &[(c.start.0, 0.0)], cutoff, free, |v, d| {
                if d > cutoff || (d == cutoff && !allow_equal) {
                    return false;
                }
                if v == c.end.0 {
                    found = Some(d);
                    return false;
                }
                true
            });
            found.map(|d| {
                let path = if want_path {
                    let mut p: Vec<PointId> = ws.walk_back(g, c.end.0, free).into_iter().map(PointId).collect();
                    p.reverse();
                    p
                } else {
                    Vec::new()
                };
                (d, path)
            })
        })
    })
}

/// Λ(r, t): shortest path from γ(t−r) to γ(t+r) avoiding the closed ball of
/// radius λ(r/L − A) − κ about γ(t). `None` is ∞.
pub fn lambda_divergence(space: &MarkedSpace, r: Length, t: Length, dp: &DivergenceParams) -> Result<Option<Length>> {
    let gamma = space.gamma()?;
    let c = cell(gamma, r, t, dp)?;
    Ok(solve(space, &c, f64::INFINITY, true, false).map(|x| x.0))
}

/// Λ together with its witness path.
pub fn lambda_divergence_path(
    space: &MarkedSpace,
    r: Length,
    t: Length,
    dp: &DivergenceParams,
) -> Result<Option<(Length, ParamPath)>> {
    let gamma = space.gamma()?;
    let c = cell(gamma, r, t, dp)?;
    match solve(space, &c, f64::INFINITY, true, true) {
        Some((d, p)) => Ok(Some((d, ParamPath::from_points(&space.graph, p)?))),
        None => Ok(None),
    }
}

/// The closed forbidden ball of a cell, for independent re-verification.
pub fn forbidden_ball(space: &MarkedSpace, r: Length, t: Length, dp: &DivergenceParams) -> Result<Vec<PointId>> {
    let gamma = space.gamma()?;
    let c = cell(gamma, r, t, dp)?;
    if c.radius <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    with_workspace(|ws| {
        ws.run(&space.graph, &[(c.centre.0, 0.0)], c.radius, |_| true, |v, _| {
            out.push(PointId(v));
            true
        })
    });
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSample {
    pub r: Length,
    /// `None` is ∞.
    pub value: Option<Length>,
    /// Witness centre parameter; absent when every centre gives ∞.
    pub s: Option<Length>,
    pub endpoints: Option<(PointId, PointId)>,
    pub path: Vec<PointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub samples: Vec<DivergenceSample>,
    pub params: DivergenceParams,
    pub s_grid: String,
    pub gamma_length: Length,
    pub valid_radius: Length,
}

impl DivergenceProfile {
    pub fn finite_samples(&self) -> Result<FunctionSamples> {
        FunctionSamples::new(self.samples.iter().filter_map(|s| s.value.map(|v| (s.r, v))).collect())
    }

    pub fn to_profile(&self) -> Profile {
        let samples = self
            .samples
            .iter()
            .map(|s| ProfileSample {
                r: s.r,
                value: s.value,
                witness: s.endpoints.map(|(a, b)| vec![a, b]).unwrap_or_default(),
            })
            .collect();
        let lo = self.samples.first().map(|s| s.r).unwrap_or(0.0);
        let hi = self.samples.last().map(|s| s.r).unwrap_or(0.0);
        Profile {
            kind: ProfileKind::Divergence,
            samples,
            witness_names: vec!["start".into(), "end".into()],
            params: ProfileParams::Divergence {
                l: self.params.l,
                a: self.params.a,
                lambda: self.params.lambda,
                kappa: self.params.kappa,
                s_grid: self.s_grid.clone(),
            },
            valid_radius: self.valid_radius,
            window: (lo, hi),
        }
    }
}

/// Δ̂(r) = min over the s-grid of Λ(r, s), with the lexicographically
/// smallest (value, s) as witness.
pub fn divergence_profile(space: &MarkedSpace, dp: &DivergenceParams, r_grid: &[Length], s_grid: &SGrid) -> Result<DivergenceProfile> {
    let gamma = space.gamma()?;
    let len = gamma.length();
    let vr = space.valid_radius();
    if let Some(&r) = r_grid.iter().find(|&&r| !(r > 0.0) || r > vr + tol(vr)) {
        return Err(Error::WindowViolation(format!("radius {r} outside (0, {vr}]")));
    }
    let mut rs = r_grid.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let positions = s_grid.positions(space, gamma)?;
    let samples: Vec<Result<DivergenceSample>> = rs
        .par_iter()
        .map(|&r| {
            let admissible: Vec<f64> =
                positions.iter().copied().filter(|&t| t - r >= -tol(len) && t + r <= len + tol(len)).collect();
            if admissible.is_empty() {
                return Err(Error::WindowViolation(format!("no admissible centre for radius {r}")));
            }
            let mut best: Option<(f64, f64)> = None;
            for &t in &admissible {
                let c = cell(gamma, r, t, dp)?;
                let (cutoff, allow_equal) = match best {
                    Some((v, s)) => (v, t < s),
                    None => (f64::INFINITY, true),
                };
                if let Some((d, _)) = solve(space, &c, cutoff, allow_equal, false) {
                    best = Some((d, t));
                }
            }
            Ok(match best {
                Some((v, t)) => {
                    let c = cell(gamma, r, t, dp)?;
                    let (_, path) = solve(space, &c, v, true, true).expect("witness cell re-solves");
                    DivergenceSample { r, value: Some(v), s: Some(t), endpoints: Some((c.start, c.end)), path }
                }
                None => DivergenceSample { r, value: None, s: None, endpoints: None, path: Vec::new() },
            })
        })
        .collect();
    Ok(DivergenceProfile {
        samples: samples.into_iter().collect::<Result<_>>()?,
        params: *dp,
        s_grid: s_grid.describe(),
        gamma_length: len,
        valid_radius: vr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equivalence {
    EquivalentOnWindow,
    NotEquivalentOnWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub first: DivergenceProfile,
    pub second: DivergenceProfile,
    pub first_fit: FitReport,
    pub second_fit: FitReport,
    pub first_below_second: Option<PreorderFit>,
    pub second_below_first: Option<PreorderFit>,
    pub constant_box: ConstantBox,
    pub verdict: Equivalence,
}

/// Mutual ⪯ fits between the Δ̂ profiles of two parameter sets, on the radii
/// where both are finite.
pub fn parameter_robustness_check(
    space: &MarkedSpace,
    dp1: &DivergenceParams,
    dp2: &DivergenceParams,
    r_grid: &[Length],
    s_grid: &SGrid,
) -> Result<RobustnessReport> {
    let first = divergence_profile(space, dp1, r_grid, s_grid)?;
    let second = divergence_profile(space, dp2, r_grid, s_grid)?;
    let shared: Vec<(f64, f64, f64)> = first
        .samples
        .iter()
        .zip(&second.samples)
        .filter_map(|(a, b)| Some((a.r, a.value?, b.value?)))
        .collect();
    let cbox = ConstantBox::default();
    let (f1, f2, fwd, bwd) = if shared.is_empty() {
        let inconclusive = classify_growth(&FunctionSamples::new(vec![(1.0, 0.0)])?);
        (inconclusive.clone(), inconclusive, None, None)
    } else {
        let a = FunctionSamples::new(shared.iter().map(|x| (x.0, x.1)).collect())?;
        let b = FunctionSamples::new(shared.iter().map(|x| (x.0, x.2)).collect())?;
        (classify_growth(&a), classify_growth(&b), preceq_fit(&a, &b, &cbox), preceq_fit(&b, &a, &cbox))
    };
    let verdict = if fwd.is_some() && bwd.is_some() {
        Equivalence::EquivalentOnWindow
    } else {
        Equivalence::NotEquivalentOnWindow
    };
    Ok(RobustnessReport {
        first,
        second,
        first_fit: f1,
        second_fit: f2,
        first_below_second: fwd,
        second_below_first: bwd,
        constant_box: cbox,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SuperlinearVerdict {
    SuperlinearOnWindow,
    LinearWitness { constants: (f64, f64, f64, f64), radii: Vec<Length> },
    Inconclusive,
}

/// Finite-window test for completely superlinear divergence. If r/Δ̂(r)
/// tends to 0 under the tail rule (∞ counts as 0) the verdict is
/// superlinear. Otherwise the box is searched for affine constants capturing
/// at least half of the tail samples.
pub fn completely_superlinear_test(profile: &DivergenceProfile, cbox: &ConstantBox) -> SuperlinearVerdict {
    let pts: Vec<(f64, Option<f64>)> = profile.samples.iter().filter(|s| s.r > 0.0).map(|s| (s.r, s.value)).collect();
    if pts.iter().all(|p| p.1.is_none()) {
        return SuperlinearVerdict::SuperlinearOnWindow;
    }
    let ratios: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(r, v)| (r, v.map_or(0.0, |v| if v > 0.0 { r / v } else { f64::INFINITY })))
        .collect();
    if ratio_tends_to_zero(&ratios) == SublinearVerdict::SublinearOnWindow {
        return SuperlinearVerdict::SuperlinearOnWindow;
    }
    let tail = &pts[pts.len() / 2..];
    let need = tail.len().div_ceil(2);
    let mut sorted = [cbox.c1.clone(), cbox.c2.clone(), cbox.c3.clone(), cbox.c4.clone()];
    for v in sorted.iter_mut() {
        v.sort_by(f64::total_cmp);
    }
    for &c1 in &sorted[0] {
        for &c2 in &sorted[1] {
            for &c3 in &sorted[2] {
                for &c4 in &sorted[3] {
                    let radii: Vec<f64> = tail
                        .iter()
                        .filter_map(|&(r, v)| {
                            let bound = c1 * (c2 * r + c3) + c4;
                            v.filter(|&v| v <= bound + tol(bound)).map(|_| r)
                        })
                        .collect();
                    if radii.len() >= need && !radii.is_empty() {
                        return SuperlinearVerdict::LinearWitness { constants: (c1, c2, c3, c4), radii };
                    }
                }
            }
        }
    }
    SuperlinearVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionSpec;
    use crate::spaces::{divergence_necklace, grid_l1, tree};

    fn unit() -> DivergenceParams {
        DivergenceParams::new(1.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn params_checked() {
        assert!(DivergenceParams::new(1.0, 1.0, 0.5, 1.5).is_err());
        assert!(DivergenceParams::new(0.5, 0.0, 0.5, 2.0).is_err());
        assert!(DivergenceParams::new(1.0, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn necklace_bead_value() {
        let s = divergence_necklace(&FunctionSpec::power(2.0), 1, 8).unwrap();
        let gamma = s.gamma().unwrap();
        let y4 = s.landmark("y4").unwrap();
        let k = gamma.points().iter().position(|&p| p == y4).unwrap();
        let t = gamma.cumulative_length()[k];
        assert_eq!(lambda_divergence(&s, 4.0, t, &unit()).unwrap(), Some(16.0));
        let (d, path) = lambda_divergence_path(&s, 4.0, t, &unit()).unwrap().unwrap();
        assert_eq!(path.length(), d);
        let ball = forbidden_ball(&s, 4.0, t, &unit()).unwrap();
        assert!(path.points().iter().all(|p| ball.binary_search(p).is_err()));
    }

    #[test]
    fn empty_ball_is_distance() {
        let s = grid_l1(20, 10).unwrap();
        let dp = DivergenceParams::geodesic_default();
        let v = lambda_divergence(&s, 3.0, 8.0, &dp).unwrap();
        assert_eq!(v, Some(6.0));
        assert!(lambda_divergence(&s, 3.0, 1.0, &dp).is_err());
    }

    #[test]
    fn tree_is_infinite() {
        let s = tree(2, 8).unwrap();
        let prof = divergence_profile(&s, &unit(), &[3.0, 4.0], &SGrid::EveryVertex).unwrap();
        assert!(prof.samples.iter().all(|x| x.value.is_none()));
        assert_eq!(completely_superlinear_test(&prof, &ConstantBox::default()), SuperlinearVerdict::SuperlinearOnWindow);
    }

    #[test]
    fn grid_is_linear() {
        let s = grid_l1(80, 40).unwrap();
        let dp = DivergenceParams::geodesic_default();
        let rs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let prof = divergence_profile(&s, &dp, &rs, &SGrid::EveryVertex).unwrap();
        for x in &prof.samples {
            let v = x.value.unwrap();
            assert!(v >= 2.0 * x.r && v <= 3.0 * x.r + 4.0, "r {} value {v}", x.r);
        }
        assert!(matches!(
            completely_superlinear_test(&prof, &ConstantBox::default()),
            SuperlinearVerdict::LinearWitness { .. }
        ));
    }
}
