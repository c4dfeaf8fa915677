//! Detour estimates of the Morse gauge, the shortcut construction turning a
//! chain of geodesics into a quasi-geodesic, and the explicit bound formulas
//! linking contraction and the Morse property.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify_growth, FitReport, FunctionSamples, GrowthClass, LINEAR_LO};
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::graph::{Length, MetricGraph, ParamPath, PointId, PointSet, QGParams};
use crate::profile::{Profile, ProfileKind, ProfileParams, ProfileSample};
use crate::sampling::rounded_geometric_grid;
use crate::search::{tol, with_workspace};
use crate::spaces::MarkedSpace;

/// μ(L, A), read as a function of L alone (the (L, 0) form is what gets evaluated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseFunctionSpec {
    pub mu: FunctionSpec,
}

impl MorseFunctionSpec {
    pub fn new(mu: FunctionSpec) -> Self {
        MorseFunctionSpec { mu }
    }

    /// Checks non-negativity and monotonicity in L on `grid`.
    pub fn validate(&self, grid: &[f64]) -> Result<()> {
        if grid.iter().any(|&l| self.mu.eval(l) < 0.0) {
            return Err(Error::InvalidFunction("Morse function takes a negative value".into()));
        }
        if !self.mu.is_nondecreasing_on(grid) {
            return Err(Error::InvalidFunction("Morse function must be non-decreasing in L".into()));
        }
        Ok(())
    }

    /// Right-continuous regularization: the limit from the right at L.
    pub fn eval(&self, l: f64) -> f64 {
        self.mu.eval(l + tol(l)).max(0.0)
    }

    /// Sampled gauge from a computed μ̂ profile.
    pub fn from_profile(p: &MorseProfile) -> Result<Self> {
        let pts: Vec<(f64, f64)> = p.curves.iter().map(|c| (c.l, c.mu_hat)).collect();
        Ok(MorseFunctionSpec { mu: FunctionSpec::sampled(pts)? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetourWitness {
    pub endpoints: (PointId, PointId),
    pub l: f64,
    /// Certified escape radius; 0 when no positive radius is achievable.
    pub b: Length,
    pub path: Vec<PointId>,
    pub length: Length,
    pub certified_qg: Option<(f64, Vec<PointId>)>,
}

/// Largest B such that some path from y1 to y2 of length at most
/// L·d(y1, y2) avoids every vertex v with d(v, Y) ≤ B that is farther than B
/// from both endpoints. Candidates for B are the realized values d(z, Y) > 0,
/// kept below d/2 − resolution, (d − max edge weight)/2 and the largest
/// d(z, Y) within the budget ellipse, and scanned downwards.
pub fn detour_bound(s: &MarkedSpace, y1: PointId, y2: PointId, l: f64) -> Result<DetourWitness> {
    if !s.y.contains(y1) || !s.y.contains(y2) {
        return Err(Error::InvalidQuery("detour endpoints must lie on Y".into()));
    }
    if !(l >= 1.0) || !l.is_finite() {
        return Err(Error::InvalidParams(format!("L = {l}")));
    }
    let g = &s.graph;
    let dy = s.dist_to_y();
    let d = g.distance(y1, y2);
    let budget = l * d;
    let fallback = |path: ParamPath| DetourWitness {
        endpoints: (y1, y2),
        l,
        b: 0.0,
        length: path.length(),
        path: path.points().to_vec(),
        certified_qg: None,
    };
    if y1 == y2 {
        return Ok(fallback(ParamPath::single(y1)));
    }
    let found = with_workspace(|w1| {
        with_workspace(|w2| {
            w1.run(g, &[(y1.0, 0.0)], budget, |_| true, |_, _| true);
            let mut escape: f64 = 0.0;
            w2.run(g, &[(y2.0, 0.0)], budget, |_| true, |z, d2| {
                let through = w1.dist(z) + d2;
                if through <= budget + tol(budget) {
                    escape = escape.max(dy[z as usize]);
                }
                true
            });
            // Below this cap no single edge joins the two endpoint balls, so
            // any admissible path must visit a vertex farther than B from Y.
            let cap = (d / 2.0 - g.resolution()).min(0.5 * (d - g.max_edge_weight()) - tol(d));
            let levels = s.distance_levels();
            let top = levels.partition_point(|&b| b < escape && b <= cap + tol(cap));
            for &b in levels[..top].iter().rev() {
                let bt = b + tol(b);
                let free = |v: u32| dy[v as usize] > bt || w1.dist(v) <= bt || w2.dist(v) <= bt;
                let hit = with_workspace(|w3| {
                    let mut reached = false;
                    w3.run(g, &[(y1.0, 0.0)], budget, free, |v, _| {
                        reached = v == y2.0;
                        !reached
                    });
                    reached.then(|| {
                        let mut p: Vec<PointId> = w3.walk_back(g, y2.0, free).into_iter().map(PointId).collect();
                        p.reverse();
                        (w3.dist(y2.0), p)
                    })
                });
                if let Some((len, path)) = hit {
                    return Some((b, len, path));
                }
            }
            None
        })
    });
    Ok(match found {
        Some((b, length, path)) => DetourWitness { endpoints: (y1, y2), l, b, path, length, certified_qg: None },
        None => fallback(g.geodesic(y1, y2)),
    })
}

/// Independent re-check of a detour witness: endpoints on Y, a genuine edge
/// path, budget respected and the avoidance rule respected.
pub fn verify_detour(s: &MarkedSpace, w: &DetourWitness) -> bool {
    let g = &s.graph;
    let (y1, y2) = w.endpoints;
    if !s.y.contains(y1) || !s.y.contains(y2) || w.path.first() != Some(&y1) || w.path.last() != Some(&y2) {
        return false;
    }
    let Ok(path) = ParamPath::from_points(g, w.path.clone()) else {
        return false;
    };
    let budget = w.l * g.distance(y1, y2);
    if path.length() > budget + tol(budget) || (path.length() - w.length).abs() > tol(w.length) {
        return false;
    }
    if w.b == 0.0 {
        return true;
    }
    let dy = s.dist_to_y();
    let from1 = g.distances_from(y1);
    let from2 = g.distances_from(y2);
    let bt = w.b + tol(w.b);
    path.points().iter().all(|v| dy[v.index()] > bt || from1[v.index()] <= bt || from2[v.index()] <= bt)
}

/// Attaches an (L, 0) quasi-geodesic certificate when the witness path has one.
pub fn certify_detour(s: &MarkedSpace, w: &mut DetourWitness) -> Result<bool> {
    let path = ParamPath::from_points(&s.graph, w.path.clone())?;
    let ok = s.graph.is_quasigeodesic(&path, QGParams::new(w.l, 0.0)?);
    if ok {
        w.certified_qg = Some((w.l, w.path.clone()));
    }
    Ok(ok)
}

/// Endpoint pairs tried by `morse_profile`: for each separation along γ,
/// `starts` evenly spaced start positions (0 means every vertex of γ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairPlan {
    /// Empty means a geometric grid (4 per octave) up to min(|γ|, 2·valid_radius).
    pub separations: Vec<f64>,
    pub starts: usize,
}

impl Default for PairPlan {
    fn default() -> Self {
        PairPlan { separations: Vec::new(), starts: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorseVerdict {
    MorseOnWindow,
    NotMorse,
    Inconclusive,
}

impl MorseVerdict {
    fn from_class(c: &GrowthClass) -> Self {
        match c {
            GrowthClass::Bounded | GrowthClass::Logarithmic => MorseVerdict::MorseOnWindow,
            GrowthClass::Power { alpha } if *alpha < LINEAR_LO => MorseVerdict::MorseOnWindow,
            GrowthClass::Power { .. } | GrowthClass::Linear | GrowthClass::Superlinear => MorseVerdict::NotMorse,
            GrowthClass::Inconclusive => MorseVerdict::Inconclusive,
        }
    }
}

/// Detour radii at one budget L as a function of endpoint separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseCurve {
    pub l: f64,
    /// (separation, max B at that separation, witness).
    pub points: Vec<(Length, Length, DetourWitness)>,
    pub mu_hat: Length,
    pub fit: FitReport,
    pub verdict: MorseVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseProfile {
    pub curves: Vec<MorseCurve>,
    pub plan: PairPlan,
    pub verdict: MorseVerdict,
}

impl MorseProfile {
    /// μ̂ as a profile indexed by L.
    pub fn to_profile(&self, valid_radius: Length) -> Profile {
        let samples = self
            .curves
            .iter()
            .map(|c| {
                let w = c.points.iter().find(|p| p.1 == c.mu_hat).map(|p| &p.2);
                ProfileSample {
                    r: c.l,
                    value: Some(c.mu_hat),
                    witness: w.map(|w| vec![w.endpoints.0, w.endpoints.1]).unwrap_or_default(),
                }
            })
            .collect();
        let lo = self.curves.first().map_or(1.0, |c| c.l);
        let hi = self.curves.last().map_or(1.0, |c| c.l);
        Profile {
            kind: ProfileKind::Morse,
            samples,
            witness_names: vec!["y1".into(), "y2".into()],
            params: ProfileParams::Morse { l: hi, separations: self.plan.separations.clone() },
            valid_radius,
            window: (lo, hi),
        }
    }
}

/// μ̂(L) = max detour radius over the sampled endpoint pairs on γ, for each L.
/// Each L is classified by the growth of its cumulative-max separation curve.
pub fn morse_profile(s: &MarkedSpace, l_grid: &[f64], plan: &PairPlan) -> Result<MorseProfile> {
    let gamma = s.gamma()?;
    let len = gamma.length();
    if l_grid.is_empty() || l_grid.iter().any(|&l| !(l >= 1.0) || !l.is_finite()) {
        return Err(Error::InvalidParams("L grid must be non-empty with L >= 1".into()));
    }
    let res = s.graph.resolution();
    let seps = if plan.separations.is_empty() {
        rounded_geometric_grid(2.0 * res, len.min(2.0 * s.valid_radius()), 4, res)
    } else {
        plan.separations.clone()
    };
    if seps.iter().any(|&d| !(d > 0.0) || d > len + tol(len)) {
        return Err(Error::WindowViolation(format!("separations must lie in (0, {len}]")));
    }
    let mut ls = l_grid.to_vec();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    let pts = gamma.points();
    let pairs_for = |sep: f64| -> Vec<(PointId, PointId)> {
        let span = len - sep;
        let mut out: Vec<(PointId, PointId)> = if plan.starts == 0 {
            gamma
                .cumulative_length()
                .iter()
                .filter(|&&t| t <= span + tol(span))
                .map(|&t| (pts[gamma.index_at(t)], pts[gamma.index_at(t + sep)]))
                .collect()
        } else {
            let m = plan.starts.max(1);
            (0..m)
                .map(|k| {
                    let t = if m == 1 { 0.0 } else { span * k as f64 / (m - 1) as f64 };
                    (pts[gamma.index_at(t)], pts[gamma.index_at(t + sep)])
                })
                .collect()
        };
        out.retain(|p| p.0 != p.1);
        out.dedup();
        out
    };
    let tasks: Vec<(usize, usize, PointId, PointId)> = ls
        .iter()
        .enumerate()
        .flat_map(|(li, _)| {
            seps.iter().enumerate().flat_map(move |(si, &sep)| pairs_for(sep).into_iter().map(move |(a, b)| (li, si, a, b)))
        })
        .collect();
    let results: Vec<Result<DetourWitness>> = tasks.par_iter().map(|&(li, _, a, b)| detour_bound(s, a, b, ls[li])).collect();
    let mut best: Vec<Vec<Option<DetourWitness>>> = vec![vec![None; seps.len()]; ls.len()];
    for (task, w) in tasks.iter().zip(results) {
        let w = w?;
        let slot = &mut best[task.0][task.1];
        if slot.as_ref().is_none_or(|cur| w.b > cur.b) {
            *slot = Some(w);
        }
    }
    let mut curves = Vec::with_capacity(ls.len());
    for (li, &l) in ls.iter().enumerate() {
        let points: Vec<(Length, Length, DetourWitness)> = seps
            .iter()
            .zip(&best[li])
            .filter_map(|(&sep, w)| w.as_ref().map(|w| (sep, w.b, w.clone())))
            .collect();
        let mut running: f64 = 0.0;
        let envelope: Vec<(f64, f64)> = points
            .iter()
            .map(|p| {
                running = running.max(p.1);
                (p.0, running)
            })
            .collect();
        let fit = classify_growth(&FunctionSamples::new(envelope)?);
        let verdict = MorseVerdict::from_class(&fit.class);
        curves.push(MorseCurve { l, mu_hat: running, points, verdict, fit });
    }
    let verdict = if curves.iter().any(|c| c.verdict == MorseVerdict::NotMorse) {
        MorseVerdict::NotMorse
    } else if curves.iter().all(|c| c.verdict == MorseVerdict::MorseOnWindow) {
        MorseVerdict::MorseOnWindow
    } else {
        MorseVerdict::Inconclusive
    };
    Ok(MorseProfile { curves, plan: PairPlan { separations: seps, starts: plan.starts }, verdict })
}

/// A concatenation [p_x, x][x, y][y, p_y] of geodesics, with the vertex
/// indices of x and y recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicChain {
    pub path: ParamPath,
    pub bx: usize,
    pub by: usize,
}

impl GeodesicChain {
    /// From 2 to 4 waypoints. Three waypoints give a degenerate middle piece
    /// (x = y); two give a single geodesic.
    pub fn new(g: &MetricGraph, waypoints: &[PointId]) -> Result<Self> {
        let (px, x, y, py) = match *waypoints {
            [a, b] => (a, a, b, b),
            [a, b, c] => (a, b, b, c),
            [a, b, c, d] => (a, b, c, d),
            _ => return Err(Error::InvalidQuery("a geodesic chain needs 2 to 4 waypoints".into())),
        };
        let first = g.geodesic(px, x);
        let second = g.geodesic(x, y);
        let third = g.geodesic(y, py);
        let bx = first.len() - 1;
        let by = bx + second.len() - 1;
        let path = first.concat(&second)?.concat(&third)?;
        Ok(GeodesicChain { path, bx, by })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutCertificate {
    pub endpoints_kept: bool,
    pub length_not_increased: bool,
    pub quasigeodesic: bool,
    /// Largest distance from a vertex of the output to the input path.
    pub max_degradation: Length,
    pub degradation_bound: Length,
}

impl ShortcutCertificate {
    pub fn holds(&self) -> bool {
        self.endpoints_kept
            && self.length_not_increased
            && self.quasigeodesic
            && self.max_degradation <= self.degradation_bound + tol(self.degradation_bound)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutResult {
    pub path: ParamPath,
    pub case: u8,
    /// Replaced subsegments as (start, end) vertex indices of the input.
    pub replaced: Vec<(usize, usize)>,
    pub certificate: ShortcutCertificate,
}

/// Earliest start, then latest end, among pairs (i, j) with i in `is`,
/// j in `js`, i < j and L·d − arc ≤ 0.
fn maximal_pair(
    is: std::ops::RangeInclusive<usize>,
    js: std::ops::RangeInclusive<usize>,
    dd: &dyn Fn(usize, usize) -> f64,
) -> Option<(usize, usize)> {
    for i in is {
        let best = js.clone().rev().find(|&j| j > i && dd(i, j) <= 0.0);
        if let Some(j) = best {
            return Some((i, j));
        }
    }
    None
}

/// Shortcuts a chain of at most three geodesics into an (L, 0)
/// quasi-geodesic by replacing at most two maximal subsegments on which
/// D(p, q) = L·d(p, q) − |[p, q]| is non-positive.
pub fn shortcut_quasigeodesify(g: &MetricGraph, chain: &GeodesicChain, l: f64) -> Result<ShortcutResult> {
    let path = &chain.path;
    let (start, end) = (path.start(), path.end());
    if start == end {
        return Err(Error::InvalidParams("shortcut endpoints must be distinct".into()));
    }
    let lmin = path.length() / g.distance(start, end);
    if !(l >= lmin - tol(lmin)) || !l.is_finite() {
        return Err(Error::InvalidParams(format!("L = {l} is below |gamma|/d(endpoints) = {lmin}")));
    }
    let pts = path.points();
    let n = pts.len();
    let (_, slot, table) = g.path_distance_table(pts);
    let dist = |i: usize, j: usize| table[slot[i]][slot[j]];
    let dd = |i: usize, j: usize| {
        let v = l * dist(i, j) - path.arc(i, j);
        if v.abs() <= tol(path.arc(i, j)) {
            0.0
        } else {
            v
        }
    };
    let (bx, by, last) = (chain.bx, chain.by, n - 1);
    let negative = |is: std::ops::RangeInclusive<usize>, js: std::ops::RangeInclusive<usize>| {
        is.clone().any(|i| js.clone().any(|j| j > i && dd(i, j) < 0.0))
    };
    let cross_negative = negative(0..=bx, bx..=last) || negative(bx..=by, by..=last);
    let mut replaced = Vec::new();
    let case = if !cross_negative {
        0
    } else if let Some(p) = maximal_pair(0..=bx, by..=last, &dd) {
        replaced.push(p);
        1
    } else if let Some(p) = maximal_pair(0..=bx, (bx + 1)..=by, &dd) {
        replaced.push(p);
        let qx = p.1;
        if qx < by && negative(qx..=(by - 1), (by + 1)..=last) {
            if let Some(p2) = maximal_pair(qx..=(by - 1), (by + 1)..=last, &dd) {
                replaced.push(p2);
            }
        }
        2
    } else if by > 0 {
        match maximal_pair(bx..=(by - 1), by..=last, &dd) {
            Some(p) => {
                replaced.push(p);
                3
            }
            None => 0,
        }
    } else {
        0
    };
    let mut out = path.slice(0, replaced.first().map_or(last, |p| p.0));
    let mut cursor = replaced.first().map_or(last, |p| p.0);
    for &(i, j) in &replaced {
        if i > cursor {
            out = out.concat(&path.slice(cursor, i))?;
        }
        out = out.concat(&g.geodesic(pts[i], pts[j]))?;
        cursor = j;
    }
    if cursor < last {
        out = out.concat(&path.slice(cursor, last))?;
    }
    let certificate = certify_shortcut(g, path, &out, l)?;
    Ok(ShortcutResult { path: out, case, replaced, certificate })
}

/// Checks endpoints, length, the (L, resolution) quasi-geodesic inequality
/// and the |γ|/(2L) distance bound to the input.
pub fn certify_shortcut(g: &MetricGraph, input: &ParamPath, output: &ParamPath, l: f64) -> Result<ShortcutCertificate> {
    let on_input = PointSet::new(input.points().iter().copied());
    let to_input = g.distances_to_set(&on_input)?;
    let max_degradation = output.points().iter().map(|v| to_input[v.index()]).fold(0.0, f64::max);
    Ok(ShortcutCertificate {
        endpoints_kept: output.start() == input.start() && output.end() == input.end(),
        length_not_increased: output.length() <= input.length() + tol(input.length()),
        quasigeodesic: g.is_quasigeodesic(output, QGParams::new(l, g.resolution())?),
        max_degradation,
        degradation_bound: input.length() / (2.0 * l),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseBoundInputs {
    pub rho1: FunctionSpec,
    pub rho2: FunctionSpec,
    pub epsilon: Length,
    pub l: f64,
    pub a: Length,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseBoundReport {
    pub e: Length,
    pub d_bound: Length,
    pub t: Length,
    pub b: Length,
    pub inputs: MorseBoundInputs,
    /// Hausdorff constant of the taming step; 0 because the (L, 0) form is evaluated directly.
    pub taming_c: Length,
    /// The grid on which the tail condition was certified.
    pub window: (Length, Length),
}

/// E is the least grid radius from which, on the rest of the grid,
/// ρ₁ > 3A and ρ₂/ρ₁ < 1/(3L²). Then d = E/L² + A + 4(E + ε),
/// T = L·d + L·A and B = E + L·T/2 + A.
pub fn morse_bound_from_contraction(
    rho1: &FunctionSpec,
    rho2: &FunctionSpec,
    eps: Length,
    l: f64,
    a: Length,
    grid: &[f64],
) -> Result<MorseBoundReport> {
    if !(l >= 1.0) || !(a >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParams(format!("need L >= 1, A >= 0, eps >= 0 (got {l}, {a}, {eps})")));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty sample grid".into()));
    }
    let good = |r: f64| {
        let p1 = rho1.eval(r);
        p1 > 3.0 * a && p1 > 0.0 && rho2.eval(r) / p1 < 1.0 / (3.0 * l * l)
    };
    let first_good = match grid.iter().rposition(|&r| !good(r)) {
        None => 0,
        Some(k) if k + 1 < grid.len() => k + 1,
        Some(_) => {
            return Err(Error::NotVerifiableOnWindow(format!(
                "tail condition fails at the end of the grid [{}, {}]",
                grid[0],
                grid[grid.len() - 1]
            )))
        }
    };
    let e = grid[first_good];
    let d_bound = e / (l * l) + a + 4.0 * (e + eps);
    let t = l * d_bound + l * a;
    let b = e + l * t / 2.0 + a;
    Ok(MorseBoundReport {
        e,
        d_bound,
        t,
        b,
        inputs: MorseBoundInputs { rho1: rho1.clone(), rho2: rho2.clone(), epsilon: eps, l, a },
        taming_c: 0.0,
        window: (grid[0], grid[grid.len() - 1]),
    })
}

/// ρ′(r) = sup{s ≤ 4r + 2ε : s ≤ 18μ(3(4r + 2ε)/s) + 12ε}, with ρ′(0) = 2ε
/// and ρ′ ≡ 0 when ε = 0 and μ ≡ 0.
pub fn contraction_bound_from_morse(mu: &MorseFunctionSpec, eps: Length, r: Length) -> Result<Length> {
    if !(r >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParams(format!("need r >= 0 and eps >= 0 (got {r}, {eps})")));
    }
    if eps == 0.0 && mu.mu.is_identically_zero() {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(2.0 * eps);
    }
    let m = 4.0 * r + 2.0 * eps;
    let rhs = |s: f64| 18.0 * mu.eval(3.0 * m / s) + 12.0 * eps;
    let feasible = |s: f64| s <= rhs(s);
    if feasible(m) {
        return Ok(m);
    }
    // s − rhs(s) is increasing, so the feasible set is an initial interval.
    let (mut lo, mut hi) = (0.0, m);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        let v = rhs(lo);
        if v > lo && v <= m && feasible(v) {
            lo = v;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{grid_id, grid_l1, necklace, tree};

    #[test]
    fn tree_has_no_detours() {
        let s = tree(2, 8).unwrap();
        let ray = s.gamma().unwrap().points().to_vec();
        for l in [1.0, 2.0, 5.0] {
            let w = detour_bound(&s, ray[0], ray[8], l).unwrap();
            assert_eq!(w.b, 0.0);
            assert!(verify_detour(&s, &w));
        }
    }

    #[test]
    fn grid_detours_grow() {
        let s = grid_l1(100, 50).unwrap();
        let mut last = 0.0;
        for n in [10usize, 20, 40] {
            let w = detour_bound(&s, grid_id(100, 50 - n, 0), grid_id(100, 50 + n, 0), 2.0).unwrap();
            assert_eq!(w.b, (n - 1) as f64);
            assert!(verify_detour(&s, &w));
            assert!(w.b > last);
            last = w.b;
        }
        let off = detour_bound(&s, grid_id(100, 3, 3), grid_id(100, 5, 0), 2.0);
        assert!(matches!(off, Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn grid_shortcut_example() {
        let s = grid_l1(12, 8).unwrap();
        let g = &s.graph;
        let way = [grid_id(12, 0, 0), grid_id(12, 0, 5), grid_id(12, 1, 5), grid_id(12, 1, 0)];
        let chain = GeodesicChain::new(g, &way).unwrap();
        let out = shortcut_quasigeodesify(g, &chain, 12.0).unwrap();
        assert!(out.certificate.holds());
        assert!(out.path.length() <= 11.0);
        assert!(shortcut_quasigeodesify(g, &chain, 5.0).is_err());
        let straight = GeodesicChain::new(g, &way[..2]).unwrap();
        assert_eq!(shortcut_quasigeodesify(g, &straight, 1.0).unwrap().case, 0);
        let bent = GeodesicChain::new(g, &[way[0], way[1], way[3]]).unwrap();
        let r = shortcut_quasigeodesify(g, &bent, 11.0).unwrap();
        assert!(r.certificate.holds());
    }

    #[test]
    fn bound_formulas() {
        let rep =
            morse_bound_from_contraction(&FunctionSpec::Identity, &FunctionSpec::constant(0.0), 0.0, 1.0, 0.0, &[1.0, 2.0, 4.0])
                .unwrap();
        assert_eq!((rep.e, rep.d_bound, rep.t, rep.b), (1.0, 5.0, 5.0, 3.5));
        let lin = morse_bound_from_contraction(&FunctionSpec::Identity, &FunctionSpec::Identity, 0.0, 1.0, 0.0, &[1.0, 2.0]);
        assert!(matches!(lin, Err(Error::NotVerifiableOnWindow(_))));
        let zero = MorseFunctionSpec::new(FunctionSpec::constant(0.0));
        for r in [0.0, 1.0, 10.0, 100.0] {
            assert_eq!(contraction_bound_from_morse(&zero, 1.0, r).unwrap(), (4.0 * r + 2.0).min(12.0));
            assert_eq!(contraction_bound_from_morse(&zero, 0.0, r).unwrap(), 0.0);
        }
        let id = MorseFunctionSpec::new(FunctionSpec::Identity);
        for r in [1.0, 10.0, 100.0, 1000.0] {
            let v = contraction_bound_from_morse(&id, 0.0, r).unwrap();
            let exact = (4.0 * r).min((216.0 * r).sqrt());
            assert!((v - exact).abs() <= 1e-9 * exact, "r {r}: {v} vs {exact}");
        }
    }

    #[test]
    fn necklace_is_morse_grid_is_not() {
        let s = necklace(&FunctionSpec::ceil_sqrt(), 4, 40).unwrap();
        let p = morse_profile(&s, &[2.0, 4.0], &PairPlan::default()).unwrap();
        assert_eq!(p.verdict, MorseVerdict::MorseOnWindow);
        let gr = grid_l1(120, 60).unwrap();
        let q = morse_profile(&gr, &[2.0], &PairPlan::default()).unwrap();
        assert_eq!(q.verdict, MorseVerdict::NotMorse);
    }
}
