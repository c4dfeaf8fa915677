//! ε-closest-point projections and projection-diameter analyzers.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify_growth, ratio_tends_to_zero, FitReport, SublinearVerdict};
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::graph::{Length, MetricGraph, PointId, PointSet};
use crate::profile::{Profile, ProfileKind, ProfileParams, ProfileSample};
use crate::sampling::{geometric_grid, select_base_points, select_points, SamplingPlan};
use crate::search::{tol, with_workspace, Workspace, INF};
use crate::spaces::MarkedSpace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub epsilon: Length,
}

impl ProjectionParams {
    pub fn new(epsilon: Length) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon = {epsilon}")));
        }
        Ok(ProjectionParams { epsilon })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionHypothesis {
    pub rho1: FunctionSpec,
    pub rho2: FunctionSpec,
}

/// π_Y^ε(x) = {y ∈ Y : d(x,y) ≤ d(x,Y) + ε}, computed directly.
pub fn project(s: &MarkedSpace, x: PointId, p: ProjectionParams) -> Result<PointSet> {
    let d = s.graph.distance_to_set(x, &s.y)?;
    let limit = d + p.epsilon;
    let mut out = Vec::new();
    with_workspace(|ws| {
        ws.run(&s.graph, &[(x.0, 0.0)], limit, |_| true, |v, _| {
            if s.y.contains(PointId(v)) {
                out.push(PointId(v));
            }
            true
        })
    });
    Ok(PointSet::new(out))
}

fn direct_set_diameter(g: &MetricGraph, set: &PointSet) -> Length {
    let m = set.members();
    let mut best: f64 = 0.0;
    for (k, &a) in m.iter().enumerate() {
        let ds = g.distances_to_targets(a, &m[k + 1..]);
        best = ds.into_iter().fold(best, f64::max);
    }
    best
}

/// diam(π(x) ∪ π(y)) in the ambient metric.
pub fn pair_projection_diameter(s: &MarkedSpace, x: PointId, y: PointId, p: ProjectionParams) -> Result<Length> {
    let u = project(s, x, p)?.union(&project(s, y, p)?);
    Ok(direct_set_diameter(&s.graph, &u))
}

/// diam of ∪_{x ∈ Y′} π(x).
pub fn subspace_projection_diameter(s: &MarkedSpace, y_prime: &PointSet, p: ProjectionParams) -> Result<Length> {
    if y_prime.is_empty() {
        return Err(Error::InvalidSubspace("Y' is empty".into()));
    }
    if !s.y.is_disjoint(y_prime) {
        return Err(Error::InvalidQuery("Y' meets Y".into()));
    }
    let proj = Projector::new(s, p);
    let mut union = Vec::new();
    for x in y_prime.iter() {
        union.extend_from_slice(proj.projection(x));
    }
    union.sort_unstable();
    union.dedup();
    Ok(proj.set_diameter(&union).0)
}

#[derive(Clone, Copy)]
struct Label {
    d: f64,
    v: u32,
    y: u32,
}
impl PartialEq for Label {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Label {
    fn cmp(&self, o: &Self) -> Ordering {
        o.d.total_cmp(&self.d).then_with(|| o.v.cmp(&self.v)).then_with(|| o.y.cmp(&self.y))
    }
}

/// π^ε for every vertex, in CSR form.
struct ProjectionTable {
    offsets: Vec<u32>,
    members: Vec<PointId>,
}

impl ProjectionTable {
    fn build(s: &MarkedSpace, eps: f64) -> Self {
        let g = &s.graph;
        let n = g.vertex_count();
        let dy = s.dist_to_y();
        let sets: Vec<Vec<u32>> = if eps == 0.0 {
            let mut order = Vec::with_capacity(n);
            let sources: Vec<(u32, f64)> = s.y.iter().map(|p| (p.0, 0.0)).collect();
            with_workspace(|ws| {
                ws.run(g, &sources, INF, |_| true, |v, _| {
                    order.push(v);
                    true
                })
            });
            let mut sets: Vec<Vec<u32>> = vec![Vec::new(); n];
            for v in order {
                if s.y.contains(PointId(v)) {
                    sets[v as usize] = vec![v];
                    continue;
                }
                let dv = dy[v as usize];
                let mut acc = Vec::new();
                for (u, w) in g.neighbors(v) {
                    let du = dy[u as usize];
                    if du < dv && (du + w - dv).abs() <= tol(dv) {
                        acc.extend_from_slice(&sets[u as usize]);
                    }
                }
                acc.sort_unstable();
                acc.dedup();
                sets[v as usize] = acc;
            }
            sets
        } else {
            let mut sets: Vec<Vec<u32>> = vec![Vec::new(); n];
            let bound = |v: u32| {
                let b = dy[v as usize] + eps;
                b + tol(b)
            };
            let mut heap: BinaryHeap<Label> = s.y.iter().map(|p| Label { d: 0.0, v: p.0, y: p.0 }).collect();
            while let Some(Label { d, v, y }) = heap.pop() {
                if sets[v as usize].contains(&y) {
                    continue;
                }
                sets[v as usize].push(y);
                for (u, w) in g.neighbors(v) {
                    let nd = d + w;
                    if nd <= bound(u) && !sets[u as usize].contains(&y) {
                        heap.push(Label { d: nd, v: u, y });
                    }
                }
            }
            for set in sets.iter_mut() {
                set.sort_unstable();
            }
            sets
        };
        let mut offsets = Vec::with_capacity(n + 1);
        let mut members = Vec::new();
        offsets.push(0);
        for set in sets {
            members.extend(set.into_iter().map(PointId));
            offsets.push(members.len() as u32);
        }
        ProjectionTable { offsets, members }
    }

    fn of(&self, v: PointId) -> &[PointId] {
        &self.members[self.offsets[v.index()] as usize..self.offsets[v.index() + 1] as usize]
    }
}

/// Ambient distances between points of Y, one lazily computed row per point.
struct YMetric<'a> {
    g: &'a MetricGraph,
    y: &'a PointSet,
    rank: Vec<u32>,
    rows: Vec<OnceLock<Box<[f64]>>>,
}

impl<'a> YMetric<'a> {
    fn new(g: &'a MetricGraph, y: &'a PointSet) -> Self {
        let mut rank = vec![u32::MAX; g.vertex_count()];
        for (k, p) in y.iter().enumerate() {
            rank[p.index()] = k as u32;
        }
        let rows = (0..y.len()).map(|_| OnceLock::new()).collect();
        YMetric { g, y, rank, rows }
    }

    fn row(&self, a: PointId) -> &[f64] {
        let k = self.rank[a.index()] as usize;
        self.rows[k].get_or_init(|| {
            let mut row = vec![INF; self.y.len()];
            let mut remaining = self.y.len();
            with_workspace(|ws| {
                ws.run(self.g, &[(a.0, 0.0)], INF, |_| true, |v, d| {
                    let r = self.rank[v as usize];
                    if r != u32::MAX {
                        row[r as usize] = d;
                        remaining -= 1;
                    }
                    remaining > 0
                })
            });
            row.into_boxed_slice()
        })
    }

    fn dist(&self, a: PointId, b: PointId) -> f64 {
        if a == b {
            0.0
        } else {
            self.row(a)[self.rank[b.index()] as usize]
        }
    }
}

/// Bulk projection engine: π^ε for all vertices plus Y-to-Y distances.
pub struct Projector<'a> {
    pub space: &'a MarkedSpace,
    pub params: ProjectionParams,
    table: ProjectionTable,
    ym: YMetric<'a>,
}

/// Result of the per-base-point contraction evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseValue {
    pub x: PointId,
    pub value: Length,
    pub y: PointId,
    pub pair: (PointId, PointId),
}

impl<'a> Projector<'a> {
    pub fn new(space: &'a MarkedSpace, params: ProjectionParams) -> Self {
        let table = ProjectionTable::build(space, params.epsilon);
        let ym = YMetric::new(&space.graph, &space.y);
        Projector { space, params, table, ym }
    }

    pub fn projection(&self, v: PointId) -> &[PointId] {
        self.table.of(v)
    }

    pub fn y_distance(&self, a: PointId, b: PointId) -> Length {
        self.ym.dist(a, b)
    }

    /// Diameter of a set of Y points and a realizing pair (smallest ids on ties).
    pub fn set_diameter(&self, set: &[PointId]) -> (Length, (PointId, PointId)) {
        let mut best = (0.0, (set[0], set[0]));
        for (k, &a) in set.iter().enumerate() {
            for &b in &set[k + 1..] {
                let d = self.ym.dist(a, b);
                if d > best.0 {
                    best = (d, (a, b));
                }
            }
        }
        best
    }

    /// max over y with d(x,y) ≤ radius of diam(π(x) ∪ π(y)).
    pub fn base_value(&self, x: PointId, radius: Length, ws: &mut Workspace) -> BaseValue {
        let px = self.projection(x);
        let (d0, pair0) = self.set_diameter(px);
        let mut best = BaseValue { x, value: d0, y: x, pair: pair0 };
        let mut ball = Vec::new();
        ws.run(&self.space.graph, &[(x.0, 0.0)], radius, |_| true, |v, _| {
            ball.push(PointId(v));
            true
        });
        let mut seen: HashSet<PointId> = HashSet::new();
        for &y in &ball {
            let q = self.projection(y);
            if q.len() > 1 {
                let (dq, pair) = self.set_diameter(q);
                if dq > best.value {
                    best = BaseValue { x, value: dq, y, pair };
                }
            }
            for &b in q {
                if !seen.insert(b) {
                    continue;
                }
                for &a in px {
                    let d = self.ym.dist(a, b);
                    if d > best.value {
                        best = BaseValue { x, value: d, y, pair: (a.min(b), a.max(b)) };
                    }
                }
            }
        }
        best
    }
}

const CONTRACTION_WITNESS: [&str; 4] = ["x", "y", "p", "q"];

/// Optimal contraction envelope: value(r) is the max of diam(π(x) ∪ π(y))
/// over sampled x with d(x,Y) ≤ r and all y with d(x,y) ≤ ρ₁(d(x,Y)).
/// Distances to Y that agree up to rounding share one sample.
pub fn contraction_profile(
    s: &MarkedSpace,
    p: ProjectionParams,
    rho1: &FunctionSpec,
    r_max: Length,
    sampling: SamplingPlan,
) -> Result<Profile> {
    if r_max > s.valid_radius() + tol(s.valid_radius()) {
        return Err(Error::WindowViolation(format!("r_max {r_max} exceeds valid_radius {}", s.valid_radius())));
    }
    let plan = sampling.resolve(s.graph.vertex_count());
    let proj = Projector::new(s, p);
    let dy = s.dist_to_y();
    let mut base = select_base_points(s, r_max, plan);
    base.sort_by(|a, b| dy[a.index()].total_cmp(&dy[b.index()]).then(a.cmp(b)));
    let values: Vec<Option<BaseValue>> = base
        .par_iter()
        .map(|&x| {
            let radius = rho1.eval(dy[x.index()]);
            if radius < 0.0 {
                return None;
            }
            Some(with_workspace(|ws| proj.base_value(x, radius, ws)))
        })
        .collect();
    let mut samples: Vec<ProfileSample> = Vec::new();
    let mut running: Option<BaseValue> = None;
    for (k, &x) in base.iter().enumerate() {
        if let Some(bv) = values[k] {
            if running.is_none_or(|r| bv.value > r.value) {
                running = Some(bv);
            }
        }
        let r = dy[x.index()];
        let last_of_group = k + 1 == base.len() || dy[base[k + 1].index()] > r + tol(r);
        if last_of_group {
            if let Some(bv) = running {
                samples.push(ProfileSample {
                    r,
                    value: Some(bv.value),
                    witness: vec![bv.x, bv.y, bv.pair.0, bv.pair.1],
                });
            }
        }
    }
    Ok(Profile {
        kind: ProfileKind::Contraction,
        samples,
        witness_names: CONTRACTION_WITNESS.iter().map(|s| s.to_string()).collect(),
        params: ProfileParams::Contraction { epsilon: p.epsilon, rho1: rho1.clone(), sampling: plan },
        valid_radius: s.valid_radius(),
        window: (0.0, r_max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionViolation {
    pub r: Length,
    pub value: Length,
    pub bound: Length,
    pub witness: Vec<PointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub holds: bool,
    pub violations: Vec<ContractionViolation>,
    pub ratio_verdict: SublinearVerdict,
    pub tail_rule: String,
}

pub const TAIL_RULE: &str = "tail-sup ratio on geometric radii (4 per octave): mean over the top half < 1/2 mean over the bottom half";

/// Compares a profile against (ρ₁, ρ₂): pointwise bound plus the ratio rule for ρ₂/ρ₁.
pub fn check_contracting(profile: &Profile, h: &ContractionHypothesis) -> Result<ContractionCheck> {
    match profile.rho1() {
        Some(r1) if *r1 == h.rho1 => {}
        _ => return Err(Error::InvalidComparison("profile was computed with a different rho1".into())),
    }
    let mut violations = Vec::new();
    for s in &profile.samples {
        let bound = h.rho2.eval(s.r);
        let value = s.value.unwrap_or(INF);
        if value > bound + tol(bound) {
            violations.push(ContractionViolation { r: s.r, value, bound, witness: s.witness.clone() });
        }
    }
    let lo = profile.samples.iter().map(|s| s.r).find(|&r| r > 0.0).unwrap_or(1.0);
    let ratios: Vec<(f64, f64)> = geometric_grid(lo, profile.window.1, 4)
        .into_iter()
        .filter_map(|r| {
            let d = h.rho1.eval(r);
            (d > 0.0).then(|| (r, h.rho2.eval(r).max(0.0) / d))
        })
        .collect();
    let ratio_verdict = ratio_tends_to_zero(&ratios);
    Ok(ContractionCheck {
        holds: violations.is_empty() && ratio_verdict == SublinearVerdict::SublinearOnWindow,
        violations,
        ratio_verdict,
        tail_rule: TAIL_RULE.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub x: PointId,
    pub y: PointId,
    pub diam_proj: Length,
    pub max_endpoint_dist: Length,
    pub max_interior_dist: Length,
    pub min_dist: Length,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicImageProfile {
    pub c: Length,
    pub records: Vec<SegmentRecord>,
    /// True when no segment satisfied d(γ, Y) ≥ C.
    pub empty: bool,
}

const FAR_PARTNERS: usize = 4;
const RANDOM_PARTNERS: usize = 4;

fn segment_record(proj: &Projector, x: PointId, y: PointId, c: Length) -> Option<SegmentRecord> {
    let s = proj.space;
    let dy = s.dist_to_y();
    let path = s.graph.geodesic(x, y);
    let min_dist = path.points().iter().map(|v| dy[v.index()]).fold(INF, f64::min);
    if min_dist < c - tol(c) {
        return None;
    }
    let max_interior_dist = path.points().iter().map(|v| dy[v.index()]).fold(0.0, f64::max);
    let mut union: Vec<PointId> = path.points().iter().flat_map(|&v| proj.projection(v).iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let diam_proj = proj.set_diameter(&union).0;
    Some(SegmentRecord {
        x,
        y,
        diam_proj,
        max_endpoint_dist: dy[x.index()].max(dy[y.index()]),
        max_interior_dist,
        min_dist,
    })
}

/// Projection diameters of sampled geodesic segments staying at least C from Y.
/// Exhaustive plans use every pair of eligible vertices; stratified plans pair
/// each sampled base point with its farthest and some random ball partners.
pub fn geodesic_image_profile(s: &MarkedSpace, p: ProjectionParams, c: Length, sampling: SamplingPlan) -> Result<GeodesicImageProfile> {
    if !(c >= 0.0) {
        return Err(Error::InvalidParams(format!("C = {c}")));
    }
    let dy = s.dist_to_y();
    let eligible = |v: PointId| dy[v.index()] > 0.0 && dy[v.index()] >= c - tol(c);
    let plan = sampling.resolve_with_limit(s.graph.vertex_count(), 500);
    let proj = Projector::new(s, p);
    let pairs: Vec<(PointId, PointId)> = match plan {
        SamplingPlan::Exhaustive | SamplingPlan::Auto => {
            let all = select_points(s, SamplingPlan::Exhaustive, eligible);
            let mut out = Vec::new();
            for (k, &x) in all.iter().enumerate() {
                for &y in &all[k + 1..] {
                    out.push((x, y));
                }
            }
            out
        }
        SamplingPlan::Stratified { seed, .. } => {
            let base = select_points(s, plan, eligible);
            let per_base: Vec<Vec<(PointId, PointId)>> = base
                .par_iter()
                .map(|&x| {
                    let radius = 2.0 * dy[x.index()];
                    let mut ball: Vec<(f64, PointId)> = Vec::new();
                    with_workspace(|ws| {
                        ws.run(&s.graph, &[(x.0, 0.0)], radius, |_| true, |v, d| {
                            if v != x.0 && eligible(PointId(v)) {
                                ball.push((d, PointId(v)));
                            }
                            true
                        })
                    });
                    ball.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    let mut chosen: Vec<PointId> = ball.iter().take(FAR_PARTNERS).map(|b| b.1).collect();
                    let rest = &ball[chosen.len()..];
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (x.0 as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
                    for k in sample(&mut rng, rest.len(), RANDOM_PARTNERS.min(rest.len())).into_iter() {
                        chosen.push(rest[k].1);
                    }
                    chosen.into_iter().map(|y| (x.min(y), x.max(y))).collect()
                })
                .collect();
            let mut out: Vec<(PointId, PointId)> = per_base.into_iter().flatten().collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    };
    let records: Vec<SegmentRecord> = pairs.par_iter().filter_map(|&(x, y)| segment_record(&proj, x, y, c)).collect();
    Ok(GeodesicImageProfile { c, empty: records.is_empty(), records })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFailure {
    pub item: u8,
    pub record: SegmentRecord,
    pub bound: Length,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicImageCheck {
    pub item1_holds: bool,
    pub item2_holds: bool,
    pub failures: Vec<EnvelopeFailure>,
    pub rho_fit: FitReport,
    pub rho_sublinear: SublinearVerdict,
    pub segments: usize,
}

impl GeodesicImageCheck {
    pub fn passes(&self) -> bool {
        self.item1_holds && self.item2_holds && self.rho_sublinear == SublinearVerdict::SublinearOnWindow
    }
}

/// Item-1 envelope 4ε + 12ρ(4·max endpoint distance) and item-2 envelope
/// 4ε + 12ρ(max interior distance), with ρ the computed ρ₁ = id contraction
/// profile, read as a step function and held constant past its window.
pub fn check_geodesic_image(gi: &GeodesicImageProfile, rho: &Profile, epsilon: Length) -> Result<GeodesicImageCheck> {
    let lo = rho.samples.iter().map(|s| s.r).find(|&r| r > 0.0).unwrap_or(1.0);
    let fit_samples = rho.geometric_samples(lo, 4)?;
    let rho_fit = classify_growth(&fit_samples);
    let rho_sublinear = crate::asymptotics::is_sublinear_window(&fit_samples);
    let at = |r: f64| rho.step_value(r).unwrap_or(INF);
    let mut failures = Vec::new();
    for rec in &gi.records {
        let b1 = 4.0 * epsilon + 12.0 * at(4.0 * rec.max_endpoint_dist);
        if rec.diam_proj > b1 + tol(b1) {
            failures.push(EnvelopeFailure { item: 1, record: rec.clone(), bound: b1 });
        }
        let b2 = 4.0 * epsilon + 12.0 * at(rec.max_interior_dist);
        if rec.diam_proj > b2 + tol(b2) {
            failures.push(EnvelopeFailure { item: 2, record: rec.clone(), bound: b2 });
        }
    }
    Ok(GeodesicImageCheck {
        item1_holds: !failures.iter().any(|f| f.item == 1),
        item2_holds: !failures.iter().any(|f| f.item == 2),
        failures,
        rho_fit,
        rho_sublinear,
        segments: gi.records.len(),
    })
}
