//! Generators for the example spaces, marked with a subspace Y, an optional
//! parameterized path γ along Y, and named landmarks.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{invert_increasing, FunctionSpec};
use crate::graph::{Length, MetricGraph, ParamPath, PointId, PointSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CycleArc,
    Tree,
    GridL1,
    LogSpace,
    Necklace,
    DivergenceNecklace,
    Halfplane,
    /// A document that was not produced by one of the generators.
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::CycleArc => "cycle_arc",
            Family::Tree => "tree",
            Family::GridL1 => "grid_l1",
            Family::LogSpace => "log_space",
            Family::Necklace => "necklace",
            Family::DivergenceNecklace => "divergence_necklace",
            Family::Halfplane => "halfplane",
            Family::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyParams {
    CycleArc { n: usize, arc_len: usize },
    Tree { branching: usize, depth: usize },
    GridL1 { width: usize, height: usize },
    LogSpace { rho: FunctionSpec, a: f64, n: usize },
    Necklace { rho2: FunctionSpec, i_min: usize, i_max: usize },
    DivergenceNecklace { f: FunctionSpec, i_min: usize, i_max: usize },
    Halfplane { extent: f64, resolution: f64 },
    Custom {},
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::CycleArc { .. } => Family::CycleArc,
            FamilyParams::Tree { .. } => Family::Tree,
            FamilyParams::GridL1 { .. } => Family::GridL1,
            FamilyParams::LogSpace { .. } => Family::LogSpace,
            FamilyParams::Necklace { .. } => Family::Necklace,
            FamilyParams::DivergenceNecklace { .. } => Family::DivergenceNecklace,
            FamilyParams::Halfplane { .. } => Family::Halfplane,
            FamilyParams::Custom {} => Family::Custom,
        }
    }
}

/// One length that had to be rounded to the graph resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rounding {
    pub item: String,
    pub exact: f64,
    pub rounded: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceMeta {
    pub family: Family,
    pub params: FamilyParams,
    pub truncation_index: u64,
    pub valid_radius: Length,
    pub rounding: Vec<Rounding>,
}

#[derive(Clone, Debug)]
pub struct MarkedSpace {
    pub graph: MetricGraph,
    pub y: PointSet,
    pub gamma: Option<ParamPath>,
    pub landmarks: BTreeMap<String, PointId>,
    pub meta: SpaceMeta,
    dist_y: OnceLock<Vec<Length>>,
    levels: OnceLock<Vec<Length>>,
}

impl MarkedSpace {
    pub fn new(
        graph: MetricGraph,
        y: PointSet,
        gamma: Option<ParamPath>,
        landmarks: BTreeMap<String, PointId>,
        meta: SpaceMeta,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if y.is_empty() {
            return Err(Error::InvalidSubspace("Y is empty".into()));
        }
        if y.iter().any(|p| p.index() >= n) {
            return Err(Error::InvalidSubspace("Y contains an out-of-range point".into()));
        }
        if let Some(g) = &gamma {
            let as_set = PointSet::new(g.points().iter().copied());
            if as_set != y || as_set.len() != g.len() {
                return Err(Error::InvalidSubspace("gamma must traverse exactly the vertices of Y".into()));
            }
        }
        if let Some((name, _)) = landmarks.iter().find(|(_, p)| p.index() >= n) {
            return Err(Error::InvalidQuery(format!("landmark {name} out of range")));
        }
        if meta.family != meta.params.family() {
            return Err(Error::InvalidParams("meta family does not match params".into()));
        }
        Ok(MarkedSpace { graph, y, gamma, landmarks, meta, dist_y: OnceLock::new(), levels: OnceLock::new() })
    }

    /// d(v, Y) for every vertex.
    pub fn dist_to_y(&self) -> &[Length] {
        self.dist_y.get_or_init(|| self.graph.distances_to_set(&self.y).expect("Y non-empty"))
    }

    /// The distinct positive values of d(v, Y), ascending.
    pub fn distance_levels(&self) -> &[Length] {
        self.levels.get_or_init(|| {
            let mut v: Vec<Length> = self.dist_to_y().iter().copied().filter(|&d| d > 0.0).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
    }

    pub fn gamma(&self) -> Result<&ParamPath> {
        self.gamma.as_ref().ok_or_else(|| Error::InvalidQuery("space has no marked path gamma".into()))
    }

    pub fn landmark(&self, name: &str) -> Result<PointId> {
        self.landmarks.get(name).copied().ok_or_else(|| Error::InvalidQuery(format!("no landmark {name}")))
    }

    pub fn valid_radius(&self) -> Length {
        self.meta.valid_radius
    }

    /// Same graph and metadata with a different marked subspace. γ is kept
    /// only if it still traverses the new Y.
    pub fn with_subspace(&self, y: PointSet) -> Result<MarkedSpace> {
        let gamma = self.gamma.clone().filter(|g| PointSet::new(g.points().iter().copied()) == y);
        MarkedSpace::new(self.graph.clone(), y, gamma, self.landmarks.clone(), self.meta.clone())
    }
}

// ---------------------------------------------------------------------------
// Abel data

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelData {
    pub rho: FunctionSpec,
    pub a: Length,
    pub a_prime: Length,
    pub sigma: Vec<Length>,
}

/// Checks the hypotheses of the Abel trade on a fixed sample grid.
pub fn validate_abel_hypotheses(rho: &FunctionSpec, a: Length) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidFunction(msg));
    if !(a.is_finite() && a >= 0.0) {
        return bad(format!("A = {a}"));
    }
    if rho.eval(a) <= 0.0 {
        return bad(format!("rho(A) = {} is not positive", rho.eval(a)));
    }
    let mut grid: Vec<f64> = vec![0.0];
    for k in -16..=160 {
        grid.push(a.max(1.0) * 2f64.powf(k as f64 / 4.0));
    }
    grid.push(a);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if !rho.is_nondecreasing_on(&grid) {
        return bad("rho is not non-decreasing".into());
    }
    for &r in &grid {
        if rho.eval(r) > r + 1e-9 * r.max(1.0) {
            return bad(format!("rho({r}) > {r}"));
        }
    }
    let steps: Vec<f64> = (-6..=40).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
    for &x in grid.iter().filter(|&&x| x >= a) {
        let base = rho.eval(x);
        for &b in &steps {
            let inc = rho.eval(x + b) - base;
            if inc < -1e-12 * base.abs().max(1.0) || inc >= b {
                return bad(format!("increment condition fails at a={x}, b={b}"));
            }
        }
    }
    let top = *grid.last().unwrap();
    if rho.eval(top) <= rho.eval(a) {
        return bad("rho appears bounded".into());
    }
    Ok(())
}

/// σ(0) = A − ρ(A) and σ(i+1) = φ⁻¹(σ(i)) with φ(x) = x − ρ(x).
pub fn sigma_sequence(rho: &FunctionSpec, a: Length, n: usize) -> Result<AbelData> {
    validate_abel_hypotheses(rho, a)?;
    let a_prime = a - rho.eval(a);
    let mut sigma = vec![a_prime];
    for i in 0..n {
        let next = invert_increasing(|x| x - rho.eval(x), sigma[i], a)?;
        sigma.push(next);
    }
    Ok(AbelData { rho: rho.clone(), a, a_prime, sigma })
}

// ---------------------------------------------------------------------------
// Generators

struct Builder {
    n: u32,
    edges: Vec<(PointId, PointId, Length)>,
}

impl Builder {
    fn new() -> Self {
        Builder { n: 0, edges: Vec::new() }
    }

    fn vertex(&mut self) -> PointId {
        self.n += 1;
        PointId(self.n - 1)
    }

    fn edge(&mut self, a: PointId, b: PointId, w: Length) {
        self.edges.push((a, b, w));
    }

    /// Chains `len` new unit edges from `start`; returns all `len + 1` vertices.
    fn chain(&mut self, start: PointId, len: usize) -> Vec<PointId> {
        let mut out = Vec::with_capacity(len + 1);
        out.push(start);
        let mut prev = start;
        for _ in 0..len {
            let v = self.vertex();
            self.edge(prev, v, 1.0);
            out.push(v);
            prev = v;
        }
        out
    }

    /// Unit path of `len` edges from `a` to the existing vertex `b`.
    fn bridge(&mut self, a: PointId, b: PointId, len: usize) -> Vec<PointId> {
        assert!(len >= 1);
        let mut pts = self.chain(a, len - 1);
        let last = *pts.last().unwrap();
        self.edge(last, b, 1.0);
        pts.push(b);
        pts
    }

    fn finish(self) -> Result<MetricGraph> {
        MetricGraph::new(self.n as usize, self.edges, 1.0)
    }
}

fn round_length(item: String, exact: f64, log: &mut Vec<Rounding>) -> usize {
    let rounded = exact.round();
    if rounded != exact {
        log.push(Rounding { item, exact, rounded });
    }
    rounded.max(0.0) as usize
}

fn finish_space(
    graph: MetricGraph,
    y_path: Vec<PointId>,
    with_gamma: bool,
    landmarks: BTreeMap<String, PointId>,
    params: FamilyParams,
    truncation_index: u64,
    rule_radius: Length,
    rounding: Vec<Rounding>,
) -> Result<MarkedSpace> {
    let extent = graph.extent();
    let valid_radius = rule_radius.min(extent / 4.0);
    let y = PointSet::new(y_path.iter().copied());
    let gamma = if with_gamma { Some(ParamPath::from_points(&graph, y_path)?) } else { None };
    let meta = SpaceMeta { family: params.family(), params, truncation_index, valid_radius, rounding };
    MarkedSpace::new(graph, y, gamma, landmarks, meta)
}

pub fn generate(params: &FamilyParams) -> Result<MarkedSpace> {
    match params {
        FamilyParams::CycleArc { n, arc_len } => cycle_arc(*n, *arc_len),
        FamilyParams::Tree { branching, depth } => tree(*branching, *depth),
        FamilyParams::GridL1 { width, height } => grid_l1(*width, *height),
        FamilyParams::LogSpace { rho, a, n } => log_space(rho, *a, *n),
        FamilyParams::Necklace { rho2, i_min, i_max } => necklace(rho2, *i_min, *i_max),
        FamilyParams::DivergenceNecklace { f, i_min, i_max } => divergence_necklace(f, *i_min, *i_max),
        FamilyParams::Halfplane { extent, resolution } => halfplane(*extent, *resolution),
        FamilyParams::Custom {} => Err(Error::InvalidParams("custom spaces are loaded from documents".into())),
    }
}

/// Cycle of circumference `n` with Y the arc `v0..v_arc_len`.
pub fn cycle_arc(n: usize, arc_len: usize) -> Result<MarkedSpace> {
    if n < 3 || arc_len >= n {
        return Err(Error::InvalidParams(format!("cycle_arc needs n >= 3 and arc_len < n (n={n}, arc_len={arc_len})")));
    }
    let mut b = Builder::new();
    let vs: Vec<PointId> = (0..n).map(|_| b.vertex()).collect();
    for i in 0..n {
        b.edge(vs[i], vs[(i + 1) % n], 1.0);
    }
    let g = b.finish()?;
    let y_path = vs[..=arc_len].to_vec();
    let landmarks = BTreeMap::from([("arc_start".to_string(), vs[0]), ("arc_end".to_string(), vs[arc_len])]);
    let params = FamilyParams::CycleArc { n, arc_len };
    finish_space(g, y_path, true, landmarks, params, n as u64, f64::INFINITY, Vec::new())
}

/// Complete `branching`-ary tree; vertices numbered breadth-first, Y the
/// leftmost root-to-leaf ray.
pub fn tree(branching: usize, depth: usize) -> Result<MarkedSpace> {
    if branching < 1 || depth < 1 {
        return Err(Error::InvalidParams("tree needs branching >= 1 and depth >= 1".into()));
    }
    let mut count: usize = 1;
    let mut level: usize = 1;
    for _ in 0..depth {
        level = level.checked_mul(branching).ok_or_else(|| Error::InvalidParams("tree too large".into()))?;
        count += level;
        if count > 50_000_000 {
            return Err(Error::InvalidParams("tree too large".into()));
        }
    }
    let edges = (1..count).map(|v| (PointId(((v - 1) / branching) as u32), PointId(v as u32), 1.0)).collect();
    let g = MetricGraph::new(count, edges, 1.0)?;
    let mut ray = vec![PointId(0)];
    let mut v = 0usize;
    for _ in 0..depth {
        v = v * branching + 1;
        ray.push(PointId(v as u32));
    }
    let landmarks = BTreeMap::from([("root".to_string(), PointId(0)), ("leaf".to_string(), *ray.last().unwrap())]);
    let params = FamilyParams::Tree { branching, depth };
    finish_space(g, ray, true, landmarks, params, depth as u64, depth as f64 / 2.0, Vec::new())
}

/// Vertex id of grid point `(i, j)` in a grid of the given width.
pub fn grid_id(width: usize, i: usize, j: usize) -> PointId {
    PointId((j * width + i) as u32)
}

/// `width × height` unit grid (L1 metric); Y = γ = the bottom row `j = 0`.
pub fn grid_l1(width: usize, height: usize) -> Result<MarkedSpace> {
    if width < 2 || height < 1 {
        return Err(Error::InvalidParams("grid needs width >= 2 and height >= 1".into()));
    }
    let mut edges = Vec::with_capacity(2 * width * height);
    for j in 0..height {
        for i in 0..width {
            if i + 1 < width {
                edges.push((grid_id(width, i, j), grid_id(width, i + 1, j), 1.0));
            }
            if j + 1 < height {
                edges.push((grid_id(width, i, j), grid_id(width, i, j + 1), 1.0));
            }
        }
    }
    let g = MetricGraph::new(width * height, edges, 1.0)?;
    let axis: Vec<PointId> = (0..width).map(|i| grid_id(width, i, 0)).collect();
    let params = FamilyParams::GridL1 { width, height };
    let rule = width.min(height) as f64 / 4.0;
    finish_space(g, axis, true, BTreeMap::new(), params, width.min(height) as u64, rule, Vec::new())
}

/// Ray Y = [0, n] with a segment Z_i of length σ(i) hanging from each
/// integer point and a segment W_i of length σ(i+1) − σ(i) + 1 joining the
/// tips z_i and z_{i+1}.
pub fn log_space(rho: &FunctionSpec, a: Length, n: usize) -> Result<MarkedSpace> {
    if n < 1 {
        return Err(Error::InvalidParams("log_space needs n >= 1".into()));
    }
    let abel = sigma_sequence(rho, a, n)?;
    let mut rounding = Vec::new();
    let lens: Vec<usize> = abel
        .sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| round_length(format!("Z_{i}"), s, &mut rounding))
        .collect();
    for w in lens.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParams("sigma gaps vanish at unit resolution".into()));
        }
    }
    let mut b = Builder::new();
    let y0 = b.vertex();
    let ray = b.chain(y0, n);
    let mut landmarks = BTreeMap::new();
    let mut tips = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let z = *b.chain(ray[i], lens[i]).last().unwrap();
        landmarks.insert(format!("y{i}"), ray[i]);
        landmarks.insert(format!("z{i}"), z);
        tips.push(z);
    }
    rounding.push(Rounding { item: "x_i offset from z_{i+1}".into(), exact: 0.5, rounded: 1.0 });
    for i in 0..n {
        let exact = abel.sigma[i + 1] - abel.sigma[i] + 1.0;
        let len = lens[i + 1] - lens[i] + 1;
        if (len as f64) != exact {
            rounding.push(Rounding { item: format!("W_{i}"), exact, rounded: len as f64 });
        }
        let w = b.bridge(tips[i], tips[i + 1], len);
        landmarks.insert(format!("x{i}"), w[w.len() - 2]);
    }
    let g = b.finish()?;
    let params = FamilyParams::LogSpace { rho: rho.clone(), a, n };
    let rule = lens[n] as f64 / 4.0;
    finish_space(g, ray, true, landmarks, params, n as u64, rule, rounding)
}

struct Bead {
    i: usize,
    interval: usize,
    bridge: usize,
}

fn bead_string(beads: &[Bead], with_midpoint_landmarks: bool) -> Result<(MetricGraph, Vec<PointId>, BTreeMap<String, PointId>)> {
    let mut b = Builder::new();
    let start = b.vertex();
    let mut line = vec![start];
    let mut landmarks = BTreeMap::new();
    for bead in beads {
        let gap = b.chain(*line.last().unwrap(), 1);
        let a = gap[1];
        line.push(a);
        let interval = b.chain(a, bead.interval);
        line.extend_from_slice(&interval[1..]);
        let end = *interval.last().unwrap();
        let j = b.bridge(a, end, bead.bridge);
        let i = bead.i;
        landmarks.insert(format!("a{i}"), a);
        landmarks.insert(format!("b{i}"), end);
        landmarks.insert(format!("y{i}"), interval[bead.interval / 2]);
        if with_midpoint_landmarks {
            landmarks.insert(format!("x{i}"), j[bead.bridge / 2]);
        }
    }
    let tail = b.chain(*line.last().unwrap(), 1);
    line.push(tail[1]);
    Ok((b.finish()?, line, landmarks))
}

/// Line Y carrying intervals I_i of length round(ρ₂(i)), each bridged by a
/// segment J_i of length 4i.
pub fn necklace(rho2: &FunctionSpec, i_min: usize, i_max: usize) -> Result<MarkedSpace> {
    if i_min < 2 || i_max < i_min {
        return Err(Error::InvalidParams(format!("necklace needs 2 <= i_min <= i_max (got {i_min}..{i_max})")));
    }
    let mut rounding = Vec::new();
    let mut beads = Vec::new();
    for i in i_min..=i_max {
        let exact = rho2.eval(i as f64);
        let len = round_length(format!("I_{i}"), exact, &mut rounding);
        if len == 0 || len >= i {
            return Err(Error::InvalidParams(format!("necklace interval I_{i} has length {len}, need 0 < length < {i}")));
        }
        beads.push(Bead { i, interval: len, bridge: 4 * i });
    }
    let (g, line, landmarks) = bead_string(&beads, true)?;
    let params = FamilyParams::Necklace { rho2: rho2.clone(), i_min, i_max };
    finish_space(g, line, true, landmarks, params, i_max as u64, i_max as f64, rounding)
}

/// Line Y = γ carrying intervals I_i of length 2i, each bridged by a
/// segment J_i of length round(f(i)).
pub fn divergence_necklace(f: &FunctionSpec, i_min: usize, i_max: usize) -> Result<MarkedSpace> {
    if i_min < 1 || i_max < i_min {
        return Err(Error::InvalidParams(format!("divergence_necklace needs 1 <= i_min <= i_max (got {i_min}..{i_max})")));
    }
    let mut rounding = Vec::new();
    let mut beads = Vec::new();
    for i in i_min..=i_max {
        let len = round_length(format!("J_{i}"), f.eval(i as f64), &mut rounding);
        if len == 0 {
            return Err(Error::InvalidParams(format!("J_{i} would have length 0")));
        }
        beads.push(Bead { i, interval: 2 * i, bridge: len });
    }
    let (g, line, landmarks) = bead_string(&beads, true)?;
    let params = FamilyParams::DivergenceNecklace { f: f.clone(), i_min, i_max };
    finish_space(g, line, true, landmarks, params, i_max as u64, i_max as f64, rounding)
}

/// Grid `(i, j)` with `|i| <= k`, `1 <= j <= k`, `k = extent/resolution`;
/// every edge leaving height j upward or sideways weighs 1/j. Y = γ = the
/// column `i = 0`, bottom to top.
pub fn halfplane(extent: f64, resolution: f64) -> Result<MarkedSpace> {
    if !(extent > 0.0 && resolution > 0.0 && extent.is_finite() && resolution.is_finite()) {
        return Err(Error::InvalidParams("halfplane needs positive extent and resolution".into()));
    }
    let k = (extent / resolution).round() as usize;
    if k < 2 || k > 2000 {
        return Err(Error::InvalidParams(format!("halfplane grid size {k} out of range")));
    }
    let width = 2 * k + 1;
    let id = |i: usize, j: usize| PointId(((j - 1) * width + i) as u32);
    let mut edges = Vec::new();
    for j in 1..=k {
        let w = 1.0 / j as f64;
        for i in 0..width {
            if i + 1 < width {
                edges.push((id(i, j), id(i + 1, j), w));
            }
            if j < k {
                edges.push((id(i, j), id(i, j + 1), w));
            }
        }
    }
    let g = MetricGraph::new(width * k, edges, 1.0)?;
    let column: Vec<PointId> = (1..=k).map(|j| id(k, j)).collect();
    let landmarks = BTreeMap::from([("bottom".to_string(), id(k, 1)), ("top".to_string(), id(k, k))]);
    let params = FamilyParams::Halfplane { extent, resolution };
    finish_space(g, column, true, landmarks, params, k as u64, f64::INFINITY, Vec::new())
}
