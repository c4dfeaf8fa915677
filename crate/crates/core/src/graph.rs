//! Weighted graphs standing in for geodesic metric spaces.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{tol, with_workspace, INF};

pub type Length = f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub u32);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for PointId {
    fn from(v: usize) -> Self {
        PointId(v as u32)
    }
}

/// Sorted, duplicate-free set of points.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointSet {
    members: Vec<PointId>,
}

impl PointSet {
    pub fn new<I: IntoIterator<Item = PointId>>(items: I) -> Self {
        let mut members: Vec<PointId> = items.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        PointSet { members }
    }

    pub fn empty() -> Self {
        PointSet::default()
    }

    pub fn singleton(p: PointId) -> Self {
        PointSet { members: vec![p] }
    }

    pub fn members(&self) -> &[PointId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.iter().chain(other.iter()))
    }

    pub fn is_disjoint(&self, other: &PointSet) -> bool {
        other.iter().all(|p| !self.contains(p))
    }

    pub(crate) fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for p in self.iter() {
            m[p.index()] = true;
        }
        m
    }
}

impl FromIterator<PointId> for PointSet {
    fn from_iter<I: IntoIterator<Item = PointId>>(iter: I) -> Self {
        PointSet::new(iter)
    }
}

/// A path along graph edges together with its arc-length parameterization.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPath {
    points: Vec<PointId>,
    cumulative_length: Vec<Length>,
}

impl ParamPath {
    pub fn single(p: PointId) -> Self {
        ParamPath { points: vec![p], cumulative_length: vec![0.0] }
    }

    /// Builds a path through consecutive edges of `g`.
    pub fn from_points(g: &MetricGraph, points: Vec<PointId>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidQuery("empty path".into()));
        }
        let mut cumulative_length = Vec::with_capacity(points.len());
        cumulative_length.push(0.0);
        let mut acc = 0.0;
        for w in points.windows(2) {
            let weight = g.edge_weight(w[0], w[1]).ok_or_else(|| {
                Error::InvalidQuery(format!("no edge between {} and {}", w[0].0, w[1].0))
            })?;
            acc += weight;
            cumulative_length.push(acc);
        }
        Ok(ParamPath { points, cumulative_length })
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn cumulative_length(&self) -> &[Length] {
        &self.cumulative_length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> Length {
        *self.cumulative_length.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> PointId {
        self.points[0]
    }

    pub fn end(&self) -> PointId {
        *self.points.last().unwrap()
    }

    /// Arc length between vertex indices `i <= j`.
    pub fn arc(&self, i: usize, j: usize) -> Length {
        self.cumulative_length[j] - self.cumulative_length[i]
    }

    pub fn reversed(&self) -> ParamPath {
        let total = self.length();
        let points = self.points.iter().rev().copied().collect();
        let cumulative_length = self.cumulative_length.iter().rev().map(|c| total - c).collect();
        ParamPath { points, cumulative_length }
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn concat(&self, other: &ParamPath) -> Result<ParamPath> {
        if self.end() != other.start() {
            return Err(Error::InvalidQuery("paths do not meet".into()));
        }
        let mut points = self.points.clone();
        let mut cumulative_length = self.cumulative_length.clone();
        let base = self.length();
        for k in 1..other.points.len() {
            points.push(other.points[k]);
            cumulative_length.push(base + other.cumulative_length[k]);
        }
        Ok(ParamPath { points, cumulative_length })
    }

    /// Sub-path between vertex indices `i <= j`, re-based to start at 0.
    pub fn slice(&self, i: usize, j: usize) -> ParamPath {
        let base = self.cumulative_length[i];
        ParamPath {
            points: self.points[i..=j].to_vec(),
            cumulative_length: self.cumulative_length[i..=j].iter().map(|c| c - base).collect(),
        }
    }

    /// Index of the vertex whose parameter is closest to `t` (ties to the lower index).
    pub fn index_at(&self, t: Length) -> usize {
        let c = &self.cumulative_length;
        let k = c.partition_point(|&x| x < t);
        if k == 0 {
            return 0;
        }
        if k >= c.len() {
            return c.len() - 1;
        }
        if (c[k] - t) < (t - c[k - 1]) {
            k
        } else {
            k - 1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QGParams {
    pub l: f64,
    pub a: f64,
}

impl QGParams {
    pub fn new(l: f64, a: f64) -> Result<Self> {
        if !(l >= 1.0 && a >= 0.0 && l.is_finite() && a.is_finite()) {
            return Err(Error::InvalidParams(format!("quasi-geodesic constants L={l}, A={a}")));
        }
        Ok(QGParams { l, a })
    }
}

const DEFAULT_CACHE_BYTES: usize = 64 << 20;

/// Bounded FIFO memo of single-source distance rows.
pub struct DistanceCache {
    budget: usize,
    inner: Mutex<CacheInner>,
}

#[derive(Default)]
struct CacheInner {
    rows: HashMap<u32, Arc<[f64]>>,
    order: VecDeque<u32>,
    bytes: usize,
}

impl DistanceCache {
    pub fn new(budget_bytes: usize) -> Self {
        DistanceCache { budget: budget_bytes, inner: Mutex::new(CacheInner::default()) }
    }

    fn get(&self, s: u32) -> Option<Arc<[f64]>> {
        self.inner.lock().unwrap().rows.get(&s).cloned()
    }

    fn insert(&self, s: u32, row: Arc<[f64]>) -> Arc<[f64]> {
        let size = row.len() * std::mem::size_of::<f64>();
        if size > self.budget {
            return row;
        }
        let mut inner = self.inner.lock().unwrap();
        if let Some(existing) = inner.rows.get(&s) {
            return existing.clone();
        }
        while inner.bytes + size > self.budget {
            let Some(old) = inner.order.pop_front() else { break };
            if let Some(r) = inner.rows.remove(&old) {
                inner.bytes -= r.len() * std::mem::size_of::<f64>();
            }
        }
        inner.rows.insert(s, row.clone());
        inner.order.push_back(s);
        inner.bytes += size;
        row
    }
}

/// Immutable connected graph with positive edge weights, stored as CSR.
pub struct MetricGraph {
    n: usize,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    edges: Vec<(PointId, PointId, Length)>,
    resolution: Length,
    max_weight: Length,
    cache: Option<DistanceCache>,
}

impl std::fmt::Debug for MetricGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricGraph")
            .field("vertex_count", &self.n)
            .field("edge_count", &self.edges.len())
            .field("resolution", &self.resolution)
            .finish()
    }
}

impl Clone for MetricGraph {
    fn clone(&self) -> Self {
        MetricGraph {
            n: self.n,
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            weights: self.weights.clone(),
            edges: self.edges.clone(),
            resolution: self.resolution,
            max_weight: self.max_weight,
            cache: self.cache.as_ref().map(|c| DistanceCache::new(c.budget)),
        }
    }
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<(PointId, PointId, Length)>, resolution: Length) -> Result<Self> {
        Self::with_cache(vertex_count, edges, resolution, Some(DEFAULT_CACHE_BYTES))
    }

    /// Like `new`, with an explicit cache budget (`None` disables caching).
    pub fn with_cache(
        vertex_count: usize,
        edges: Vec<(PointId, PointId, Length)>,
        resolution: Length,
        cache_bytes: Option<usize>,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        if vertex_count > u32::MAX as usize {
            return Err(Error::InvalidGraph("too many vertices".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidGraph(format!("resolution {resolution}")));
        }
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vertex_count];
        for &(u, v, w) in &edges {
            if u.index() >= vertex_count || v.index() >= vertex_count {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) out of range", u.0, v.0)));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {}", u.0)));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) has weight {w}", u.0, v.0)));
            }
            adj[u.index()].push((v.0, w));
            adj[v.index()].push((u.0, w));
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut targets = Vec::with_capacity(edges.len() * 2);
        let mut weights = Vec::with_capacity(edges.len() * 2);
        offsets.push(0u32);
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_by_key(|x| x.0);
            if list.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidGraph(format!("duplicate edge at vertex {v}")));
            }
            for &(t, w) in list.iter() {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len() as u32);
        }
        let max_weight = weights.iter().copied().fold(0.0, f64::max);
        let g = MetricGraph {
            n: vertex_count,
            offsets,
            targets,
            weights,
            edges,
            resolution,
            max_weight,
            cache: cache_bytes.map(DistanceCache::new),
        };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for (u, _) in self.neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(PointId, PointId, Length)] {
        &self.edges
    }

    pub fn resolution(&self) -> Length {
        self.resolution
    }

    /// Largest edge weight (0 for a single vertex).
    pub fn max_edge_weight(&self) -> Length {
        self.max_weight
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        self.targets[lo..hi].iter().copied().zip(self.weights[lo..hi].iter().copied())
    }

    pub fn degree(&self, v: PointId) -> usize {
        (self.offsets[v.index() + 1] - self.offsets[v.index()]) as usize
    }

    pub fn edge_weight(&self, u: PointId, v: PointId) -> Option<Length> {
        let lo = self.offsets[u.index()] as usize;
        let hi = self.offsets[u.index() + 1] as usize;
        self.targets[lo..hi].binary_search(&v.0).ok().map(|k| self.weights[lo + k])
    }

    fn check(&self, x: PointId) -> Result<()> {
        if x.index() < self.n {
            Ok(())
        } else {
            Err(Error::InvalidQuery(format!("point {} out of range", x.0)))
        }
    }

    fn compute_row(&self, source: PointId) -> Arc<[f64]> {
        let mut row = vec![INF; self.n];
        with_workspace(|ws| {
            ws.run(self, &[(source.0, 0.0)], INF, |_| true, |v, d| {
                row[v as usize] = d;
                true
            })
        });
        row.into()
    }

    /// Full single-source distance row, memoized when the cache is enabled.
    pub fn distances_from(&self, source: PointId) -> Arc<[f64]> {
        match &self.cache {
            Some(c) => match c.get(source.0) {
                Some(r) => r,
                None => c.insert(source.0, self.compute_row(source)),
            },
            None => self.compute_row(source),
        }
    }

    fn cached_row(&self, s: PointId) -> Option<Arc<[f64]>> {
        self.cache.as_ref().and_then(|c| c.get(s.0))
    }

    pub fn distance(&self, x: PointId, y: PointId) -> Length {
        if x == y {
            return 0.0;
        }
        if let Some(r) = self.cached_row(x) {
            return r[y.index()];
        }
        if let Some(r) = self.cached_row(y) {
            return r[x.index()];
        }
        let (s, t) = if x < y { (x, y) } else { (y, x) };
        let mut out = INF;
        with_workspace(|ws| {
            ws.run(self, &[(s.0, 0.0)], INF, |_| true, |v, d| {
                if v == t.0 {
                    out = d;
                    false
                } else {
                    true
                }
            })
        });
        out
    }

    /// Distances from `source` to each of `targets`, stopping once all are settled.
    pub fn distances_to_targets(&self, source: PointId, targets: &[PointId]) -> Vec<Length> {
        if let Some(r) = self.cached_row(source) {
            return targets.iter().map(|t| r[t.index()]).collect();
        }
        let mut want: HashMap<u32, usize> = HashMap::new();
        for t in targets {
            want.entry(t.0).or_insert(0);
        }
        let mut remaining = want.len();
        with_workspace(|ws| {
            ws.run(self, &[(source.0, 0.0)], INF, |_| true, |v, _| {
                if want.contains_key(&v) {
                    remaining -= 1;
                }
                remaining > 0
            });
            targets.iter().map(|t| ws.dist(t.0)).collect()
        })
    }

    /// Shortest path from `x` to `y`. The search always runs from the smaller
    /// id and predecessors are chosen by smallest id, so `geodesic(y, x)` is
    /// the reverse of `geodesic(x, y)`.
    pub fn geodesic(&self, x: PointId, y: PointId) -> ParamPath {
        self.filtered_path(x, y, |_| true).expect("graph is connected").0
    }

    fn filtered_path<A: Fn(u32) -> bool + Copy>(&self, x: PointId, y: PointId, allow: A) -> Option<(ParamPath, Length)> {
        if x == y {
            return Some((ParamPath::single(x), 0.0));
        }
        let (s, t) = if x < y { (x, y) } else { (y, x) };
        let raw = with_workspace(|ws| {
            let mut reached = false;
            ws.run(self, &[(s.0, 0.0)], INF, allow, |v, _| {
                if v == t.0 {
                    reached = true;
                    false
                } else {
                    true
                }
            });
            reached.then(|| ws.walk_back(self, t.0, allow))
        })?;
        // raw runs t -> s
        let mut pts: Vec<PointId> = raw.into_iter().map(PointId).collect();
        if x == s {
            pts.reverse();
        }
        let path = ParamPath::from_points(self, pts).expect("walk follows edges");
        let len = path.length();
        Some((path, len))
    }

    pub fn distance_to_set(&self, x: PointId, y: &PointSet) -> Result<Length> {
        if y.is_empty() {
            return Err(Error::InvalidSubspace("empty target set".into()));
        }
        self.check(x)?;
        let mask = y.mask(self.n);
        let mut out = INF;
        with_workspace(|ws| {
            ws.run(self, &[(x.0, 0.0)], INF, |_| true, |v, d| {
                if mask[v as usize] {
                    out = d;
                    false
                } else {
                    true
                }
            })
        });
        Ok(out)
    }

    /// d(v, Y) for every vertex v (multi-source search).
    pub fn distances_to_set(&self, y: &PointSet) -> Result<Vec<Length>> {
        if y.is_empty() {
            return Err(Error::InvalidSubspace("empty target set".into()));
        }
        let sources: Vec<(u32, f64)> = y.iter().map(|p| (p.0, 0.0)).collect();
        let mut row = vec![INF; self.n];
        with_workspace(|ws| {
            ws.run(self, &sources, INF, |_| true, |v, d| {
                row[v as usize] = d;
                true
            })
        });
        Ok(row)
    }

    /// Closed `radius`-neighbourhood of a set.
    pub fn neighborhood(&self, y: &PointSet, radius: Length) -> Result<PointSet> {
        if y.is_empty() {
            return Err(Error::InvalidSubspace("empty set".into()));
        }
        let sources: Vec<(u32, f64)> = y.iter().map(|p| (p.0, 0.0)).collect();
        let mut out = Vec::new();
        with_workspace(|ws| {
            ws.run(self, &sources, radius, |_| true, |v, _| {
                out.push(PointId(v));
                true
            })
        });
        Ok(PointSet::new(out))
    }

    pub fn hausdorff_distance(&self, y: &PointSet, z: &PointSet) -> Result<Length> {
        if y.is_empty() || z.is_empty() {
            return Err(Error::InvalidSubspace("empty set in Hausdorff distance".into()));
        }
        let to_z = self.distances_to_set(z)?;
        let to_y = self.distances_to_set(y)?;
        let a = y.iter().map(|p| to_z[p.index()]).fold(0.0, f64::max);
        let b = z.iter().map(|p| to_y[p.index()]).fold(0.0, f64::max);
        Ok(a.max(b))
    }

    /// Shortest path from `a` to `b` avoiding every vertex of `forbidden`.
    /// `Ok(None)` means the filtered graph disconnects them.
    pub fn avoid_shortest_path(&self, a: PointId, b: PointId, forbidden: &PointSet) -> Result<Option<(ParamPath, Length)>> {
        self.check(a)?;
        self.check(b)?;
        if forbidden.contains(a) || forbidden.contains(b) {
            return Err(Error::InvalidQuery("endpoint lies in the forbidden set".into()));
        }
        let mask = forbidden.mask(self.n);
        Ok(self.filtered_path(a, b, |v| !mask[v as usize]))
    }

    /// Same as `avoid_shortest_path` with the forbidden set given as a mask.
    pub fn avoid_shortest_path_mask(&self, a: PointId, b: PointId, blocked: &[bool]) -> Result<Option<(ParamPath, Length)>> {
        if blocked[a.index()] || blocked[b.index()] {
            return Err(Error::InvalidQuery("endpoint lies in the forbidden set".into()));
        }
        Ok(self.filtered_path(a, b, |v| !blocked[v as usize]))
    }

    /// Pairwise distances among the vertices of a path, indexed by the
    /// position of each distinct vertex in `distinct`.
    pub(crate) fn path_distance_table(&self, pts: &[PointId]) -> (Vec<PointId>, Vec<usize>, Vec<Vec<f64>>) {
        let mut distinct: Vec<PointId> = pts.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let slot: Vec<usize> = pts.iter().map(|p| distinct.binary_search(p).unwrap()).collect();
        let table: Vec<Vec<f64>> = distinct.iter().map(|&s| self.distances_to_targets(s, &distinct)).collect();
        (distinct, slot, table)
    }

    pub fn is_quasigeodesic(&self, p: &ParamPath, q: QGParams) -> bool {
        let pts = p.points();
        let (_, slot, table) = self.path_distance_table(pts);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let arc = p.arc(i, j);
                let d = table[slot[i]][slot[j]];
                let lower = arc / q.l - q.a;
                let upper = q.l * arc + q.a;
                if d < lower - tol(lower) || d > upper + tol(upper) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest δ such that each side of the geodesic triangle lies in the
    /// closed δ-neighbourhood of the other two sides.
    pub fn triangle_thinness(&self, x: PointId, y: PointId, z: PointId) -> Length {
        let sides = [self.geodesic(x, y), self.geodesic(y, z), self.geodesic(z, x)];
        let mut delta: f64 = 0.0;
        for k in 0..3 {
            let others: PointSet = sides
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .flat_map(|(_, s)| s.points().iter().copied())
                .collect();
            let side = PointSet::new(sides[k].points().iter().copied());
            let mask = side.mask(self.n);
            let mut remaining = side.len();
            let sources: Vec<(u32, f64)> = others.iter().map(|p| (p.0, 0.0)).collect();
            let mut far: f64 = 0.0;
            with_workspace(|ws| {
                ws.run(self, &sources, INF, |_| true, |v, d| {
                    if mask[v as usize] {
                        far = far.max(d);
                        remaining -= 1;
                    }
                    remaining > 0
                })
            });
            delta = delta.max(far);
        }
        delta
    }

    /// Two-sweep lower bound on the diameter (exact on trees).
    pub fn extent(&self) -> Length {
        let row = self.compute_row(PointId(0));
        let far = argmax(&row);
        let row2 = self.compute_row(PointId(far as u32));
        row2.iter().copied().fold(0.0, f64::max)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
