//! Brute-force reference implementations used by the oracle and acceptance
//! tests. Everything here works from the raw edge list: all-pairs distances by
//! Floyd–Warshall and quadratic Dijkstra on filtered vertex sets.

#![allow(dead_code)]

use geocontract::divergence::DivergenceParams;
use geocontract::function::FunctionSpec;
use geocontract::graph::PointId;
use geocontract::spaces::MarkedSpace;

pub fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

pub struct Oracle {
    pub n: usize,
    pub adj: Vec<Vec<(usize, f64)>>,
    pub d: Vec<Vec<f64>>,
    pub dy: Vec<f64>,
    pub y: Vec<usize>,
    pub resolution: f64,
    pub max_edge: f64,
}

impl Oracle {
    pub fn new(s: &MarkedSpace) -> Self {
        let n = s.graph.vertex_count();
        let mut adj = vec![Vec::new(); n];
        let mut d = vec![vec![f64::INFINITY; n]; n];
        let mut max_edge: f64 = 0.0;
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for &(u, v, w) in s.graph.edges() {
            let (u, v) = (u.index(), v.index());
            adj[u].push((v, w));
            adj[v].push((u, w));
            max_edge = max_edge.max(w);
            if w < d[u][v] {
                d[u][v] = w;
                d[v][u] = w;
            }
        }
        for k in 0..n {
            let dk = d[k].clone();
            for row in d.iter_mut() {
                let dik = row[k];
                if dik == f64::INFINITY {
                    continue;
                }
                for (j, &dkj) in dk.iter().enumerate() {
                    let via = dik + dkj;
                    if via < row[j] {
                        row[j] = via;
                    }
                }
            }
        }
        let y: Vec<usize> = s.y.iter().map(|p| p.index()).collect();
        let dy = (0..n).map(|v| y.iter().map(|&q| d[v][q]).fold(f64::INFINITY, f64::min)).collect();
        Oracle { n, adj, d, dy, y, resolution: s.graph.resolution(), max_edge }
    }

    pub fn projection(&self, x: usize, eps: f64) -> Vec<usize> {
        let bound = self.dy[x] + eps;
        self.y.iter().copied().filter(|&q| self.d[x][q] <= bound + tol(bound)).collect()
    }

    pub fn diam(&self, set: &[usize]) -> f64 {
        let mut best: f64 = 0.0;
        for &a in set {
            for &b in set {
                best = best.max(self.d[a][b]);
            }
        }
        best
    }

    /// max over y in the ρ₁ ball of diam(π(x) ∪ π(y)); `None` when the radius is negative.
    pub fn base_value(&self, x: usize, eps: f64, rho1: &FunctionSpec) -> Option<f64> {
        let radius = rho1.eval(self.dy[x]);
        if radius < 0.0 {
            return None;
        }
        let px = self.projection(x, eps);
        let mut best: f64 = 0.0;
        for z in 0..self.n {
            if self.d[x][z] <= radius + tol(radius) {
                let mut u = px.clone();
                u.extend(self.projection(z, eps));
                best = best.max(self.diam(&u));
            }
        }
        Some(best)
    }

    /// (r, value) pairs of the exhaustive contraction envelope.
    pub fn contraction(&self, eps: f64, rho1: &FunctionSpec, r_max: f64) -> Vec<(f64, f64)> {
        let mut base: Vec<usize> = (0..self.n).filter(|&v| self.dy[v] <= r_max + tol(r_max)).collect();
        base.sort_by(|&a, &b| self.dy[a].total_cmp(&self.dy[b]).then(a.cmp(&b)));
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut running: Option<f64> = None;
        for (k, &x) in base.iter().enumerate() {
            if let Some(v) = self.base_value(x, eps, rho1) {
                running = Some(running.map_or(v, |r| r.max(v)));
            }
            let last = k + 1 == base.len() || self.dy[base[k + 1]] > self.dy[x] + tol(self.dy[x]);
            if let (true, Some(v)) = (last, running) {
                out.push((self.dy[x], v));
            }
        }
        out
    }

    /// Quadratic Dijkstra restricted to `allowed` vertices.
    pub fn filtered_distance(&self, a: usize, b: usize, allowed: &dyn Fn(usize) -> bool) -> Option<f64> {
        if !allowed(a) || !allowed(b) {
            return None;
        }
        let mut dist = vec![f64::INFINITY; self.n];
        let mut done = vec![false; self.n];
        dist[a] = 0.0;
        loop {
            let mut v = usize::MAX;
            for u in 0..self.n {
                if !done[u] && dist[u] < f64::INFINITY && (v == usize::MAX || dist[u] < dist[v]) {
                    v = u;
                }
            }
            if v == usize::MAX {
                return None;
            }
            if v == b {
                return Some(dist[b]);
            }
            done[v] = true;
            for &(u, w) in &self.adj[v] {
                if allowed(u) && dist[v] + w < dist[u] {
                    dist[u] = dist[v] + w;
                }
            }
        }
    }

    /// Tie-broken geodesic: searched from the smaller id, smallest-id tight
    /// predecessor at every step.
    pub fn geodesic(&self, x: usize, y: usize) -> Vec<usize> {
        let (s, t) = (x.min(y), x.max(y));
        let mut path = vec![t];
        let mut v = t;
        while v != s {
            let dv = self.d[s][v];
            let u = self.adj[v]
                .iter()
                .filter(|&&(u, w)| self.d[s][u] < dv && (self.d[s][u] + w - dv).abs() <= tol(dv))
                .map(|&(u, _)| u)
                .min()
                .expect("tight predecessor");
            path.push(u);
            v = u;
        }
        if x == s {
            path.reverse();
        }
        path
    }

    /// Largest realized level B admitting a budgeted path that avoids the
    /// B-neighbourhood of Y outside the two endpoint B-balls.
    pub fn detour(&self, y1: usize, y2: usize, l: f64) -> f64 {
        if y1 == y2 {
            return 0.0;
        }
        let dist = self.d[y1][y2];
        let budget = l * dist;
        let escape = (0..self.n)
            .filter(|&z| self.d[y1][z] + self.d[z][y2] <= budget + tol(budget))
            .map(|z| self.dy[z])
            .fold(0.0, f64::max);
        let cap = (dist / 2.0 - self.resolution).min(0.5 * (dist - self.max_edge) - tol(dist));
        let mut levels: Vec<f64> = self.dy.iter().copied().filter(|&b| b > 0.0).collect();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        for b in levels {
            if b >= escape || b > cap + tol(cap) {
                continue;
            }
            let bt = b + tol(b);
            let free = |v: usize| self.dy[v] > bt || self.d[y1][v] <= bt || self.d[y2][v] <= bt;
            if let Some(len) = self.filtered_distance(y1, y2, &free) {
                if len <= budget + tol(budget) {
                    return b;
                }
            }
        }
        0.0
    }

    /// Exhaustive ε-projection diameters of geodesic segments staying at least C from Y,
    /// as (x, y, diam, max endpoint distance, max interior distance, min distance).
    pub fn geodesic_images(&self, eps: f64, c: f64) -> Vec<(usize, usize, f64, f64, f64, f64)> {
        let eligible: Vec<usize> = (0..self.n).filter(|&v| self.dy[v] > 0.0 && self.dy[v] >= c - tol(c)).collect();
        let mut out = Vec::new();
        for (k, &x) in eligible.iter().enumerate() {
            for &y in &eligible[k + 1..] {
                let path = self.geodesic(x, y);
                let min = path.iter().map(|&v| self.dy[v]).fold(f64::INFINITY, f64::min);
                if min < c - tol(c) {
                    continue;
                }
                let max = path.iter().map(|&v| self.dy[v]).fold(0.0, f64::max);
                let union: Vec<usize> = path.iter().flat_map(|&v| self.projection(v, eps)).collect();
                out.push((x, y, self.diam(&union), self.dy[x].max(self.dy[y]), max, min));
            }
        }
        out
    }

    /// Exhaustive Δ̂(r) over every vertex position of γ: the lexicographically
    /// smallest (value, s), `None` when all centres give ∞.
    pub fn divergence(&self, s: &MarkedSpace, dp: &DivergenceParams, r: f64) -> Option<(f64, f64)> {
        let gamma = s.gamma().unwrap();
        let cum = gamma.cumulative_length();
        let pts: Vec<usize> = gamma.points().iter().map(|p| p.index()).collect();
        let len = gamma.length();
        let snap = |t: f64| {
            let mut best = 0;
            for k in 1..cum.len() {
                if (cum[k] - t).abs() < (cum[best] - t).abs() {
                    best = k;
                }
            }
            pts[best]
        };
        let radius = dp.forbidden_radius(r);
        let mut best: Option<(f64, f64)> = None;
        for &t in cum {
            if t - r < -tol(len) || t + r > len + tol(len) {
                continue;
            }
            let (a, b, c) = (snap(t - r), snap(t + r), snap(t));
            let free = |v: usize| radius <= 0.0 || self.d[c][v] > radius + tol(radius);
            if let Some(v) = self.filtered_distance(a, b, &free) {
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, t));
                }
            }
        }
        best
    }
}

pub fn pid(v: usize) -> PointId {
    PointId(v as u32)
}

/// Every generated family at a size the oracle can afford (at most 500
/// vertices). The flag marks integer edge weights, where comparisons are exact.
pub fn small_spaces() -> Vec<(&'static str, MarkedSpace, bool)> {
    use geocontract::spaces::{cycle_arc, divergence_necklace, grid_l1, halfplane, log_space, necklace, tree};
    vec![
        ("cycle_arc(40,12)", cycle_arc(40, 12).unwrap(), true),
        ("tree(2,7)", tree(2, 7).unwrap(), true),
        ("grid(24,12)", grid_l1(24, 12).unwrap(), true),
        ("necklace(4..12)", necklace(&FunctionSpec::ceil_sqrt(), 4, 12).unwrap(), true),
        ("divergence_necklace(1..6)", divergence_necklace(&FunctionSpec::power(2.0), 1, 6).unwrap(), true),
        ("log_space(6)", log_space(&FunctionSpec::linear(0.5), 2.0, 6).unwrap(), true),
        ("halfplane(12)", halfplane(12.0, 1.0).unwrap(), false),
    ]
}

// Comparisons of the analyzers against the oracle. Each returns the first
// disagreement found.

use geocontract::divergence::{divergence_profile, SGrid};
use geocontract::morse::{detour_bound, verify_detour};
use geocontract::projection::{contraction_profile, geodesic_image_profile, project, ProjectionParams};
use geocontract::sampling::SamplingPlan;

pub fn same(a: f64, b: f64, exact: bool) -> bool {
    if exact {
        a == b
    } else {
        a == b || (a - b).abs() <= tol(a.abs().max(b.abs()))
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn compare_distances(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    for x in 0..o.n {
        let row = s.graph.distances_from(pid(x));
        for y in 0..o.n {
            ensure!(same(row[y], o.d[x][y], exact), "{name}: d({x},{y}) {} vs {}", row[y], o.d[x][y]);
        }
        ensure!(same(s.dist_to_y()[x], o.dy[x], exact), "{name}: d({x}, Y)");
    }
    for eps in [0.0, 1.0, 2.0] {
        let p = ProjectionParams::new(eps).unwrap();
        for x in 0..o.n {
            let got: Vec<usize> = project(s, pid(x), p).unwrap().iter().map(|q| q.index()).collect();
            ensure!(got == o.projection(x, eps), "{name}: pi^{eps}({x})");
        }
    }
    Ok(())
}

pub fn compare_contraction(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    let vr = s.valid_radius();
    for eps in [0.0, 1.0] {
        for rho1 in [FunctionSpec::Identity, FunctionSpec::linear(0.5)] {
            let p = ProjectionParams::new(eps).unwrap();
            let prof = contraction_profile(s, p, &rho1, vr, SamplingPlan::Exhaustive).unwrap();
            let want = o.contraction(eps, &rho1, vr);
            if exact {
                let got: Vec<(f64, f64)> = prof.samples.iter().map(|q| (q.r, q.value.unwrap())).collect();
                ensure!(got == want, "{name} eps {eps}: contraction profiles differ");
            } else {
                // Radii agree only to rounding, so compare the two step functions.
                let step = |r: f64| want.iter().filter(|w| w.0 <= r + tol(r)).map(|w| w.1).fold(0.0, f64::max);
                for q in &prof.samples {
                    ensure!(same(q.value.unwrap(), step(q.r), false), "{name} eps {eps} r {}", q.r);
                }
                for &(r, v) in &want {
                    ensure!(same(prof.step_value(r + tol(r)).unwrap(), v, false), "{name} eps {eps} r {r}");
                }
            }
            for got in &prof.samples {
                let (r, gv) = (got.r, got.value.unwrap());
                let (x, z, a, b) = (got.witness[0], got.witness[1], got.witness[2], got.witness[3]);
                ensure!(o.d[x.index()][z.index()] <= rho1.eval(o.dy[x.index()]) + tol(r), "{name}: witness ball at r {r}");
                let mut u = o.projection(x.index(), eps);
                u.extend(o.projection(z.index(), eps));
                ensure!(u.contains(&a.index()) && u.contains(&b.index()), "{name}: witness pair at r {r}");
                ensure!(same(o.d[a.index()][b.index()], gv, exact), "{name}: witness value at r {r}");
            }
        }
    }
    Ok(())
}

pub fn compare_geodesics(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    let step = (o.n / 40).max(1);
    for x in (0..o.n).step_by(step) {
        for y in (0..o.n).step_by(step) {
            let got: Vec<usize> = s.graph.geodesic(pid(x), pid(y)).points().iter().map(|p| p.index()).collect();
            ensure!(got == o.geodesic(x, y), "{name}: geodesic {x} -> {y}");
        }
    }
    let cs = if exact { vec![1.0, 2.0] } else { vec![o.dy.iter().copied().fold(0.0, f64::max) / 2.0] };
    for c in cs {
        let gi = geodesic_image_profile(s, ProjectionParams::default(), c, SamplingPlan::Exhaustive).unwrap();
        let mut got: Vec<_> = gi
            .records
            .iter()
            .map(|r| (r.x.index(), r.y.index(), r.diam_proj, r.max_endpoint_dist, r.max_interior_dist, r.min_dist))
            .collect();
        got.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let want = o.geodesic_images(0.0, c);
        ensure!(got.len() == want.len(), "{name}: segment count at C = {c}");
        for (g, w) in got.iter().zip(&want) {
            let ok = (g.0, g.1) == (w.0, w.1)
                && same(g.2, w.2, exact)
                && same(g.3, w.3, exact)
                && same(g.4, w.4, exact)
                && same(g.5, w.5, exact);
            ensure!(ok, "{name}: record {g:?} vs {w:?}");
        }
    }
    Ok(())
}

pub fn compare_divergence(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    let Ok(gamma) = s.gamma() else { return Ok(()) };
    let params = [DivergenceParams::new(1.0, 0.0, 1.0, 1.0).unwrap(), DivergenceParams::geodesic_default()];
    let vr = s.valid_radius().min(gamma.length() / 2.0);
    let mut rs: Vec<f64> = gamma.cumulative_length().iter().copied().filter(|&r| r > 0.0 && r <= vr).collect();
    rs.truncate(12);
    for dp in &params {
        let prof = divergence_profile(s, dp, &rs, &SGrid::EveryVertex).unwrap();
        for sample in &prof.samples {
            let want = o.divergence(s, dp, sample.r);
            let ok = match (sample.value, sample.s, want) {
                (None, None, None) => true,
                (Some(v), Some(t), Some((wv, wt))) => same(v, wv, exact) && same(t, wt, exact),
                _ => false,
            };
            ensure!(ok, "{name} r {}: ({:?}, {:?}) vs {want:?}", sample.r, sample.value, sample.s);
        }
    }
    Ok(())
}

pub fn compare_detours(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    let ys: Vec<usize> = o.y.iter().copied().step_by((o.y.len() / 12).max(1)).collect();
    for &a in &ys {
        for &b in &ys {
            for l in [1.0, 1.5, 2.0, 3.0] {
                let w = detour_bound(s, pid(a), pid(b), l).unwrap();
                let want = o.detour(a, b, l);
                ensure!(same(w.b, want, exact), "{name}: detour {a} -> {b} at L {l}: {} vs {want}", w.b);
                ensure!(verify_detour(s, &w), "{name}: witness {a} -> {b} at L {l}");
            }
        }
    }
    Ok(())
}

pub fn compare_morse(name: &str, s: &MarkedSpace, o: &Oracle, exact: bool) -> Result<(), String> {
    let plan = geocontract::morse::PairPlan { starts: 0, ..Default::default() };
    let m = geocontract::morse::morse_profile(s, &[1.5, 3.0], &plan).unwrap();
    for c in &m.curves {
        let mut best: f64 = 0.0;
        for (sep, b, w) in &c.points {
            let (a, z) = (w.endpoints.0.index(), w.endpoints.1.index());
            let want = o.detour(a, z, c.l);
            ensure!(same(*b, want, exact), "{name}: morse L {} separation {sep}: {b} vs {want}", c.l);
            best = best.max(want);
        }
        ensure!(same(c.mu_hat, best, exact), "{name}: mu_hat at L {}", c.l);
    }
    Ok(())
}

/// Every comparison on one space.
pub fn compare_all(name: &str, s: &MarkedSpace, exact: bool) -> Result<(), String> {
    let o = Oracle::new(s);
    compare_distances(name, s, &o, exact)?;
    compare_contraction(name, s, &o, exact)?;
    compare_geodesics(name, s, &o, exact)?;
    compare_divergence(name, s, &o, exact)?;
    compare_morse(name, s, &o, exact)?;
    compare_detours(name, s, &o, exact)
}
