//! Reusable Dijkstra state. Labels are reset lazily through a touched list so
//! that repeated small searches on a large graph do not pay O(n) each time.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::MetricGraph;

pub const INF: f64 = f64::INFINITY;

/// Absolute tolerance used for tight-edge and closed-ball comparisons.
#[inline]
pub fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

#[derive(Clone, Copy, Debug)]
struct Item {
    d: f64,
    v: u32,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

#[derive(Default)]
pub struct Workspace {
    dist: Vec<f64>,
    touched: Vec<u32>,
    heap: BinaryHeap<Item>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, n: usize) {
        if self.dist.len() < n {
            self.dist.resize(n, INF);
        }
        for &t in &self.touched {
            self.dist[t as usize] = INF;
        }
        self.touched.clear();
        self.heap.clear();
    }

    #[inline]
    pub fn dist(&self, v: u32) -> f64 {
        self.dist.get(v as usize).copied().unwrap_or(INF)
    }

    /// Vertices that received a finite label in the last run (settled or not).
    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    #[inline]
    fn relax(&mut self, v: u32, d: f64) {
        let slot = &mut self.dist[v as usize];
        if d < *slot {
            if *slot == INF {
                self.touched.push(v);
            }
            *slot = d;
            self.heap.push(Item { d, v });
        }
    }

    /// Dijkstra from `sources` (vertex, initial offset). Vertices rejected by
    /// `allow` are never labelled. Vertices farther than `limit` are not
    /// settled. `visit` is called once per settled vertex in non-decreasing
    /// distance order (ties by id) and may stop the search by returning false.
    pub fn run<A, V>(&mut self, g: &MetricGraph, sources: &[(u32, f64)], limit: f64, allow: A, mut visit: V)
    where
        A: Fn(u32) -> bool,
        V: FnMut(u32, f64) -> bool,
    {
        self.prepare(g.vertex_count());
        let cap = limit + tol(limit);
        for &(s, d0) in sources {
            if allow(s) && d0 <= cap {
                self.relax(s, d0);
            }
        }
        while let Some(Item { d, v }) = self.heap.pop() {
            if d > self.dist[v as usize] {
                continue;
            }
            if d > cap {
                break;
            }
            if !visit(v, d) {
                break;
            }
            for (u, w) in g.neighbors(v) {
                let nd = d + w;
                if nd <= cap && allow(u) {
                    self.relax(u, nd);
                }
            }
        }
    }

    /// Walks tight edges back from `target` to the vertex labelled 0, picking
    /// the smallest-id predecessor at each step. Returns the vertices from
    /// `target` to the source.
    pub fn walk_back<A: Fn(u32) -> bool>(&self, g: &MetricGraph, target: u32, allow: A) -> Vec<u32> {
        let mut out = vec![target];
        let mut v = target;
        while self.dist(v) > 0.0 {
            let dv = self.dist(v);
            let mut best: Option<u32> = None;
            for (u, w) in g.neighbors(v) {
                if !allow(u) {
                    continue;
                }
                let du = self.dist(u);
                if du < dv && (du + w - dv).abs() <= tol(dv) && best.is_none_or(|b| u < b) {
                    best = Some(u);
                }
            }
            match best {
                Some(u) => {
                    out.push(u);
                    v = u;
                }
                None => break,
            }
        }
        out
    }
}

thread_local! {
    static POOL: RefCell<Vec<Workspace>> = const { RefCell::new(Vec::new()) };
}

/// Borrows a per-thread workspace; nested calls get distinct workspaces.
pub fn with_workspace<R>(f: impl FnOnce(&mut Workspace) -> R) -> R {
    let mut ws = POOL.with(|p| p.borrow_mut().pop()).unwrap_or_default();
    let r = f(&mut ws);
    POOL.with(|p| p.borrow_mut().push(ws));
    r
}
