//! Base-point sampling plans and radius grids.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Length, PointId};
use crate::search::tol;
use crate::spaces::MarkedSpace;

pub const AUTO_EXHAUSTIVE_LIMIT: usize = 5_000;
pub const DEFAULT_SEED: u64 = 0x5EED_CAFE;
pub const DEFAULT_PER_BAND: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingPlan {
    /// Exhaustive up to `AUTO_EXHAUSTIVE_LIMIT` vertices, stratified beyond.
    Auto,
    Exhaustive,
    /// Per distance-to-Y band: the nearest and farthest members plus
    /// `per_band` seeded draws. Landmarks are always included.
    Stratified { seed: u64, per_band: usize },
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan::Auto
    }
}

impl SamplingPlan {
    pub fn resolve(self, vertex_count: usize) -> SamplingPlan {
        self.resolve_with_limit(vertex_count, AUTO_EXHAUSTIVE_LIMIT)
    }

    pub fn resolve_with_limit(self, vertex_count: usize, limit: usize) -> SamplingPlan {
        match self {
            SamplingPlan::Auto if vertex_count <= limit => SamplingPlan::Exhaustive,
            SamplingPlan::Auto => SamplingPlan::Stratified { seed: DEFAULT_SEED, per_band: DEFAULT_PER_BAND },
            other => other,
        }
    }
}

/// Geometric band index of a distance at the given resolution.
pub fn band_of(d: Length, resolution: Length) -> usize {
    (4.0 * (1.0 + d / resolution).log2()).floor().max(0.0) as usize
}

/// Chooses base points among the vertices `v` with `keep(v)`.
pub fn select_points<F: Fn(PointId) -> bool>(space: &MarkedSpace, plan: SamplingPlan, keep: F) -> Vec<PointId> {
    let n = space.graph.vertex_count();
    let dy = space.dist_to_y();
    let candidates: Vec<PointId> = (0..n).map(PointId::from).filter(|&v| keep(v)).collect();
    match plan.resolve(n) {
        SamplingPlan::Exhaustive | SamplingPlan::Auto => candidates,
        SamplingPlan::Stratified { seed, per_band } => {
            let res = space.graph.resolution();
            let mut bands: Vec<Vec<PointId>> = Vec::new();
            for &v in &candidates {
                let b = band_of(dy[v.index()], res);
                if bands.len() <= b {
                    bands.resize(b + 1, Vec::new());
                }
                bands[b].push(v);
            }
            let mut out: Vec<PointId> = space.landmarks.values().copied().filter(|&v| keep(v)).collect();
            for (k, members) in bands.iter().enumerate() {
                if members.is_empty() {
                    continue;
                }
                let by_d = |a: &&PointId, b: &&PointId| dy[a.index()].total_cmp(&dy[b.index()]).then(a.cmp(b));
                out.push(*members.iter().min_by(by_d).unwrap());
                out.push(*members.iter().max_by(|a, b| by_d(a, b).then(b.cmp(a))).unwrap());
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let take = per_band.min(members.len());
                for idx in sample(&mut rng, members.len(), take).into_iter() {
                    out.push(members[idx]);
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

/// Base points with d(v, Y) ≤ r_max.
pub fn select_base_points(space: &MarkedSpace, r_max: Length, plan: SamplingPlan) -> Vec<PointId> {
    let dy = space.dist_to_y();
    select_points(space, plan, |v| dy[v.index()] <= r_max + tol(r_max))
}

/// `lo · 2^(k/per_octave)` for all k with value ≤ hi.
pub fn geometric_grid(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0) || hi < lo {
        return out;
    }
    let mut k = 0;
    loop {
        let r = lo * 2f64.powf(k as f64 / per_octave as f64);
        if r > hi * (1.0 + 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// Geometric grid rounded to multiples of `step` and deduplicated, always
/// containing `hi` rounded down to the step.
pub fn rounded_geometric_grid(lo: f64, hi: f64, per_octave: usize, step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = geometric_grid(lo, hi, per_octave)
        .into_iter()
        .map(|r| ((r / step).round() * step).max(step))
        .filter(|&r| r <= hi + tol(hi))
        .collect();
    let top = (hi / step + 1e-9).floor() * step;
    if top >= lo {
        out.push(top);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = geometric_grid(1.0, 16.0, 1);
        assert_eq!(g, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        let r = rounded_geometric_grid(1.0, 50.0, 4, 1.0);
        assert_eq!(r[0], 1.0);
        assert_eq!(*r.last().unwrap(), 50.0);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bands_are_geometric() {
        assert_eq!(band_of(0.0, 1.0), 0);
        assert_eq!(band_of(1.0, 1.0), 4);
        assert_eq!(band_of(3.0, 1.0), 8);
    }

    #[test]
    fn auto_resolution() {
        assert_eq!(SamplingPlan::Auto.resolve(10), SamplingPlan::Exhaustive);
        assert!(matches!(SamplingPlan::Auto.resolve(10_000), SamplingPlan::Stratified { .. }));
    }
}
