//! Sampled monotone envelopes `r ↦ value` with witnesses.

use serde::{Deserialize, Serialize};

use crate::asymptotics::FunctionSamples;
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::graph::{Length, PointId};
use crate::sampling::{geometric_grid, SamplingPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Contraction,
    Divergence,
    Morse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileParams {
    Contraction { epsilon: f64, rho1: FunctionSpec, sampling: SamplingPlan },
    Divergence { l: f64, a: f64, lambda: f64, kappa: f64, s_grid: String },
    Morse { l: f64, separations: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: Length,
    /// `None` encodes ∞.
    pub value: Option<Length>,
    pub witness: Vec<PointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub samples: Vec<ProfileSample>,
    pub witness_names: Vec<String>,
    pub params: ProfileParams,
    pub valid_radius: Length,
    /// Radii over which the profile was computed.
    pub window: (Length, Length),
}

impl Profile {
    pub fn rho1(&self) -> Option<&FunctionSpec> {
        match &self.params {
            ProfileParams::Contraction { rho1, .. } => Some(rho1),
            _ => None,
        }
    }

    /// Step-function value: the last sample with `r_k ≤ r`; 0 before the first.
    pub fn step_value(&self, r: Length) -> Option<Length> {
        let k = self.samples.partition_point(|s| s.r <= r + 1e-12 * r.abs().max(1.0));
        if k == 0 {
            Some(0.0)
        } else {
            self.samples[k - 1].value
        }
    }

    pub fn max_value(&self) -> Option<Length> {
        let mut best: Option<Length> = Some(0.0);
        for s in &self.samples {
            best = match (best, s.value) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        best
    }

    pub fn values(&self) -> Vec<Option<Length>> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// The finite samples as-is (no resampling).
    pub fn finite_samples(&self) -> Result<FunctionSamples> {
        FunctionSamples::new(self.samples.iter().filter_map(|s| s.value.map(|v| (s.r, v))).collect())
    }

    /// Step-function values on a geometric grid from `lo` to the end of the
    /// window, for fitting. ∞ values are dropped.
    pub fn geometric_samples(&self, lo: Length, per_octave: usize) -> Result<FunctionSamples> {
        let hi = self.window.1;
        let pts: Vec<(f64, f64)> = geometric_grid(lo, hi, per_octave)
            .into_iter()
            .filter_map(|r| self.step_value(r).map(|v| (r, v)))
            .collect();
        if pts.is_empty() {
            return Err(Error::WindowViolation("no samples in window".into()));
        }
        FunctionSamples::new(pts)
    }
}
