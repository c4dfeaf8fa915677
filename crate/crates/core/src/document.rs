//! The JSON space document: a lossless, versioned serialization of a marked space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Length, MetricGraph, ParamPath, PointId, PointSet};
use crate::spaces::{MarkedSpace, SpaceMeta};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDocument {
    pub format_version: u32,
    pub resolution: Length,
    pub vertex_count: usize,
    pub edges: Vec<(u32, u32, Length)>,
    /// "Y" (required) and "gamma" (ordered, optional).
    pub marks: BTreeMap<String, Vec<u32>>,
    pub landmarks: BTreeMap<String, u32>,
    pub meta: SpaceMeta,
}

impl SpaceDocument {
    pub fn from_space(s: &MarkedSpace) -> Self {
        let mut marks = BTreeMap::new();
        marks.insert("Y".to_string(), s.y.iter().map(|p| p.0).collect());
        if let Some(g) = &s.gamma {
            marks.insert("gamma".to_string(), g.points().iter().map(|p| p.0).collect());
        }
        SpaceDocument {
            format_version: FORMAT_VERSION,
            resolution: s.graph.resolution(),
            vertex_count: s.graph.vertex_count(),
            edges: s.graph.edges().iter().map(|&(u, v, w)| (u.0, v.0, w)).collect(),
            marks,
            landmarks: s.landmarks.iter().map(|(k, v)| (k.clone(), v.0)).collect(),
            meta: s.meta.clone(),
        }
    }

    pub fn to_space(&self) -> Result<MarkedSpace> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidDocument(format!("unsupported format_version {}", self.format_version)));
        }
        if let Some(k) = self.marks.keys().find(|k| *k != "Y" && *k != "gamma") {
            return Err(Error::InvalidDocument(format!("unknown mark {k}")));
        }
        let edges = self.edges.iter().map(|&(u, v, w)| (PointId(u), PointId(v), w)).collect();
        let graph = MetricGraph::new(self.vertex_count, edges, self.resolution)?;
        let y_ids = self.marks.get("Y").ok_or_else(|| Error::InvalidDocument("missing mark Y".into()))?;
        let y = PointSet::new(y_ids.iter().map(|&v| PointId(v)));
        if y.len() != y_ids.len() {
            return Err(Error::InvalidDocument("mark Y has repeated vertices".into()));
        }
        let gamma = match self.marks.get("gamma") {
            Some(ids) => {
                if ids.iter().any(|&v| v as usize >= self.vertex_count) {
                    return Err(Error::InvalidDocument("gamma vertex out of range".into()));
                }
                Some(ParamPath::from_points(&graph, ids.iter().map(|&v| PointId(v)).collect())?)
            }
            None => None,
        };
        let landmarks = self.landmarks.iter().map(|(k, &v)| (k.clone(), PointId(v))).collect();
        MarkedSpace::new(graph, y, gamma, landmarks, self.meta.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))
    }
}

pub fn save_space(s: &MarkedSpace) -> String {
    SpaceDocument::from_space(s).to_json()
}

pub fn load_space(text: &str) -> Result<MarkedSpace> {
    SpaceDocument::parse(text)?.to_space()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionSpec;
    use crate::spaces::{divergence_necklace, grid_l1};

    #[test]
    fn round_trip() {
        for s in [grid_l1(6, 4).unwrap(), divergence_necklace(&FunctionSpec::power(2.0), 1, 5).unwrap()] {
            let text = save_space(&s);
            let back = load_space(&text).unwrap();
            assert_eq!(save_space(&back), text);
            assert_eq!(back.gamma, s.gamma);
            assert_eq!(back.landmarks, s.landmarks);
        }
    }

    #[test]
    fn strictness() {
        let text = save_space(&grid_l1(4, 4).unwrap());
        let extra = text.replacen('{', "{\n  \"surprise\": 1,", 1);
        assert!(matches!(load_space(&extra), Err(Error::InvalidDocument(_))));
        let v2 = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(load_space(&v2).is_err());
        let mut doc = SpaceDocument::parse(&text).unwrap();
        doc.marks.get_mut("gamma").unwrap().pop();
        assert!(doc.to_space().is_err());
    }
}
