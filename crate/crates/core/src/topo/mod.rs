//! Topological maps: pose, room and asset nodes joined by weighted edges,
//! some of which are doors.

mod compress;
mod paths;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compress::{compress, expand_edge, raw_submap, round_cost, zones, CompressOptions, CompressedMap, DoorEdge, Shortcut};
pub use paths::{shortest_path, shortest_paths, shortest_paths_with, DoorMode, ShortestPaths};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map is not valid JSON: {0}")]
    Json(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("edge {a} -- {b} references an unknown node")]
    DanglingEdge { a: String, b: String },
    #[error("invalid {field}: {msg}")]
    Schema { field: String, msg: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {0} cannot be reached from the robot even with every door open")]
    Unreachable(String),
    #[error("no compressed edge between {a} and {b}")]
    NoSuchEdge { a: String, b: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Pose,
    Room,
    Asset,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    #[default]
    None,
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapNode {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapEdge {
    pub a: String,
    pub b: String,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "is_no_door")]
    pub door: DoorState,
}

fn is_no_door(d: &DoorState) -> bool {
    *d == DoorState::None
}

#[derive(Deserialize, Serialize)]
struct RawMap {
    nodes: Vec<MapNode>,
    edges: Vec<MapEdge>,
}

/// Validated, indexed map. Edges are undirected.
#[derive(Clone, Debug)]
pub struct TopoMap {
    nodes: Vec<MapNode>,
    edges: Vec<MapEdge>,
    index: HashMap<String, usize>,
    /// Per node: (neighbour, edge index).
    adj: Vec<Vec<(usize, usize)>>,
}

pub fn load_map(bytes: &[u8]) -> Result<TopoMap, MapError> {
    let raw: RawMap = serde_json::from_slice(bytes).map_err(|e| MapError::Json(e.to_string()))?;
    TopoMap::new(raw.nodes, raw.edges)
}

impl TopoMap {
    pub fn new(nodes: Vec<MapNode>, edges: Vec<MapEdge>) -> Result<Self, MapError> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.name.is_empty() {
                return Err(MapError::Schema { field: "node.name".into(), msg: "empty name".into() });
            }
            if index.insert(n.name.clone(), i).is_some() {
                return Err(MapError::DuplicateNode(n.name.clone()));
            }
            if n.kind != NodeKind::Asset && !n.images.is_empty() {
                return Err(MapError::Schema { field: "node.images".into(), msg: format!("{} is not an asset node", n.name) });
            }
            if n.kind != NodeKind::Asset && n.caption.is_some() {
                return Err(MapError::Schema { field: "node.caption".into(), msg: format!("{} is not an asset node", n.name) });
            }
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut pairs = HashSet::new();
        for (k, e) in edges.iter().enumerate() {
            let (Some(&a), Some(&b)) = (index.get(&e.a), index.get(&e.b)) else {
                return Err(MapError::DanglingEdge { a: e.a.clone(), b: e.b.clone() });
            };
            if a == b {
                return Err(MapError::Schema { field: "edge".into(), msg: format!("self loop at {}", e.a) });
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(MapError::Schema { field: "edge.cost".into(), msg: format!("{} -- {}: {}", e.a, e.b, e.cost) });
            }
            if !pairs.insert((a.min(b), a.max(b))) {
                return Err(MapError::Schema { field: "edge".into(), msg: format!("duplicate edge {} -- {}", e.a, e.b) });
            }
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        Ok(TopoMap { nodes, edges, index, adj })
    }

    pub fn to_json(&self) -> String {
        let raw = RawMap { nodes: self.nodes.clone(), edges: self.edges.clone() };
        serde_json::to_string_pretty(&raw).expect("map serializes")
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[MapEdge] {
        &self.edges
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Option<&MapNode> {
        self.index_of(name).map(|i| &self.nodes[i])
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn edge_between(&self, a: &str, b: &str) -> Option<&MapEdge> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        self.adj[ia].iter().find(|(n, _)| *n == ib).map(|&(_, k)| &self.edges[k])
    }

    pub fn doors(&self) -> impl Iterator<Item = &MapEdge> {
        self.edges.iter().filter(|e| e.door != DoorState::None)
    }

    /// Same map with every door open.
    pub fn with_doors_open(&self) -> TopoMap {
        let mut m = self.clone();
        for e in &mut m.edges {
            if e.door == DoorState::Closed {
                e.door = DoorState::Open;
            }
        }
        m
    }

    pub fn require(&self, name: &str) -> Result<usize, MapError> {
        self.index_of(name).ok_or_else(|| MapError::UnknownNode(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_maps() {
        let dup = br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"a","kind":"room"}],"edges":[]}"#;
        assert_eq!(load_map(dup).unwrap_err(), MapError::DuplicateNode("a".into()));
        let dangling = br#"{"nodes":[{"name":"a","kind":"pose"}],"edges":[{"a":"a","b":"z","cost":1}]}"#;
        assert!(matches!(load_map(dangling), Err(MapError::DanglingEdge { .. })));
        let negative = br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"b","kind":"pose"}],"edges":[{"a":"a","b":"b","cost":-1}]}"#;
        assert!(matches!(load_map(negative), Err(MapError::Schema { .. })));
        let kind = br#"{"nodes":[{"name":"a","kind":"hall"}],"edges":[]}"#;
        assert!(matches!(load_map(kind), Err(MapError::Json(_))));
    }

    #[test]
    fn door_defaults_to_none() {
        let m = load_map(br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"b","kind":"room"}],"edges":[{"a":"a","b":"b","cost":2}]}"#).unwrap();
        assert_eq!(m.edge_between("b", "a").unwrap().door, DoorState::None);
        let again = load_map(m.to_json().as_bytes()).unwrap();
        assert_eq!(again.edges(), m.edges());
    }
}
