use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topo::{DoorState, TopoMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoorSetting {
    AllOpen,
    #[default]
    AsMapped,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("world file is not valid JSON: {0}")]
    Json(String),
    #[error("world schema: {0}")]
    Schema(String),
    #[error("world references unknown map node {0}")]
    UnknownNode(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "of", rename_all = "snake_case")]
pub enum Location {
    AtNode(String),
    Held(String),
    In(String),
    On(String),
    /// Held under `target` by `hand`.
    Under { target: String, hand: String },
    Hung(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Object {
    pub id: String,
    pub tags: BTreeSet<String>,
    pub flags: BTreeSet<String>,
    pub location: Location,
    /// Furniture and appliances cannot be picked.
    pub fixed: bool,
}

impl Object {
    pub fn flag(&self, f: &str) -> bool {
        self.flags.contains(f)
    }

    pub fn set(&mut self, f: &str, v: bool) {
        if v {
            self.flags.insert(f.to_string());
        } else {
            self.flags.remove(f);
        }
    }

    /// True if any tag, or the last word of a tag, is in `set`.
    pub fn is_a(&self, set: &[&str]) -> bool {
        self.tags.iter().any(|t| set.contains(&t.as_str()) || t.rsplit('_').next().is_some_and(|h| set.contains(&h)))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    id: String,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    flags: Vec<String>,
    #[serde(default)]
    on: Option<String>,
    #[serde(default, rename = "in")]
    inside: Option<String>,
    #[serde(default)]
    fixed: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorld {
    #[serde(default = "default_robot")]
    robot: String,
    start: String,
    nodes: BTreeMap<String, Vec<RawObject>>,
    #[serde(default)]
    links: Vec<(String, String)>,
}

fn default_robot() -> String {
    "robot".into()
}

/// Complete emulator state. Transitions never mutate in place; `step`
/// returns a new value.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub robot: String,
    pub robot_at: String,
    pub hands: BTreeMap<String, Option<String>>,
    /// Keyed by the endpoint pair in name order.
    pub doors: BTreeMap<(String, String), DoorState>,
    pub objects: BTreeMap<String, Object>,
    /// Window and curtain pairs.
    pub links: BTreeSet<(String, String)>,
    pub(crate) map: Arc<TopoMap>,
}

pub(crate) fn door_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn load_world(text: &str, map: Arc<TopoMap>, doors: DoorSetting, hands: &[String]) -> Result<WorldState, WorldError> {
    let raw: RawWorld = serde_json::from_str(text).map_err(|e| WorldError::Json(e.to_string()))?;
    if map.index_of(&raw.start).is_none() {
        return Err(WorldError::UnknownNode(raw.start));
    }
    if hands.is_empty() {
        return Err(WorldError::Schema("robot needs at least one hand".into()));
    }
    let mut objects = BTreeMap::new();
    let mut home: BTreeMap<String, String> = BTreeMap::new();
    for (node, list) in &raw.nodes {
        if map.index_of(node).is_none() {
            return Err(WorldError::UnknownNode(node.clone()));
        }
        for r in list {
            let id = r.id.to_lowercase();
            if id.is_empty() || map.index_of(&id).is_some() {
                return Err(WorldError::Schema(format!("object id {:?} is empty or a node name", r.id)));
            }
            let location = match (&r.on, &r.inside) {
                (Some(_), Some(_)) => return Err(WorldError::Schema(format!("{id} is both on and in something"))),
                (Some(s), None) => Location::On(s.to_lowercase()),
                (None, Some(c)) => Location::In(c.to_lowercase()),
                (None, None) => Location::AtNode(node.clone()),
            };
            let o = Object {
                id: id.clone(),
                tags: r.tags.iter().map(|t| t.to_lowercase()).collect(),
                flags: r.flags.iter().map(|t| t.to_lowercase()).collect(),
                location,
                fixed: r.fixed,
            };
            if objects.insert(id.clone(), o).is_some() {
                return Err(WorldError::Schema(format!("duplicate object {id}")));
            }
            home.insert(id, node.clone());
        }
    }
    for (id, o) in &objects {
        if let Location::On(t) | Location::In(t) = &o.location {
            match home.get(t) {
                None => return Err(WorldError::Schema(format!("{id} references missing object {t}"))),
                Some(n) if *n != home[id] => {
                    return Err(WorldError::Schema(format!("{id} is listed at {} but its support {t} is at {n}", home[id])))
                }
                _ => {}
            }
        }
    }
    // Containment must bottom out at a node.
    for id in objects.keys() {
        let mut cur = id.as_str();
        for _ in 0..=objects.len() {
            match &objects[cur].location {
                Location::On(t) | Location::In(t) => cur = t,
                _ => break,
            }
            if cur == id {
                return Err(WorldError::Schema(format!("{id} is inside itself")));
            }
        }
    }
    let mut links = BTreeSet::new();
    for (a, b) in &raw.links {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        if !objects.contains_key(&a) || !objects.contains_key(&b) {
            return Err(WorldError::Schema(format!("link {a} -- {b} references a missing object")));
        }
        links.insert((a, b));
    }
    let doors = map
        .doors()
        .map(|e| {
            let state = if doors == DoorSetting::AllOpen { DoorState::Open } else { e.door };
            (door_key(&e.a, &e.b), state)
        })
        .collect();
    Ok(WorldState {
        robot: raw.robot.to_lowercase(),
        robot_at: raw.start,
        hands: hands.iter().map(|h| (h.to_lowercase(), None)).collect(),
        doors,
        objects,
        links,
        map,
    })
}

impl WorldState {
    pub fn map(&self) -> &TopoMap {
        &self.map
    }

    pub fn object(&self, id: &str) -> Option<&Object> {
        self.objects.get(id)
    }

    /// Map node an object is at, following supports and containers.
    pub fn node_of(&self, id: &str) -> Option<&str> {
        let mut cur = self.objects.get(id)?;
        for _ in 0..=self.objects.len() {
            match &cur.location {
                Location::AtNode(n) => return Some(n),
                Location::Held(_) | Location::Under { .. } => return Some(&self.robot_at),
                Location::In(t) | Location::On(t) | Location::Hung(t) => cur = self.objects.get(t)?,
            }
        }
        None
    }

    /// Objects currently at `node`, including nested ones, by id.
    pub fn objects_at(&self, node: &str) -> Vec<&str> {
        self.objects.keys().filter(|id| self.node_of(id) == Some(node)).map(String::as_str).collect()
    }

    /// Object held by `hand`, whether or not it is under something.
    pub fn held_by(&self, hand: &str) -> Option<&str> {
        self.hands.get(hand)?.as_deref()
    }

    pub fn door(&self, a: &str, b: &str) -> Option<DoorState> {
        self.doors.get(&door_key(a, b)).copied()
    }

    pub fn closed_doors(&self) -> usize {
        self.doors.values().filter(|d| **d == DoorState::Closed).count()
    }

    /// Checks the structural invariants: each held object is in exactly one
    /// hand and every support exists.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut held = BTreeSet::new();
        for (h, o) in &self.hands {
            if let Some(o) = o {
                let ok = match self.objects.get(o).map(|x| &x.location) {
                    Some(Location::Held(x)) => x == h,
                    Some(Location::Under { hand, .. }) => hand == h,
                    _ => false,
                };
                if !ok || !held.insert(o.clone()) {
                    return Err(format!("hand {h} and object {o} disagree"));
                }
            }
        }
        for o in self.objects.values() {
            match &o.location {
                Location::Held(h) | Location::Under { hand: h, .. } => {
                    if self.hands.get(h).and_then(|x| x.as_ref()) != Some(&o.id) {
                        return Err(format!("{} claims to be in {h}", o.id));
                    }
                }
                Location::In(t) | Location::On(t) | Location::Hung(t) => {
                    if !self.objects.contains_key(t) {
                        return Err(format!("{} rests on missing {t}", o.id));
                    }
                }
                Location::AtNode(_) => {}
            }
            if self.node_of(&o.id).is_none() {
                return Err(format!("{} has no node (cycle?)", o.id));
            }
        }
        Ok(())
    }
}
