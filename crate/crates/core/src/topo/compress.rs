use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::paths::{shortest_paths, DoorMode};
use super::{DoorState, MapError, TopoMap};

/// Zone-internal edge standing for a doors-as-walls shortest path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shortcut {
    pub a: String,
    pub b: String,
    pub cost: f64,
    /// Raw nodes from `a` to `b`, endpoints included.
    pub waypoints: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorEdge {
    pub a: String,
    pub b: String,
    pub cost: f64,
    pub state: DoorState,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompressedMap {
    pub nodes: Vec<String>,
    pub shortcuts: Vec<Shortcut>,
    pub doors: Vec<DoorEdge>,
    pub zone_of: BTreeMap<String, usize>,
}

impl CompressedMap {
    pub fn contains(&self, node: &str) -> bool {
        self.nodes.binary_search_by(|n| n.as_str().cmp(node)).is_ok()
    }

    pub fn shortcut(&self, a: &str, b: &str) -> Option<&Shortcut> {
        self.shortcuts.iter().find(|s| (s.a == a && s.b == b) || (s.a == b && s.b == a))
    }

    pub fn door(&self, a: &str, b: &str) -> Option<&DoorEdge> {
        self.doors.iter().find(|s| (s.a == a && s.b == b) || (s.a == b && s.b == a))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("compressed map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        serde_json::from_str(text).map_err(|e| MapError::Json(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompressOptions {
    /// Keep every door instead of only those on shortest zone paths.
    pub keep_all_doors: bool,
}

/// Nearest integer, halves rounded up.
pub fn round_cost(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Zone id per node: connected components once closed doors are removed.
/// Ids follow the alphabetical order of each zone's smallest member.
pub fn zones(m: &TopoMap) -> Vec<usize> {
    let n = m.nodes().len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m.name(a).cmp(m.name(b)));
    let mut zone = vec![usize::MAX; n];
    let mut next = 0;
    for start in order {
        if zone[start] != usize::MAX {
            continue;
        }
        zone[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, k) in m.neighbors(u) {
                if zone[v] == usize::MAX && m.edges()[k].door != DoorState::Closed {
                    zone[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    zone
}

fn zone_bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if d[v] == usize::MAX {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
        }
    }
    d
}

/// Keeps the key nodes, the robot node and the endpoints of retained doors.
/// Nodes sharing a zone are joined by shortcut edges; retained doors stay
/// as door edges.
pub fn compress(m: &TopoMap, keys: &[String], robot: &str, o: CompressOptions) -> Result<CompressedMap, MapError> {
    let r = m.require(robot)?;
    let key_idx = keys.iter().map(|k| m.require(k)).collect::<Result<Vec<_>, _>>()?;
    let reach = shortest_paths(m, r, DoorMode::DoorsOpen);
    for (&k, name) in key_idx.iter().zip(keys) {
        if !reach.dist[k].is_finite() {
            return Err(MapError::Unreachable(name.clone()));
        }
    }

    let zone = zones(m);
    let zone_count = zone.iter().max().map_or(0, |z| z + 1);
    let closed: Vec<usize> = (0..m.edges().len()).filter(|&k| m.edges()[k].door == DoorState::Closed).collect();
    let ends = |k: usize| {
        let e = &m.edges()[k];
        (m.index_of(&e.a).expect("validated"), m.index_of(&e.b).expect("validated"))
    };

    let retained: Vec<usize> = if o.keep_all_doors {
        closed.clone()
    } else {
        let mut zadj = vec![Vec::new(); zone_count];
        for &k in &closed {
            let (a, b) = ends(k);
            if zone[a] != zone[b] {
                zadj[zone[a]].push(zone[b]);
                zadj[zone[b]].push(zone[a]);
            }
        }
        let terminals: BTreeSet<usize> = key_idx.iter().chain([&r]).map(|&i| zone[i]).collect();
        let bfs: BTreeMap<usize, Vec<usize>> = terminals.iter().map(|&z| (z, zone_bfs(&zadj, z))).collect();
        closed
            .iter()
            .copied()
            .filter(|&k| {
                let (a, b) = ends(k);
                let (za, zb) = (zone[a], zone[b]);
                za != zb
                    && terminals.iter().any(|s| {
                        terminals.iter().filter(|t| *t > s).any(|t| {
                            let (ds, dt) = (&bfs[s], &bfs[t]);
                            let total = ds[*t];
                            let via = |x: usize, y: usize| {
                                ds[x] != usize::MAX && dt[y] != usize::MAX && ds[x] + 1 + dt[y] == total
                            };
                            total != usize::MAX && (via(za, zb) || via(zb, za))
                        })
                    })
            })
            .collect()
    };

    let mut selected: BTreeSet<usize> = key_idx.iter().copied().collect();
    selected.insert(r);
    for &k in &retained {
        let (a, b) = ends(k);
        selected.insert(a);
        selected.insert(b);
    }
    let mut selected: Vec<usize> = selected.into_iter().collect();
    selected.sort_by(|&a, &b| m.name(a).cmp(m.name(b)));

    let mut shortcuts = Vec::new();
    for (i, &a) in selected.iter().enumerate() {
        let partners: Vec<usize> = selected[i + 1..].iter().copied().filter(|&b| zone[b] == zone[a]).collect();
        if partners.is_empty() {
            continue;
        }
        let sp = shortest_paths(m, a, DoorMode::DoorsAsWalls);
        for b in partners {
            let path = sp.path_to(b).expect("same zone implies reachable");
            let cost = path.windows(2).map(|w| m.edge_between(m.name(w[0]), m.name(w[1])).expect("path edge").cost).sum();
            shortcuts.push(Shortcut {
                a: m.name(a).to_string(),
                b: m.name(b).to_string(),
                cost,
                waypoints: path.iter().map(|&i| m.name(i).to_string()).collect(),
            });
        }
    }

    let mut doors: Vec<DoorEdge> = retained
        .iter()
        .map(|&k| {
            let e = &m.edges()[k];
            let (a, b) = if e.a <= e.b { (&e.a, &e.b) } else { (&e.b, &e.a) };
            DoorEdge { a: a.clone(), b: b.clone(), cost: e.cost, state: e.door }
        })
        .collect();
    doors.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));

    Ok(CompressedMap {
        nodes: selected.iter().map(|&i| m.name(i).to_string()).collect(),
        zone_of: selected.iter().map(|&i| (m.name(i).to_string(), zone[i])).collect(),
        shortcuts,
        doors,
    })
}

/// Raw nodes traversed by a compressed edge, in the direction `a` to `b`.
pub fn expand_edge(c: &CompressedMap, a: &str, b: &str) -> Result<Vec<String>, MapError> {
    if let Some(s) = c.shortcut(a, b) {
        let mut w = s.waypoints.clone();
        if s.a != a {
            w.reverse();
        }
        return Ok(w);
    }
    if c.door(a, b).is_some() {
        return Ok(vec![a.to_string(), b.to_string()]);
    }
    Err(MapError::NoSuchEdge { a: a.to_string(), b: b.to_string() })
}

/// The raw map restricted to `nodes`: every edge among them becomes a
/// one-hop shortcut, closed doors stay door edges. With all nodes this is
/// the uncompressed formulation.
pub fn raw_submap(m: &TopoMap, nodes: &[String]) -> Result<CompressedMap, MapError> {
    let mut keep: Vec<String> = nodes.to_vec();
    for n in &keep {
        m.require(n)?;
    }
    keep.sort();
    keep.dedup();
    let zone = zones(m);
    let inside = |n: &str| keep.binary_search_by(|k| k.as_str().cmp(n)).is_ok();
    let mut c = CompressedMap { nodes: keep.clone(), ..Default::default() };
    for e in m.edges().iter().filter(|e| inside(&e.a) && inside(&e.b)) {
        let (a, b) = if e.a <= e.b { (&e.a, &e.b) } else { (&e.b, &e.a) };
        if e.door == DoorState::Closed {
            c.doors.push(DoorEdge { a: a.clone(), b: b.clone(), cost: e.cost, state: e.door });
        } else {
            c.shortcuts.push(Shortcut { a: a.clone(), b: b.clone(), cost: e.cost, waypoints: vec![a.clone(), b.clone()] });
        }
    }
    c.zone_of = keep.iter().map(|n| (n.clone(), zone[m.index_of(n).expect("checked")])).collect();
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::super::load_map;
    use super::*;

    /// Hall h1-h2-h3, room r behind a closed door from h2, asset t in r.
    fn small() -> TopoMap {
        load_map(
            br#"{"nodes":[{"name":"h1","kind":"pose"},{"name":"h2","kind":"pose"},{"name":"h3","kind":"pose"},
                 {"name":"r","kind":"room"},{"name":"t","kind":"asset"},{"name":"r2","kind":"room"}],
                "edges":[{"a":"h1","b":"h2","cost":2},{"a":"h2","b":"h3","cost":3},
                 {"a":"h2","b":"r","cost":1,"door":"closed"},{"a":"r","b":"t","cost":1},
                 {"a":"h3","b":"r2","cost":1,"door":"closed"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn keeps_only_needed_doors() {
        let c = compress(&small(), &["t".into(), "h3".into()], "h1", CompressOptions::default()).unwrap();
        assert_eq!(c.nodes, ["h1", "h2", "h3", "r", "t"]);
        assert_eq!(c.doors.len(), 1);
        assert_eq!((c.doors[0].a.as_str(), c.doors[0].b.as_str()), ("h2", "r"));
        let s = c.shortcut("h3", "h1").unwrap();
        assert_eq!(s.cost, 5.0);
        assert_eq!(expand_edge(&c, "h3", "h1").unwrap(), ["h3", "h2", "h1"]);
        assert_eq!(expand_edge(&c, "r", "h2").unwrap(), ["r", "h2"]);
        assert!(matches!(expand_edge(&c, "t", "h1"), Err(MapError::NoSuchEdge { .. })));
    }

    #[test]
    fn keep_all_doors() {
        let c = compress(&small(), &["t".into()], "h1", CompressOptions { keep_all_doors: true }).unwrap();
        assert_eq!(c.doors.len(), 2);
        assert!(c.contains("r2"));
    }

    #[test]
    fn no_keys_means_robot_only() {
        let c = compress(&small(), &[], "h1", CompressOptions::default()).unwrap();
        assert_eq!(c.nodes, ["h1"]);
        assert!(c.shortcuts.is_empty() && c.doors.is_empty());
    }

    #[test]
    fn unknown_and_unreachable_keys() {
        let m = small();
        assert_eq!(compress(&m, &["zz".into()], "h1", CompressOptions::default()).unwrap_err(), MapError::UnknownNode("zz".into()));
        let isolated = load_map(br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"b","kind":"pose"}],"edges":[]}"#).unwrap();
        assert_eq!(compress(&isolated, &["b".into()], "a", CompressOptions::default()).unwrap_err(), MapError::Unreachable("b".into()));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_cost(2.5), 3);
        assert_eq!(round_cost(2.49), 2);
        assert_eq!(round_cost(0.0), 0);
    }
}
