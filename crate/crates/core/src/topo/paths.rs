use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{DoorState, TopoMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DoorMode {
    /// Closed doors are impassable.
    DoorsAsWalls,
    /// Every door is passable.
    DoorsOpen,
}

#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub source: usize,
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Node indices from the source to `t`, or `None` if unreachable.
    pub fn path_to(&self, t: usize) -> Option<Vec<usize>> {
        if !self.dist[t].is_finite() {
            return None;
        }
        let mut path = vec![t];
        let mut cur = t;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

pub fn shortest_paths(m: &TopoMap, source: usize, mode: DoorMode) -> ShortestPaths {
    shortest_paths_with(m, source, |k| mode == DoorMode::DoorsOpen || m.edges()[k].door != DoorState::Closed)
}

/// Dijkstra over edges accepted by `passable`. Among equal-cost
/// predecessors the one with the smallest name wins.
pub fn shortest_paths_with(m: &TopoMap, source: usize, passable: impl Fn(usize) -> bool) -> ShortestPaths {
    let n = m.nodes().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, k) in m.neighbors(u) {
            if done[v] || !passable(k) {
                continue;
            }
            let nd = d + m.edges()[k].cost;
            if nd < dist[v] && !same(nd, dist[v]) {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Entry(nd, v));
            } else if same(nd, dist[v]) && pred[v].is_some_and(|p| m.name(u) < m.name(p)) {
                pred[v] = Some(u);
            }
        }
    }
    ShortestPaths { source, dist, pred }
}

/// Cost and node names of a shortest path from `a` to `b`.
pub fn shortest_path(m: &TopoMap, a: &str, b: &str, mode: DoorMode) -> Option<(f64, Vec<String>)> {
    let (ia, ib) = (m.index_of(a)?, m.index_of(b)?);
    let sp = shortest_paths(m, ia, mode);
    let path = sp.path_to(ib)?;
    Some((sp.dist[ib], path.into_iter().map(|i| m.name(i).to_string()).collect()))
}

#[cfg(test)]
mod tests {
    use super::super::load_map;
    use super::*;

    fn diamond() -> TopoMap {
        // a -> {b, c} -> d with equal costs; a closed door a--e--d shortcut.
        load_map(
            br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"c","kind":"pose"},{"name":"b","kind":"pose"},
                 {"name":"d","kind":"pose"},{"name":"e","kind":"room"}],
                "edges":[{"a":"a","b":"c","cost":1},{"a":"a","b":"b","cost":1},{"a":"c","b":"d","cost":1},
                 {"a":"b","b":"d","cost":1},{"a":"a","b":"e","cost":0.5,"door":"closed"},{"a":"e","b":"d","cost":0.5}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn ties_prefer_smaller_names() {
        let (c, p) = shortest_path(&diamond(), "a", "d", DoorMode::DoorsAsWalls).unwrap();
        assert_eq!(c, 2.0);
        assert_eq!(p, ["a", "b", "d"]);
    }

    #[test]
    fn doors_open_mode_uses_door() {
        let (c, p) = shortest_path(&diamond(), "a", "d", DoorMode::DoorsOpen).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(p, ["a", "e", "d"]);
    }
}
