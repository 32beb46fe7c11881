mod common;

use common::{floyd, random_map};
use mobiplan_core::topo::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bellman_ford(m: &TopoMap, s: usize, mode: DoorMode) -> Vec<f64> {
    let n = m.nodes().len();
    let mut d = vec![f64::INFINITY; n];
    d[s] = 0.0;
    for _ in 0..n {
        for e in m.edges() {
            if mode == DoorMode::DoorsAsWalls && e.door == DoorState::Closed {
                continue;
            }
            let (a, b) = (m.index_of(&e.a).unwrap(), m.index_of(&e.b).unwrap());
            if d[a] + e.cost < d[b] {
                d[b] = d[a] + e.cost;
            }
            if d[b] + e.cost < d[a] {
                d[a] = d[b] + e.cost;
            }
        }
    }
    d
}

fn pick_keys(rng: &mut ChaCha8Rng, m: &TopoMap) -> (Vec<String>, String) {
    let n = m.nodes().len();
    let robot = rng.gen_range(0..n);
    let open = shortest_paths(m, robot, DoorMode::DoorsOpen);
    let reachable: Vec<usize> = (0..n).filter(|&i| open.dist[i].is_finite()).collect();
    let k = rng.gen_range(0..=5usize);
    let keys = (0..k).map(|_| m.name(reachable[rng.gen_range(0..reachable.len())]).to_string()).collect();
    (keys, m.name(robot).to_string())
}

fn check_cached_paths(m: &TopoMap, c: &CompressedMap) {
    for s in &c.shortcuts {
        assert_eq!(s.waypoints.first(), Some(&s.a));
        assert_eq!(s.waypoints.last(), Some(&s.b));
        let mut sum = 0.0;
        for w in s.waypoints.windows(2) {
            let e = m.edge_between(&w[0], &w[1]).expect("waypoint hop is a raw edge");
            assert_ne!(e.door, DoorState::Closed, "shortcut {}-{} crosses a closed door", s.a, s.b);
            sum += e.cost;
        }
        assert_eq!(sum, s.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dijkstra_matches_bellman_ford(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_map(&mut rng, 30, 5);
        for mode in [DoorMode::DoorsAsWalls, DoorMode::DoorsOpen] {
            for s in 0..m.nodes().len() {
                let sp = shortest_paths(&m, s, mode);
                let bf = bellman_ford(&m, s, mode);
                prop_assert_eq!(&sp.dist, &bf);
                for t in 0..m.nodes().len() {
                    if let Some(p) = sp.path_to(t) {
                        let cost: f64 = p.windows(2).map(|w| m.edge_between(m.name(w[0]), m.name(w[1])).unwrap().cost).sum();
                        prop_assert_eq!(cost, bf[t]);
                    }
                }
            }
        }
    }

    #[test]
    fn compression_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_map(&mut rng, 40, 5);
        let (keys, robot) = pick_keys(&mut rng, &m);
        let c = compress(&m, &keys, &robot, CompressOptions::default()).unwrap();
        check_cached_paths(&m, &c);
        let walls = floyd(&m, |e| e.door != DoorState::Closed);
        for s in &c.shortcuts {
            let (a, b) = (m.index_of(&s.a).unwrap(), m.index_of(&s.b).unwrap());
            prop_assert_eq!(s.cost, walls[a][b]);
            prop_assert_eq!(c.zone_of[&s.a], c.zone_of[&s.b]);
        }
        for k in keys.iter().chain([&robot]) {
            prop_assert!(c.contains(k));
        }
        for d in &c.doors {
            prop_assert_eq!(m.edge_between(&d.a, &d.b).unwrap().door, DoorState::Closed);
        }
        // pure function
        prop_assert_eq!(compress(&m, &keys, &robot, CompressOptions::default()).unwrap(), c);
    }

    #[test]
    fn reversed_edge_reverses_waypoints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_map(&mut rng, 25, 3);
        let (keys, robot) = pick_keys(&mut rng, &m);
        let c = compress(&m, &keys, &robot, CompressOptions::default()).unwrap();
        for s in &c.shortcuts {
            let mut fwd = expand_edge(&c, &s.a, &s.b).unwrap();
            fwd.reverse();
            prop_assert_eq!(fwd, expand_edge(&c, &s.b, &s.a).unwrap());
        }
    }
}

#[test]
fn line_graph_examples() {
    let m = load_map(
        br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"b","kind":"pose"},{"name":"c","kind":"pose"}],
            "edges":[{"a":"a","b":"b","cost":2},{"a":"b","b":"c","cost":3}]}"#,
    )
    .unwrap();
    assert_eq!(m.edges().len(), 2);
    let (d, p) = shortest_path(&m, "a", "c", DoorMode::DoorsAsWalls).unwrap();
    assert_eq!(d, 5.0);
    assert_eq!(p, ["a", "b", "c"]);
    let walled = load_map(
        br#"{"nodes":[{"name":"a","kind":"pose"},{"name":"b","kind":"pose"},{"name":"c","kind":"pose"}],
            "edges":[{"a":"a","b":"b","cost":2},{"a":"b","b":"c","cost":3,"door":"closed"}]}"#,
    )
    .unwrap();
    assert!(shortest_path(&walled, "a", "c", DoorMode::DoorsAsWalls).is_none());
    let sp = shortest_paths(&walled, 0, DoorMode::DoorsAsWalls);
    assert!(sp.dist[2].is_infinite());
}

#[test]
fn shipped_map_counts() {
    let m = load_map(common::read("map/building.json").as_bytes()).unwrap();
    let count = |k: NodeKind| m.nodes().iter().filter(|n| n.kind == k).count();
    assert_eq!((count(NodeKind::Pose), count(NodeKind::Room), count(NodeKind::Asset)), (43, 18, 31));
    assert_eq!(m.edges().iter().filter(|e| e.door == DoorState::Closed).count(), 18);
}

#[test]
fn task41_compression() {
    let m = load_map(common::read("map/building.json").as_bytes()).unwrap();
    let keys: Vec<String> = ["coffee_maker", "office_602_table", "meeting_table"].map(String::from).into();
    let c = compress(&m, &keys, "pose_15", CompressOptions::default()).unwrap();
    assert!(c.contains("pose_21") && c.contains("office_602"));
    let door = c.door("pose_21", "office_602").unwrap();
    assert_eq!((door.cost, door.state), (1.0, DoorState::Closed));
    assert_eq!(c.doors.len(), 1);
    assert_eq!(c.shortcut("pose_21", "coffee_maker").unwrap().cost, 9.0);
    assert_eq!(
        expand_edge(&c, "pose_21", "coffee_maker").unwrap(),
        ["pose_21", "pose_20", "pose_19", "pose_18", "pose_13", "pose_6", "pose_7", "pose_1", "pose_3", "coffee_maker"]
    );
    assert_eq!(expand_edge(&c, "office_602", "pose_21").unwrap(), ["office_602", "pose_21"]);
    assert_eq!(c.nodes.len(), 6);
}
