#![allow(dead_code)]

use std::path::PathBuf;

use mobiplan_core::topo::{DoorState, MapEdge, MapNode, NodeKind, TopoMap};
use rand::Rng;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Random connected-ish map: a random spanning tree plus extra edges.
/// Integer costs in 0..=9, up to `max_closed` closed doors, some open ones.
pub fn random_map(rng: &mut impl Rng, max_nodes: usize, max_closed: usize) -> TopoMap {
    let n = rng.gen_range(2..=max_nodes);
    let nodes: Vec<MapNode> = (0..n)
        .map(|i| MapNode { name: format!("n{i:02}"), kind: NodeKind::Pose, images: vec![], caption: None })
        .collect();
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..n {
        // occasionally leave a node detached
        if rng.gen_bool(0.03) {
            continue;
        }
        let u = rng.gen_range(0..v);
        pairs.insert((u, v));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges: Vec<MapEdge> = pairs
        .into_iter()
        .map(|(a, b)| MapEdge {
            a: format!("n{a:02}"),
            b: format!("n{b:02}"),
            cost: rng.gen_range(0..=9) as f64,
            door: if rng.gen_bool(0.05) { DoorState::Open } else { DoorState::None },
        })
        .collect();
    let closed = rng.gen_range(0..=max_closed.min(edges.len()));
    for _ in 0..closed {
        let k = rng.gen_range(0..edges.len());
        edges[k].door = DoorState::Closed;
    }
    TopoMap::new(nodes, edges).expect("generated map is valid")
}

/// Floyd-Warshall over edges accepted by `passable`.
pub fn floyd(m: &TopoMap, passable: impl Fn(&MapEdge) -> bool) -> Vec<Vec<f64>> {
    let n = m.nodes().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in m.edges().iter().filter(|e| passable(e)) {
        let (a, b) = (m.index_of(&e.a).unwrap(), m.index_of(&e.b).unwrap());
        d[a][b] = d[a][b].min(e.cost);
        d[b][a] = d[b][a].min(e.cost);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

use mobiplan_core::pddl::{ActionSchema, Atom, CostExpr, Domain, Literal, Metric, NumericEffect, PlanStep, Problem, Signature};
use std::collections::{BinaryHeap, HashMap};

/// Small random STRIPS task with negative preconditions and constant costs.
pub fn random_strips(rng: &mut impl Rng, min_cost: u64) -> (Domain, Problem) {
    let n_obj = rng.gen_range(1..=3);
    let objects: Vec<String> = (0..n_obj).map(|i| format!("o{i}")).collect();
    let n_pred = rng.gen_range(2..=5);
    let arity: Vec<usize> = (0..n_pred).map(|_| rng.gen_range(0..=2)).collect();
    let mut d = Domain::new("rnd");
    d.requirements = vec![":strips".into(), ":negative-preconditions".into(), ":action-costs".into()];
    for (i, &a) in arity.iter().enumerate() {
        d.declare_predicate(Signature::new(format!("p{i}"), (0..a).map(|j| format!("?x{j}"))));
    }
    d.declare_function(Signature::new("total-cost", Vec::<String>::new()));
    let rand_atom = |rng: &mut dyn rand::RngCore, terms: &[String]| -> Atom {
        let p = rng.gen_range(0..n_pred);
        Atom::new(format!("p{p}"), (0..arity[p]).map(|_| terms[rng.gen_range(0..terms.len())].clone()).collect::<Vec<_>>())
    };
    let n_act = rng.gen_range(2..=5);
    for k in 0..n_act {
        let n_par = rng.gen_range(0..=2);
        let params: Vec<String> = (0..n_par).map(|j| format!("?v{j}")).collect();
        // Zero-parameter actions can only use zero-arity predicates; fall back to objects as constants.
        let terms = if params.is_empty() { objects.clone() } else { params.clone() };
        let mut a = ActionSchema::new(format!("a{k}"));
        a.params = params.iter().map(|p| p.as_str().into()).collect();
        for _ in 0..rng.gen_range(0..=3) {
            let atom = rand_atom(rng, &terms);
            let lit = if rng.gen_bool(0.25) { Literal::neg(atom) } else { Literal::pos(atom) };
            if !a.pre.contains(&lit) {
                a.pre.push(lit);
            }
        }
        for _ in 0..rng.gen_range(1..=3) {
            let atom = rand_atom(rng, &terms);
            if a.eff.iter().any(|l| l.atom == atom) {
                continue;
            }
            a.eff.push(if rng.gen_bool(0.35) { Literal::neg(atom) } else { Literal::pos(atom) });
        }
        a.costs.push(NumericEffect::total_cost(CostExpr::Const(rng.gen_range(min_cost..=3))));
        d.actions.push(a);
    }
    let mut p = Problem::new("rnd-p", "rnd");
    p.objects = objects.iter().map(|o| o.as_str().into()).collect();
    for _ in 0..rng.gen_range(0..=4) {
        let atom = rand_atom(rng, &objects);
        if !p.init.contains(&atom) {
            p.init.push(atom);
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        let atom = rand_atom(rng, &objects);
        let lit = if rng.gen_bool(0.2) { Literal::neg(atom) } else { Literal::pos(atom) };
        if !p.goal.iter().any(|g| g.atom == lit.atom) {
            p.goal.push(lit);
        }
    }
    p.fluents.push(mobiplan_core::pddl::FluentValue { func: Atom::new("total-cost", Vec::<String>::new()), value: 0 });
    p.metric = Some(Metric::MinimizeTotalCost);
    (d, p)
}

pub enum Oracle {
    TooBig,
    Unsolvable,
    /// Optimal cost and the smallest optimal plan under (name, args) order.
    Solved(u64, Vec<PlanStep>),
}

struct BruteAction {
    name: String,
    args: Vec<String>,
    pre: u64,
    pre_neg: u64,
    add: u64,
    del: u64,
    cost: u64,
}

/// Explicit-state Dijkstra over every instantiation of every schema.
/// States are bitmasks over all possible ground atoms.
pub fn brute_force(d: &Domain, p: &Problem, max_states: usize) -> Oracle {
    let objs: Vec<String> = p.objects.iter().map(|o| o.to_string()).collect();
    let mut atoms: Vec<Atom> = Vec::new();
    for sig in &d.predicates {
        let mut tuples: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..sig.arity() {
            tuples = tuples.into_iter().flat_map(|t| objs.iter().map(move |o| [t.clone(), vec![o.clone()]].concat())).collect();
        }
        atoms.extend(tuples.into_iter().map(|t| Atom::new(sig.name.clone(), t)));
    }
    assert!(atoms.len() <= 64);
    let id = |a: &Atom| atoms.iter().position(|x| x == a).map(|i| 1u64 << i);
    let mut acts = Vec::new();
    for s in &d.actions {
        let mut tuples: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..s.params.len() {
            tuples = tuples.into_iter().flat_map(|t| objs.iter().map(move |o| [t.clone(), vec![o.clone()]].concat())).collect();
        }
        'tuple: for t in tuples {
            let subst = |a: &Atom| {
                Atom::new(
                    a.pred.clone(),
                    a.args.iter().map(|x| match s.params.iter().position(|p| p == x) {
                        Some(i) => t[i].clone(),
                        None => x.to_string(),
                    }),
                )
            };
            let mut b = BruteAction { name: s.name.to_string(), args: t.clone(), pre: 0, pre_neg: 0, add: 0, del: 0, cost: 0 };
            for l in &s.pre {
                match (l.positive, id(&subst(&l.atom))) {
                    (true, Some(m)) => b.pre |= m,
                    (true, None) => continue 'tuple,
                    (false, Some(m)) => b.pre_neg |= m,
                    (false, None) => {}
                }
            }
            for l in &s.eff {
                if let Some(m) = id(&subst(&l.atom)) {
                    if l.positive { b.add |= m } else { b.del |= m }
                }
            }
            b.del &= !b.add;
            b.cost = s.costs.iter().map(|c| match c.amount { CostExpr::Const(v) => v, _ => unreachable!() }).sum();
            acts.push(b);
        }
    }
    acts.sort_by(|a, b| (&a.name, &a.args).cmp(&(&b.name, &b.args)));
    let init: u64 = p.init.iter().filter_map(&id).fold(0, |x, m| x | m);
    let mut gp = 0u64;
    let mut gn = 0u64;
    for g in &p.goal {
        match (g.positive, id(&g.atom)) {
            (true, Some(m)) => gp |= m,
            (true, None) => return Oracle::Unsolvable,
            (false, Some(m)) => gn |= m,
            (false, None) => {}
        }
    }
    let is_goal = |s: u64| s & gp == gp && s & gn == 0;
    let succ = |s: u64| {
        acts.iter()
            .enumerate()
            .filter(move |(_, a)| s & a.pre == a.pre && s & a.pre_neg == 0)
            .map(move |(i, a)| (i, (s & !a.del) | a.add, a.cost))
    };
    // Forward exploration of the whole reachable graph.
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut order = vec![init];
    seen.insert(init, 0);
    let mut k = 0;
    while k < order.len() {
        let s = order[k];
        k += 1;
        for (_, c, _) in succ(s) {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(c) {
                e.insert(order.len());
                order.push(c);
                if order.len() > max_states {
                    return Oracle::TooBig;
                }
            }
        }
    }
    // Backward Dijkstra from goal states: exact cost-to-go.
    let mut rev: Vec<Vec<(usize, u64)>> = vec![vec![]; order.len()];
    for (i, &s) in order.iter().enumerate() {
        for (_, c, cost) in succ(s) {
            rev[seen[&c]].push((i, cost));
        }
    }
    let mut h = vec![u64::MAX; order.len()];
    let mut heap = BinaryHeap::new();
    for (i, &s) in order.iter().enumerate() {
        if is_goal(s) {
            h[i] = 0;
            heap.push(std::cmp::Reverse((0u64, i)));
        }
    }
    while let Some(std::cmp::Reverse((dist, i))) = heap.pop() {
        if dist > h[i] {
            continue;
        }
        for &(j, c) in &rev[i] {
            if dist + c < h[j] {
                h[j] = dist + c;
                heap.push(std::cmp::Reverse((dist + c, j)));
            }
        }
    }
    if h[0] == u64::MAX {
        return Oracle::Unsolvable;
    }
    // Greedy walk along optimal edges, smallest action first.
    let mut plan = Vec::new();
    let mut cur = init;
    while !is_goal(cur) && plan.len() < 1000 {
        let hc = h[seen[&cur]];
        let (i, next, _) = succ(cur).find(|&(_, c, cost)| h[seen[&c]] != u64::MAX && cost + h[seen[&c]] == hc).unwrap();
        plan.push(PlanStep::new(acts[i].name.as_str(), acts[i].args.iter().map(String::as_str)));
        cur = next;
    }
    Oracle::Solved(h[0], plan)
}
