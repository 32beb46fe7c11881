use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use hashbrown::HashTable;
use serde::Serialize;

use crate::pddl::{Plan, PlanStep};

use super::{GroundedTask, Limit, PlanError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchLimits {
    pub max_expansions: u64,
    pub max_seconds: f64,
    pub max_open_size: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_expansions: 10_000_000, max_seconds: 300.0, max_open_size: 20_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub states: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub plan: Plan,
    pub cost: u64,
    pub stats: SearchStats,
}

const NONE: u32 = u32::MAX;

/// Task with constant facts folded away and the rest packed into bitsets.
struct Compiled {
    words: usize,
    init: Vec<u64>,
    goal_pos: Vec<u32>,
    goal_neg: Vec<u32>,
    /// Ground action id per compiled action.
    origin: Vec<u32>,
    pre_pos: Vec<Vec<u32>>,
    pre_neg: Vec<Vec<u32>>,
    add: Vec<Vec<u32>>,
    del: Vec<Vec<u32>>,
    cost: Vec<u64>,
    /// Compiled actions keyed by one positive precondition bit.
    triggered: Vec<Vec<u32>>,
    /// Actions with no positive precondition, checked in every state.
    always: Vec<u32>,
}

fn bit(s: &[u64], f: u32) -> bool {
    s[(f / 64) as usize] >> (f % 64) & 1 == 1
}

fn set_bit(s: &mut [u64], f: u32) {
    s[(f / 64) as usize] |= 1 << (f % 64);
}

fn clear_bit(s: &mut [u64], f: u32) {
    s[(f / 64) as usize] &= !(1 << (f % 64));
}

fn hash_words(s: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &w in s {
        h = (h.rotate_left(5) ^ w).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
    h ^ (h >> 29)
}

impl Compiled {
    /// `None` when the goal can never hold.
    fn new(t: &GroundedTask) -> Option<Compiled> {
        let n = t.facts.len();
        let mut added = vec![false; n];
        let mut deleted = vec![false; n];
        for a in &t.actions {
            a.add.iter().for_each(|&f| added[f as usize] = true);
            a.del.iter().for_each(|&f| deleted[f as usize] = true);
        }
        let mut in_init = vec![false; n];
        t.init.iter().for_each(|&f| in_init[f as usize] = true);
        // Constant facts: true and never deleted, or false and never added.
        let always_true = |f: u32| in_init[f as usize] && !deleted[f as usize];
        let always_false = |f: u32| !in_init[f as usize] && !added[f as usize];
        let mut remap = vec![NONE; n];
        let mut m = 0u32;
        for f in 0..n as u32 {
            if !always_true(f) && !always_false(f) {
                remap[f as usize] = m;
                m += 1;
            }
        }
        if t.goal_pos.iter().any(|&f| always_false(f)) || t.goal_neg.iter().any(|&f| always_true(f)) {
            return None;
        }
        let words = (m as usize).div_ceil(64).max(1);
        let mut init = vec![0u64; words];
        for &f in &t.init {
            if remap[f as usize] != NONE {
                set_bit(&mut init, remap[f as usize]);
            }
        }
        let map = |v: &[u32]| -> Vec<u32> { v.iter().filter_map(|&f| Some(remap[f as usize]).filter(|&x| x != NONE)).collect() };

        // Trigger on the precondition whose predicate has the most facts; such facts are rarely all true.
        let mut pred_count: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        for a in &t.facts {
            *pred_count.entry(a.pred.as_str()).or_default() += 1;
        }
        let mut c = Compiled {
            words,
            init,
            goal_pos: map(&t.goal_pos),
            goal_neg: map(&t.goal_neg),
            origin: vec![],
            pre_pos: vec![],
            pre_neg: vec![],
            add: vec![],
            del: vec![],
            cost: vec![],
            triggered: vec![Vec::new(); m as usize],
            always: vec![],
        };
        for (i, a) in t.actions.iter().enumerate() {
            if a.pre_pos.iter().any(|&f| always_false(f)) || a.pre_neg.iter().any(|&f| always_true(f)) {
                continue;
            }
            let id = c.origin.len() as u32;
            let pre = map(&a.pre_pos);
            let trigger = a
                .pre_pos
                .iter()
                .filter(|&&f| remap[f as usize] != NONE)
                .max_by_key(|&&f| pred_count[t.facts[f as usize].pred.as_str()]);
            match trigger {
                Some(&f) => c.triggered[remap[f as usize] as usize].push(id),
                None => c.always.push(id),
            }
            c.origin.push(i as u32);
            c.pre_pos.push(pre);
            c.pre_neg.push(map(&a.pre_neg));
            c.add.push(map(&a.add));
            c.del.push(map(&a.del));
            c.cost.push(a.cost);
        }
        Some(c)
    }

    fn applicable(&self, s: &[u64], a: u32) -> bool {
        let a = a as usize;
        self.pre_pos[a].iter().all(|&f| bit(s, f)) && self.pre_neg[a].iter().all(|&f| !bit(s, f))
    }

    fn is_goal(&self, s: &[u64]) -> bool {
        self.goal_pos.iter().all(|&f| bit(s, f)) && self.goal_neg.iter().all(|&f| !bit(s, f))
    }

    /// Applicable actions in ascending id order.
    fn successors(&self, s: &[u64], out: &mut Vec<u32>) {
        out.clear();
        out.extend(self.always.iter().copied().filter(|&a| self.applicable(s, a)));
        for (w, &word) in s.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let f = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out.extend(self.triggered[f].iter().copied().filter(|&a| self.applicable(s, a)));
            }
        }
        out.sort_unstable();
    }
}

struct States {
    words: usize,
    arena: Vec<u64>,
    table: HashTable<u32>,
}

impl States {
    fn get(&self, id: u32) -> &[u64] {
        let i = id as usize * self.words;
        &self.arena[i..i + self.words]
    }

    fn len(&self) -> u32 {
        (self.arena.len() / self.words) as u32
    }

    /// (id, newly inserted)
    fn intern(&mut self, s: &[u64]) -> (u32, bool) {
        let h = hash_words(s);
        let words = self.words;
        let arena = &self.arena;
        if let Some(&id) = self.table.find(h, |&id| &arena[id as usize * words..(id as usize + 1) * words] == s) {
            return (id, false);
        }
        let id = self.len();
        self.arena.extend_from_slice(s);
        let arena = &self.arena;
        self.table.insert_unique(h, id, |&id| hash_words(&arena[id as usize * words..(id as usize + 1) * words]));
        (id, true)
    }
}

/// Uniform-cost search. Among optimal plans, returns the one whose action
/// sequence is smallest under (name, args) ordering.
pub fn solve_optimal(t: &GroundedTask, lim: &SearchLimits) -> Result<Solution, PlanError> {
    let Some(c) = Compiled::new(t) else {
        return Err(PlanError::Unsolvable);
    };
    let start = Instant::now();
    let deadline = Duration::from_secs_f64(lim.max_seconds.max(0.0));
    let mut states = States { words: c.words, arena: Vec::new(), table: HashTable::new() };
    let (root, _) = states.intern(&c.init);
    let mut g: Vec<u64> = vec![0];
    let mut closed: Vec<bool> = vec![false];
    // Best known parent per state, plus extra equal-cost parents.
    let mut parent: Vec<(u32, u32)> = vec![(NONE, NONE)];
    let mut extra: Vec<(u32, u32, u32)> = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, root)));
    let mut stats = SearchStats::default();
    let mut best: Option<u64> = None;
    let mut goals: Vec<u32> = Vec::new();
    let mut succ = Vec::new();
    let mut child = vec![0u64; c.words];

    while let Some(Reverse((gs, s))) = heap.pop() {
        if closed[s as usize] || gs != g[s as usize] {
            continue;
        }
        if best.is_some_and(|b| gs > b) {
            break;
        }
        closed[s as usize] = true;
        if c.is_goal(states.get(s)) {
            best.get_or_insert(gs);
            goals.push(s);
        }
        stats.expanded += 1;
        if stats.expanded > lim.max_expansions {
            return Err(PlanError::LimitExceeded(Limit::Expansions));
        }
        if stats.expanded % 1024 == 0 && start.elapsed() > deadline {
            return Err(PlanError::LimitExceeded(Limit::Time));
        }
        c.successors(states.get(s), &mut succ);
        for &a in &succ {
            let cost = c.cost[a as usize];
            // At the optimal cost only zero-cost moves can still reach other optimal goal states.
            if best.is_some() && cost > 0 {
                continue;
            }
            child.copy_from_slice(states.get(s));
            for &f in &c.del[a as usize] {
                clear_bit(&mut child, f);
            }
            for &f in &c.add[a as usize] {
                set_bit(&mut child, f);
            }
            stats.generated += 1;
            let ng = gs + cost;
            let (id, fresh) = states.intern(&child);
            if fresh {
                g.push(ng);
                closed.push(false);
                parent.push((s, a));
                heap.push(Reverse((ng, id)));
            } else if closed[id as usize] {
                continue;
            } else if ng < g[id as usize] {
                g[id as usize] = ng;
                parent[id as usize] = (s, a);
                heap.push(Reverse((ng, id)));
            } else if ng == g[id as usize] {
                extra.push((id, s, a));
            }
        }
        if heap.len() > lim.max_open_size {
            return Err(PlanError::LimitExceeded(Limit::OpenSize));
        }
    }
    stats.states = states.len() as u64;
    let Some(cost) = best else {
        return Err(PlanError::Unsolvable);
    };

    // Optimal edges: parent links consistent with the final g values.
    let mut edges: Vec<(u32, u32, u32)> = Vec::new();
    for (child_id, &(p, a)) in parent.iter().enumerate() {
        if p != NONE {
            edges.push((child_id as u32, p, a));
        }
    }
    edges.extend(extra.iter().copied());
    edges.retain(|&(ch, p, a)| {
        closed[ch as usize] && closed[p as usize] && g[p as usize] + c.cost[a as usize] == g[ch as usize]
    });

    // States from which some optimal goal state is reachable along optimal edges.
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); states.len() as usize];
    for &(ch, p, _) in &edges {
        rev[ch as usize].push(p);
    }
    let mut useful = vec![false; states.len() as usize];
    let mut stack = goals.clone();
    for &gid in &goals {
        useful[gid as usize] = true;
    }
    while let Some(x) = stack.pop() {
        for &p in &rev[x as usize] {
            if !useful[p as usize] {
                useful[p as usize] = true;
                stack.push(p);
            }
        }
    }
    let mut fwd: Vec<Vec<(u32, u32)>> = vec![Vec::new(); states.len() as usize];
    for &(ch, p, a) in &edges {
        if useful[ch as usize] {
            fwd[p as usize].push((c.origin[a as usize], ch));
        }
    }
    let goal_set: HashSet<u32> = goals.iter().copied().collect();
    let mut steps = Vec::new();
    let mut cur = root;
    while !goal_set.contains(&cur) {
        let &(a, next) = fwd[cur as usize].iter().min().expect("optimal path continues");
        let ga = &t.actions[a as usize];
        steps.push(PlanStep { name: ga.name.clone(), args: ga.args.clone() });
        cur = next;
    }
    Ok(Solution { plan: Plan { steps, reported_cost: Some(cost) }, cost, stats })
}
