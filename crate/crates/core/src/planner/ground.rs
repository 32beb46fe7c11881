use std::collections::{HashMap, HashSet};

use crate::pddl::{Atom, CostExpr, Domain, Literal, Problem, Symbol};

use super::PlanError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    pub name: Symbol,
    pub args: Vec<Symbol>,
    /// Fluent preconditions; static ones were checked while grounding.
    pub pre_pos: Vec<u32>,
    pub pre_neg: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
    pub cost: u64,
}

impl GroundAction {
    pub fn label(&self) -> String {
        let mut s = format!("({}", self.name);
        for a in &self.args {
            s.push(' ');
            s.push_str(a.as_str());
        }
        s.push(')');
        s
    }
}

#[derive(Clone, Debug)]
pub struct GroundOptions {
    /// Grounding fails with `Explosion` past this many actions.
    pub max_actions: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { max_actions: 2_000_000 }
    }
}

/// Ground facts and actions of a problem, restricted to what is relaxed-reachable.
#[derive(Clone, Debug)]
pub struct GroundedTask {
    pub facts: Vec<Atom>,
    /// Per fact: its predicate never occurs in an action effect.
    pub is_static: Vec<bool>,
    /// Sorted by name, then arguments.
    pub actions: Vec<GroundAction>,
    /// Sorted fact ids true initially.
    pub init: Vec<u32>,
    pub goal_pos: Vec<u32>,
    pub goal_neg: Vec<u32>,
    fact_ids: HashMap<Atom, u32>,
    action_ids: HashMap<(Symbol, Vec<Symbol>), u32>,
}

impl GroundedTask {
    pub fn fact_id(&self, a: &Atom) -> Option<u32> {
        self.fact_ids.get(a).copied()
    }

    pub fn action_id(&self, name: &Symbol, args: &[Symbol]) -> Option<u32> {
        self.action_ids.get(&(name.clone(), args.to_vec())).copied()
    }

    pub fn static_facts(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter().zip(&self.is_static).filter(|(_, s)| **s).map(|(a, _)| a)
    }

    pub fn goal_holds(&self, state: &HashSet<u32>) -> bool {
        self.goal_pos.iter().all(|f| state.contains(f)) && self.goal_neg.iter().all(|f| !state.contains(f))
    }
}

#[derive(Clone, Copy, Debug)]
enum Term {
    Var(usize),
    Const(u32),
    /// Constant that is not a declared object; never matches.
    Missing,
}

struct CLit {
    pred: u32,
    args: Vec<Term>,
}

struct CSchema {
    name: Symbol,
    arity: usize,
    pos: Vec<CLit>,
    neg: Vec<CLit>,
    add: Vec<CLit>,
    del: Vec<CLit>,
    costs: Vec<CCost>,
}

enum CCost {
    Const(u64),
    Fluent(u32, Vec<Term>),
}

struct Interner {
    objects: Vec<Symbol>,
    object_ids: HashMap<Symbol, u32>,
    preds: Vec<Symbol>,
    pred_ids: HashMap<Symbol, u32>,
}

impl Interner {
    fn pred(&mut self, s: &Symbol) -> u32 {
        if let Some(&i) = self.pred_ids.get(s) {
            return i;
        }
        let i = self.preds.len() as u32;
        self.preds.push(s.clone());
        self.pred_ids.insert(s.clone(), i);
        i
    }

    fn term(&self, s: &Symbol, params: &[Symbol]) -> Term {
        if s.is_var() {
            match params.iter().position(|p| p == s) {
                Some(i) => Term::Var(i),
                None => Term::Missing,
            }
        } else {
            self.object_ids.get(s).map_or(Term::Missing, |&i| Term::Const(i))
        }
    }

    fn lit(&mut self, a: &Atom, params: &[Symbol]) -> CLit {
        CLit { pred: self.pred(&a.pred), args: a.args.iter().map(|x| self.term(x, params)).collect() }
    }

    fn ground(&mut self, a: &Atom) -> Option<Vec<u32>> {
        let mut key = vec![self.pred(&a.pred)];
        for x in &a.args {
            key.push(*self.object_ids.get(x)?);
        }
        Some(key)
    }

    fn atom(&self, key: &[u32]) -> Atom {
        Atom {
            pred: self.preds[key[0] as usize].clone(),
            args: key[1..].iter().map(|&o| self.objects[o as usize].clone()).collect(),
        }
    }
}

fn instantiate(l: &CLit, binding: &[u32]) -> Option<Vec<u32>> {
    let mut key = Vec::with_capacity(l.args.len() + 1);
    key.push(l.pred);
    for t in &l.args {
        key.push(match *t {
            Term::Var(i) => binding[i],
            Term::Const(o) => o,
            Term::Missing => return None,
        });
    }
    Some(key)
}

/// Reachable atoms, indexed by predicate for joins.
#[derive(Default)]
struct Reach {
    set: HashSet<Vec<u32>>,
    by_pred: HashMap<u32, Vec<Vec<u32>>>,
}

impl Reach {
    fn insert(&mut self, key: Vec<u32>) -> bool {
        if self.set.contains(&key) {
            return false;
        }
        self.by_pred.entry(key[0]).or_default().push(key.clone());
        self.set.insert(key);
        true
    }
}

const UNBOUND: u32 = u32::MAX;

/// Enumerates bindings making every positive precondition reachable.
fn join(s: &CSchema, reach: &Reach, n_objects: u32, out: &mut dyn FnMut(&[u32])) {
    let mut binding = vec![UNBOUND; s.arity];
    let mut used = vec![false; s.pos.len()];
    join_rec(s, reach, n_objects, &mut binding, &mut used, out);
}

fn join_rec(s: &CSchema, reach: &Reach, n_objects: u32, binding: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut dyn FnMut(&[u32])) {
    let empty = Vec::new();
    // Most constrained remaining literal first.
    let next = (0..s.pos.len()).filter(|&i| !used[i]).max_by_key(|&i| {
        let bound = s.pos[i].args.iter().filter(|t| !matches!(t, Term::Var(v) if binding[*v] == UNBOUND)).count();
        let size = reach.by_pred.get(&s.pos[i].pred).map_or(0, Vec::len);
        (bound, usize::MAX - size, usize::MAX - i)
    });
    let Some(i) = next else {
        // Parameters not fixed by any positive precondition range over all objects.
        match binding.iter().position(|&b| b == UNBOUND) {
            None => out(binding),
            Some(v) => {
                for o in 0..n_objects {
                    binding[v] = o;
                    join_rec(s, reach, n_objects, binding, used, out);
                }
                binding[v] = UNBOUND;
            }
        }
        return;
    };
    let lit = &s.pos[i];
    used[i] = true;
    'cand: for cand in reach.by_pred.get(&lit.pred).unwrap_or(&empty) {
        if cand.len() != lit.args.len() + 1 {
            continue;
        }
        let mut newly = Vec::new();
        for (t, &v) in lit.args.iter().zip(&cand[1..]) {
            let ok = match *t {
                Term::Const(o) => o == v,
                Term::Missing => false,
                Term::Var(x) if binding[x] == UNBOUND => {
                    binding[x] = v;
                    newly.push(x);
                    true
                }
                Term::Var(x) => binding[x] == v,
            };
            if !ok {
                for x in newly {
                    binding[x] = UNBOUND;
                }
                continue 'cand;
            }
        }
        join_rec(s, reach, n_objects, binding, used, out);
        for x in newly {
            binding[x] = UNBOUND;
        }
    }
    used[i] = false;
}

pub fn ground_task(d: &Domain, p: &Problem) -> Result<GroundedTask, PlanError> {
    ground_task_with(d, p, &GroundOptions::default())
}

pub fn ground_task_with(d: &Domain, p: &Problem, o: &GroundOptions) -> Result<GroundedTask, PlanError> {
    let mut objects: Vec<Symbol> = Vec::new();
    let mut object_ids = HashMap::new();
    for s in &p.objects {
        if !object_ids.contains_key(s) {
            object_ids.insert(s.clone(), objects.len() as u32);
            objects.push(s.clone());
        }
    }
    let mut it = Interner { objects, object_ids, preds: vec![], pred_ids: HashMap::new() };

    let schemas: Vec<CSchema> = d
        .actions
        .iter()
        .map(|a| {
            let lits = |it: &mut Interner, ls: &[Literal], positive: bool| -> Vec<CLit> {
                ls.iter().filter(|l| l.positive == positive).map(|l| it.lit(&l.atom, &a.params)).collect()
            };
            let costs = a
                .costs
                .iter()
                .map(|c| match &c.amount {
                    CostExpr::Const(v) => CCost::Const(*v),
                    CostExpr::Fluent(f) => {
                        CCost::Fluent(it.pred(&f.pred), f.args.iter().map(|x| it.term(x, &a.params)).collect())
                    }
                })
                .collect();
            CSchema {
                name: a.name.clone(),
                arity: a.params.len(),
                pos: lits(&mut it, &a.pre, true),
                neg: lits(&mut it, &a.pre, false),
                add: lits(&mut it, &a.eff, true),
                del: lits(&mut it, &a.eff, false),
                costs,
            }
        })
        .collect();
    let fluent_preds: HashSet<u32> = schemas.iter().flat_map(|s| s.add.iter().chain(&s.del)).map(|l| l.pred).collect();

    let mut init_set: HashSet<Vec<u32>> = HashSet::new();
    let mut reach = Reach::default();
    for a in &p.init {
        if let Some(k) = it.ground(a) {
            init_set.insert(k.clone());
            reach.insert(k);
        }
    }
    let mut fluent_values: HashMap<Vec<u32>, u64> = HashMap::new();
    for f in &p.fluents {
        if let Some(k) = it.ground(&f.func) {
            fluent_values.insert(k, f.value);
        }
    }
    let unit_costs = p.metric.is_none();
    let n_objects = it.objects.len() as u32;

    // Relaxed fixpoint: instantiate until no new atom becomes reachable.
    let mut found: Vec<HashMap<Vec<u32>, u64>> = schemas.iter().map(|_| HashMap::new()).collect();
    let mut total = 0usize;
    loop {
        let mut new_atoms: Vec<Vec<u32>> = Vec::new();
        for (si, s) in schemas.iter().enumerate() {
            let mut fresh: Vec<(Vec<u32>, u64)> = Vec::new();
            join(s, &reach, n_objects, &mut |b| {
                if found[si].contains_key(b) {
                    return;
                }
                for l in s.neg.iter().filter(|l| !fluent_preds.contains(&l.pred)) {
                    match instantiate(l, b) {
                        Some(k) if init_set.contains(&k) => return,
                        _ => {}
                    }
                }
                let mut cost = 0u64;
                for c in &s.costs {
                    match c {
                        CCost::Const(v) => cost += v,
                        CCost::Fluent(pred, args) => {
                            let key = instantiate(&CLit { pred: *pred, args: args.clone() }, b);
                            match key.and_then(|k| fluent_values.get(&k).copied()) {
                                Some(v) => cost += v,
                                None => return,
                            }
                        }
                    }
                }
                fresh.push((b.to_vec(), if unit_costs { 1 } else { cost }));
            });
            total += fresh.len();
            if total > o.max_actions {
                return Err(PlanError::Explosion { count: total, cap: o.max_actions });
            }
            for (b, cost) in fresh {
                for l in &s.add {
                    if let Some(k) = instantiate(l, &b) {
                        if !reach.set.contains(&k) {
                            new_atoms.push(k);
                        }
                    }
                }
                found[si].insert(b, cost);
            }
        }
        let mut changed = false;
        for k in new_atoms {
            changed |= reach.insert(k);
        }
        if !changed {
            break;
        }
    }

    // Fact universe: reachable atoms plus goal atoms (which may be unreachable).
    let mut keys: Vec<Vec<u32>> = reach.set.iter().cloned().collect();
    for g in &p.goal {
        if let Some(k) = it.ground(&g.atom) {
            if g.positive && !reach.set.contains(&k) {
                keys.push(k);
            }
        }
    }
    let mut facts: Vec<(Atom, Vec<u32>)> = keys.into_iter().map(|k| (it.atom(&k), k)).collect();
    facts.sort_by(|a, b| a.0.cmp(&b.0));
    facts.dedup_by(|a, b| a.1 == b.1);
    let key_ids: HashMap<&[u32], u32> = facts.iter().enumerate().map(|(i, (_, k))| (k.as_slice(), i as u32)).collect();
    let is_static: Vec<bool> = facts.iter().map(|(_, k)| !fluent_preds.contains(&k[0])).collect();

    let mut actions = Vec::with_capacity(total);
    for (s, bindings) in schemas.iter().zip(&found) {
        for (b, &cost) in bindings {
            let ids = |ls: &[CLit], keep_static: bool| -> Vec<u32> {
                let mut v: Vec<u32> = ls
                    .iter()
                    .filter_map(|l| instantiate(l, b))
                    .filter(|k| keep_static || fluent_preds.contains(&k[0]))
                    .filter_map(|k| key_ids.get(k.as_slice()).copied())
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            // A fluent negative precondition on an atom outside the universe is always true.
            let pre_neg: Vec<u32> = ids(&s.neg, false);
            let add = ids(&s.add, true);
            let mut del = ids(&s.del, true);
            del.retain(|f| add.binary_search(f).is_err());
            actions.push(GroundAction {
                name: s.name.clone(),
                args: b.iter().map(|&o| it.objects[o as usize].clone()).collect(),
                pre_pos: ids(&s.pos, false),
                pre_neg,
                add,
                del,
                cost,
            });
        }
    }
    actions.sort_by(|a, b| (&a.name, &a.args).cmp(&(&b.name, &b.args)));

    let mut init: Vec<u32> = init_set.iter().filter_map(|k| key_ids.get(k.as_slice()).copied()).collect();
    init.sort_unstable();
    let mut goal_pos = Vec::new();
    let mut goal_neg = Vec::new();
    for g in &p.goal {
        let id = it.ground(&g.atom).and_then(|k| key_ids.get(k.as_slice()).copied());
        match (g.positive, id) {
            (true, Some(i)) => goal_pos.push(i),
            (true, None) => return Err(PlanError::UnknownGoalObject(g.atom.to_string())),
            (false, Some(i)) => goal_neg.push(i),
            (false, None) => {}
        }
    }
    goal_pos.sort_unstable();
    goal_pos.dedup();
    goal_neg.sort_unstable();
    goal_neg.dedup();

    let facts: Vec<Atom> = facts.into_iter().map(|(a, _)| a).collect();
    let fact_ids = facts.iter().enumerate().map(|(i, a)| (a.clone(), i as u32)).collect();
    let action_ids = actions.iter().enumerate().map(|(i, a)| ((a.name.clone(), a.args.clone()), i as u32)).collect();
    Ok(GroundedTask { facts, is_static, actions, init, goal_pos, goal_neg, fact_ids, action_ids })
}
