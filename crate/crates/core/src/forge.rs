//! Problem assembly from robot configuration, scene grounding and the
//! compressed map.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expand::NameTable;
use crate::grounding::{validate_grounding, GroundingResult, Violation};
use crate::pddl::{Atom, Domain, FluentValue, Metric, Problem, Symbol};
use crate::topo::{round_cost, CompressedMap};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub name: String,
    pub hands: Vec<String>,
    pub start: String,
    /// Hand to object already held at the start; such objects get no node anchor.
    #[serde(default)]
    pub holding: BTreeMap<String, String>,
}

impl RobotConfig {
    pub fn new(name: &str, hands: &[&str], start: &str) -> Self {
        RobotConfig {
            name: name.into(),
            hands: hands.iter().map(|h| h.to_string()).collect(),
            start: start.into(),
            holding: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForgeError {
    #[error("grounding is invalid: {0:?}")]
    InvalidGrounding(Vec<Violation>),
    #[error("start node {0} is not in the compressed map")]
    StartNodeMissing(String),
    #[error("hand configuration {hands:?} does not fit the domain: {msg}")]
    HandCountMismatch { hands: Vec<String>, msg: String },
    #[error("object {object} is placed at {node}, which is not in the compressed map")]
    OrphanNode { object: String, node: String },
    #[error("name {0} is used both as a map node and as an object")]
    NameClash(String),
    #[error("domain lacks predicate {0}")]
    MissingPredicate(String),
    #[error("initial holding of {object} by unknown hand {hand}")]
    BadHolding { hand: String, object: String },
}

/// Initial facts of a synthesized problem, by source.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InitParts {
    pub robot: Vec<Atom>,
    pub grounding: Vec<Atom>,
    pub anchors: Vec<Atom>,
    pub topology: Vec<Atom>,
}

impl InitParts {
    pub fn all(&self) -> Vec<Atom> {
        [&self.robot, &self.grounding, &self.anchors, &self.topology].into_iter().flatten().cloned().collect()
    }
}

fn hand_free_arity(d: &Domain) -> Result<usize, ForgeError> {
    d.predicate("hand_free").map(|s| s.arity()).ok_or_else(|| ForgeError::MissingPredicate("hand_free".into()))
}

fn need(d: &Domain, pred: &str) -> Result<(), ForgeError> {
    match d.predicate(pred) {
        Some(_) => Ok(()),
        None => Err(ForgeError::MissingPredicate(pred.into())),
    }
}

/// Builds the problem and also returns its initial facts split by source.
pub fn synthesize_parts(
    d: &Domain,
    c: &CompressedMap,
    g: &GroundingResult,
    r: &RobotConfig,
    names: &NameTable,
) -> Result<(Problem, InitParts), ForgeError> {
    let violations = validate_grounding(g, d);
    if !violations.is_empty() {
        return Err(ForgeError::InvalidGrounding(violations));
    }
    if !c.contains(&r.start) {
        return Err(ForgeError::StartNodeMissing(r.start.clone()));
    }
    let bimanual = hand_free_arity(d)? == 2;
    let unique: BTreeSet<&String> = r.hands.iter().collect();
    let hand_err = |msg: &str| ForgeError::HandCountMismatch { hands: r.hands.clone(), msg: msg.into() };
    if r.hands.is_empty() || r.hands.len() > 2 || unique.len() != r.hands.len() {
        return Err(hand_err("expected one or two distinct hands"));
    }
    if !bimanual && r.hands.len() != 1 {
        return Err(hand_err("single-arm domain"));
    }
    for (h, o) in &r.holding {
        if !r.hands.contains(h) {
            return Err(ForgeError::BadHolding { hand: h.clone(), object: o.clone() });
        }
    }
    need(d, &names.rob_at_node)?;
    need(d, &names.obj_at_node)?;
    need(d, &names.connected)?;
    if bimanual {
        need(d, &names.rob_has_hand)?;
    }
    if !c.doors.is_empty() {
        need(d, &names.has_door)?;
    }

    let node_set: BTreeSet<Symbol> = c.nodes.iter().map(Symbol::new).collect();
    let mut objects: Vec<Symbol> = c.nodes.iter().map(Symbol::new).collect();
    objects.push(Symbol::new(&r.name));
    if bimanual {
        objects.extend(r.hands.iter().map(Symbol::new));
    }
    let mut seen: BTreeSet<Symbol> = objects.iter().cloned().collect();
    for (o, n) in g.placements() {
        if !c.contains(n) {
            return Err(ForgeError::OrphanNode { object: o.into(), node: n.into() });
        }
        let s = Symbol::new(o);
        if node_set.contains(&s) || !seen.insert(s.clone()) {
            return Err(ForgeError::NameClash(o.into()));
        }
        objects.push(s);
    }

    let robot = r.name.as_str();
    let held: BTreeSet<&str> = r.holding.values().map(String::as_str).collect();
    let mut parts = InitParts::default();
    parts.robot.push(Atom::new(names.rob_at_node.as_str(), [robot, r.start.as_str()]));
    if bimanual {
        for h in &r.hands {
            parts.robot.push(Atom::new(names.rob_has_hand.as_str(), [robot, h.as_str()]));
        }
        for h in &r.hands {
            match r.holding.get(h) {
                Some(o) => parts.robot.push(Atom::new("holding", [robot, h.as_str(), o.as_str()])),
                None => parts.robot.push(Atom::new("hand_free", [robot, h.as_str()])),
            }
        }
    } else {
        match r.holding.values().next() {
            Some(o) => parts.robot.push(Atom::new("holding", [robot, o.as_str()])),
            None => parts.robot.push(Atom::new("hand_free", [robot])),
        }
    }
    parts.grounding = g.init_atoms().cloned().collect();
    for (o, n) in g.placements() {
        if !held.contains(o) {
            parts.anchors.push(Atom::new(names.obj_at_node.as_str(), [o, n]));
        }
    }
    let mut fluents = Vec::new();
    let mut cost = |a: &str, b: &str, x: f64| {
        for (p, q) in [(a, b), (b, a)] {
            fluents.push(FluentValue { func: Atom::new(names.travel_cost.as_str(), [p, q]), value: round_cost(x) });
        }
    };
    for s in &c.shortcuts {
        parts.topology.push(Atom::new(names.connected.as_str(), [s.a.as_str(), s.b.as_str()]));
        parts.topology.push(Atom::new(names.connected.as_str(), [s.b.as_str(), s.a.as_str()]));
        cost(&s.a, &s.b, s.cost);
    }
    for e in &c.doors {
        parts.topology.push(Atom::new(names.has_door.as_str(), [e.a.as_str(), e.b.as_str()]));
        parts.topology.push(Atom::new(names.has_door.as_str(), [e.b.as_str(), e.a.as_str()]));
        cost(&e.a, &e.b, e.cost);
    }
    fluents.push(FluentValue { func: Atom::new(names.total_cost.as_str(), Vec::<&str>::new()), value: 0 });

    let mut p = Problem::new("mobile-task", d.name.clone());
    p.objects = objects;
    p.init = parts.all();
    p.fluents = fluents;
    p.goal = g.goal.clone();
    p.metric = Some(Metric::MinimizeTotalCost);
    Ok((p, parts))
}

pub fn synthesize(
    d: &Domain,
    c: &CompressedMap,
    g: &GroundingResult,
    r: &RobotConfig,
    names: &NameTable,
) -> Result<Problem, ForgeError> {
    synthesize_parts(d, c, g, r, names).map(|(p, _)| p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    UnknownPredicate { pred: String },
    UnknownFunction { func: String },
    ArityMismatch { name: String, expected: usize, found: usize },
    UnknownConstant { name: String },
    MissingTravelCost { a: String, b: String },
    NonGround { atom: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownPredicate { pred } => write!(f, "undeclared predicate {pred}"),
            Diagnostic::UnknownFunction { func } => write!(f, "undeclared function {func}"),
            Diagnostic::ArityMismatch { name, expected, found } => {
                write!(f, "{name} takes {expected} arguments, got {found}")
            }
            Diagnostic::UnknownConstant { name } => write!(f, "{name} is not a declared object"),
            Diagnostic::MissingTravelCost { a, b } => write!(f, "connected pair {a} {b} has no travel_cost"),
            Diagnostic::NonGround { atom } => write!(f, "{atom} contains a variable"),
        }
    }
}

/// Well-formedness report for a problem against a domain; empty means fine.
pub fn check_problem(d: &Domain, p: &Problem) -> Vec<Diagnostic> {
    check_problem_with(d, p, &NameTable::default())
}

pub fn check_problem_with(d: &Domain, p: &Problem, names: &NameTable) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |x: Diagnostic| {
        if !out.contains(&x) {
            out.push(x);
        }
    };
    let objects: BTreeSet<&Symbol> = p.objects.iter().collect();
    let check_args = |a: &Atom, push: &mut dyn FnMut(Diagnostic)| {
        for x in &a.args {
            if x.is_var() {
                push(Diagnostic::NonGround { atom: a.to_string() });
            } else if !objects.contains(x) {
                push(Diagnostic::UnknownConstant { name: x.to_string() });
            }
        }
    };
    let atoms = p.init.iter().chain(p.goal.iter().map(|l| &l.atom));
    for a in atoms {
        match d.predicate(a.pred.as_str()) {
            None => push(Diagnostic::UnknownPredicate { pred: a.pred.to_string() }),
            Some(s) if s.arity() != a.args.len() => {
                push(Diagnostic::ArityMismatch { name: a.pred.to_string(), expected: s.arity(), found: a.args.len() })
            }
            Some(_) => {}
        }
        check_args(a, &mut push);
    }
    for f in &p.fluents {
        match d.function(f.func.pred.as_str()) {
            None => push(Diagnostic::UnknownFunction { func: f.func.pred.to_string() }),
            Some(s) if s.arity() != f.func.args.len() => push(Diagnostic::ArityMismatch {
                name: f.func.pred.to_string(),
                expected: s.arity(),
                found: f.func.args.len(),
            }),
            Some(_) => {}
        }
        check_args(&f.func, &mut push);
    }
    if d.function(&names.travel_cost).is_some() {
        for a in p.init.iter().filter(|a| a.pred.is(&names.connected) || a.pred.is(&names.has_door)) {
            let func = Atom::new(names.travel_cost.as_str(), a.args.clone());
            if a.args.len() == 2 && p.fluent(&func).is_none() {
                push(Diagnostic::MissingTravelCost { a: a.args[0].to_string(), b: a.args[1].to_string() });
            }
        }
    }
    out
}
