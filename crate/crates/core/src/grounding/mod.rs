//! Node retrieval over the textual index and scene grounding into
//! objects, initial facts and goals.

mod keyword;
mod remote;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{parse_condition, parse_literal, Atom, Domain, Literal, PddlError, Symbol};
use crate::topo::{NodeKind, TopoMap};

pub use keyword::{tokenize, KeywordRetriever};
pub use remote::{RemoteClient, RemoteSpec, API_KEY_ENV};

/// Predicates owned by the robot model and the map; a grounding must not use them.
pub const RESERVED_PREDICATES: &[&str] = &[
    "hand_free",
    "holding",
    "rob_at_node",
    "robot_at_node",
    "obj_at_node",
    "object_at_node",
    "rob_has_hand",
    "robot_has_hand",
    "connected",
    "has_door",
];

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("fixture not found: {0}")]
    FixtureMissing(PathBuf),
    #[error("remote call failed: {0}")]
    Remote(String),
    #[error("malformed grounding: {0}")]
    Malformed(String),
    #[error("grounding failed validation: {}", join(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("no nodes selected")]
    EmptySelection,
    #[error("selected node {0} is not an asset node of the index")]
    UnknownNode(String),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Asset node name to caption.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TextualIndex {
    entries: BTreeMap<String, String>,
}

impl TextualIndex {
    pub fn from_map(m: &TopoMap) -> Self {
        let entries = m
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Asset)
            .map(|n| (n.name.clone(), n.caption.clone().unwrap_or_default()))
            .collect();
        TextualIndex { entries }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        TextualIndex { entries: entries.into_iter().collect() }
    }

    pub fn caption(&self, node: &str) -> Option<&str> {
        self.entries.get(node).map(String::as_str)
    }

    pub fn contains(&self, node: &str) -> bool {
        self.entries.contains_key(node)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Compact listing used in prompts.
    pub fn render(&self) -> String {
        self.iter().map(|(k, v)| format!("- {k}: {v}")).collect::<Vec<_>>().join("\n")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundingResult {
    pub reasoning: String,
    /// Node name to the objects seen there, in listing order.
    pub objects: BTreeMap<String, Vec<String>>,
    pub init: Vec<Literal>,
    pub goal: Vec<Literal>,
}

#[derive(Deserialize, Serialize)]
struct RawGrounding {
    #[serde(default)]
    reasoning: String,
    #[serde(default)]
    objects: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    init: Vec<String>,
    #[serde(default)]
    goal: String,
}

impl GroundingResult {
    /// Accepts a single grounding object or an array of per-node groundings,
    /// which are merged in order.
    pub fn from_json(text: &str) -> Result<Self, GroundingError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| GroundingError::Malformed(e.to_string()))?;
        let raws: Vec<RawGrounding> = match value {
            serde_json::Value::Array(_) => serde_json::from_value(value),
            _ => serde_json::from_value(value).map(|r| vec![r]),
        }
        .map_err(|e| GroundingError::Malformed(e.to_string()))?;
        let mut out = GroundingResult { reasoning: String::new(), objects: BTreeMap::new(), init: vec![], goal: vec![] };
        let bad = |what: &str, e: PddlError| GroundingError::Malformed(format!("{what}: {e}"));
        for raw in raws {
            if !raw.reasoning.is_empty() {
                if !out.reasoning.is_empty() {
                    out.reasoning.push('\n');
                }
                out.reasoning.push_str(&raw.reasoning);
            }
            for (node, objs) in raw.objects {
                let slot = out.objects.entry(node).or_default();
                for o in objs {
                    if !slot.contains(&o) {
                        slot.push(o);
                    }
                }
            }
            for s in &raw.init {
                let lit = parse_literal(s).map_err(|e| bad(s, e))?;
                if !out.init.contains(&lit) {
                    out.init.push(lit);
                }
            }
            for lit in parse_condition(&raw.goal).map_err(|e| bad("goal", e))? {
                if !out.goal.contains(&lit) {
                    out.goal.push(lit);
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let goal = match self.goal.as_slice() {
            [] => "(and)".to_string(),
            g => format!("(and {})", g.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")),
        };
        let raw = RawGrounding {
            reasoning: self.reasoning.clone(),
            objects: self.objects.clone(),
            init: self.init.iter().map(ToString::to_string).collect(),
            goal,
        };
        serde_json::to_string_pretty(&raw).expect("grounding serializes")
    }

    /// Every grounded object paired with its node.
    pub fn placements(&self) -> impl Iterator<Item = (&str, &str)> {
        self.objects.iter().flat_map(|(n, objs)| objs.iter().map(move |o| (o.as_str(), n.as_str())))
    }

    pub fn init_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.init.iter().map(|l| &l.atom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownPredicate { pred: String },
    ArityMismatch { pred: String, expected: usize, found: usize },
    RobotPredicate { pred: String },
    OrphanConstant { name: String },
    NegativeInit { atom: String },
    NonGround { literal: String },
    DuplicateObject { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownPredicate { pred } => write!(f, "unknown predicate {pred}"),
            Violation::ArityMismatch { pred, expected, found } => {
                write!(f, "{pred} takes {expected} arguments, got {found}")
            }
            Violation::RobotPredicate { pred } => write!(f, "robot-reserved predicate {pred}"),
            Violation::OrphanConstant { name } => write!(f, "{name} is not listed under any node"),
            Violation::NegativeInit { atom } => write!(f, "negative initial fact {atom}"),
            Violation::NonGround { literal } => write!(f, "{literal} contains a variable"),
            Violation::DuplicateObject { name } => write!(f, "{name} is listed under more than one node"),
        }
    }
}

/// Structural check of a grounding against a domain; empty means valid.
pub fn validate_grounding(g: &GroundingResult, d: &Domain) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |v: Violation| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    let mut known: BTreeSet<Symbol> = BTreeSet::new();
    for (o, _) in g.placements() {
        if !known.insert(Symbol::new(o)) {
            push(Violation::DuplicateObject { name: o.to_string() });
        }
    }
    let reserved = |p: &Symbol| RESERVED_PREDICATES.iter().any(|r| p.is(r)) || d.function(p.as_str()).is_some();
    for (lit, is_init) in g.init.iter().map(|l| (l, true)).chain(g.goal.iter().map(|l| (l, false))) {
        let a = &lit.atom;
        if reserved(&a.pred) {
            push(Violation::RobotPredicate { pred: a.pred.to_string() });
        } else {
            match d.predicate(a.pred.as_str()) {
                None => push(Violation::UnknownPredicate { pred: a.pred.to_string() }),
                Some(sig) if sig.arity() != a.args.len() => push(Violation::ArityMismatch {
                    pred: a.pred.to_string(),
                    expected: sig.arity(),
                    found: a.args.len(),
                }),
                Some(_) => {}
            }
        }
        if is_init && !lit.positive {
            push(Violation::NegativeInit { atom: a.to_string() });
        }
        if !a.is_ground() {
            push(Violation::NonGround { literal: lit.to_string() });
        }
        for arg in a.args.iter().filter(|x| !x.is_var()) {
            if !known.contains(arg) {
                push(Violation::OrphanConstant { name: arg.to_string() });
            }
        }
    }
    out
}

/// Where selected nodes come from.
#[derive(Clone, Debug, PartialEq)]
pub enum RetrieverSpec {
    Fixture(PathBuf),
    Keyword,
    Remote(RemoteSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub enum GrounderSpec {
    Fixture(PathBuf),
    Remote(RemoteSpec),
}

impl RetrieverSpec {
    /// `fixture:<path>`, `keyword` or `remote`; relative paths resolve against `base`.
    pub fn parse(s: &str, base: &Path, remote: &RemoteSpec) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("fixture", p)) => Ok(RetrieverSpec::Fixture(base.join(p))),
            None if s == "keyword" => Ok(RetrieverSpec::Keyword),
            None if s == "remote" => Ok(RetrieverSpec::Remote(remote.clone())),
            _ => Err(format!("unknown retriever {s:?}; expected fixture:<path>, keyword or remote")),
        }
    }
}

impl GrounderSpec {
    pub fn parse(s: &str, base: &Path, remote: &RemoteSpec) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("fixture", p)) => Ok(GrounderSpec::Fixture(base.join(p))),
            None if s == "remote" => Ok(GrounderSpec::Remote(remote.clone())),
            _ => Err(format!("unknown grounder {s:?}; expected fixture:<path> or remote")),
        }
    }
}

pub trait Retriever: Send + Sync {
    fn retrieve(&self, instruction: &str, index: &TextualIndex) -> Result<Vec<String>, GroundingError>;
}

/// Everything a grounder may look at for one task.
pub struct SceneRequest<'a> {
    pub instruction: &'a str,
    pub nodes: &'a [String],
    pub domain: &'a Domain,
    pub domain_text: &'a str,
    pub index: &'a TextualIndex,
    pub images: BTreeMap<String, Vec<String>>,
}

pub trait Grounder: Send + Sync {
    fn ground(&self, req: &SceneRequest<'_>) -> Result<GroundingResult, GroundingError>;
}

fn read_fixture(path: &Path) -> Result<String, GroundingError> {
    if !path.exists() {
        return Err(GroundingError::FixtureMissing(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| GroundingError::Io { path: path.to_path_buf(), msg: e.to_string() })
}

#[derive(Deserialize)]
struct RawSelection {
    #[serde(default)]
    #[allow(dead_code)]
    reasoning: String,
    selected_nodes: Vec<String>,
}

pub(crate) fn parse_selection(text: &str) -> Result<Vec<String>, GroundingError> {
    let raw: RawSelection = serde_json::from_str(text).map_err(|e| GroundingError::Malformed(e.to_string()))?;
    Ok(raw.selected_nodes)
}

pub struct FixtureRetriever(pub PathBuf);

impl Retriever for FixtureRetriever {
    fn retrieve(&self, _instruction: &str, _index: &TextualIndex) -> Result<Vec<String>, GroundingError> {
        parse_selection(&read_fixture(&self.0)?)
    }
}

pub struct FixtureGrounder(pub PathBuf);

impl Grounder for FixtureGrounder {
    fn ground(&self, _req: &SceneRequest<'_>) -> Result<GroundingResult, GroundingError> {
        GroundingResult::from_json(&read_fixture(&self.0)?)
    }
}

pub fn make_retriever(spec: &RetrieverSpec) -> Box<dyn Retriever> {
    match spec {
        RetrieverSpec::Fixture(p) => Box::new(FixtureRetriever(p.clone())),
        RetrieverSpec::Keyword => Box::new(KeywordRetriever),
        RetrieverSpec::Remote(r) => Box::new(RemoteClient::new(r.clone())),
    }
}

pub fn make_grounder(spec: &GrounderSpec) -> Box<dyn Grounder> {
    match spec {
        GrounderSpec::Fixture(p) => Box::new(FixtureGrounder(p.clone())),
        GrounderSpec::Remote(r) => Box::new(RemoteClient::new(r.clone())),
    }
}

/// Selected asset nodes, deduplicated in first-seen order.
pub fn retrieve_nodes(instruction: &str, index: &TextualIndex, spec: &RetrieverSpec) -> Result<Vec<String>, GroundingError> {
    if instruction.trim().is_empty() {
        return Err(GroundingError::EmptySelection);
    }
    let raw = make_retriever(spec).retrieve(instruction, index)?;
    let mut out: Vec<String> = Vec::new();
    for n in raw {
        if !index.contains(&n) {
            return Err(GroundingError::UnknownNode(n));
        }
        if !out.contains(&n) {
            out.push(n);
        }
    }
    if out.is_empty() {
        return Err(GroundingError::EmptySelection);
    }
    Ok(out)
}

/// Runs the grounder and rejects results that fail [`validate_grounding`].
pub fn ground_scene(req: &SceneRequest<'_>, spec: &GrounderSpec) -> Result<GroundingResult, GroundingError> {
    for n in req.nodes {
        if !req.index.contains(n) {
            return Err(GroundingError::UnknownNode(n.clone()));
        }
    }
    let g = make_grounder(spec).ground(req)?;
    let violations = validate_grounding(&g, req.domain);
    if violations.is_empty() {
        Ok(g)
    } else {
        Err(GroundingError::ValidationFailed(violations))
    }
}
