use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{parse_condition, Literal};

use super::run::EpisodeResult;
use super::step::FailureCode;
use super::world::DoorSetting;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arms {
    #[default]
    Single,
    Dual,
}

impl Arms {
    pub fn hands(self) -> Vec<String> {
        match self {
            Arms::Single => vec!["hand".into()],
            Arms::Dual => vec!["left_hand".into(), "right_hand".into()],
        }
    }
}

/// Predicates the emulator can test besides object flags.
pub const GOAL_RELATIONS: &[&str] = &["on", "in", "hung", "hung_on", "under", "held", "holding", "at", "robot_at", "door_open"];
pub const GOAL_FLAGS: &[&str] = &[
    "is_on", "is_open", "washed", "folded", "unfolded", "wiped", "filled_water", "filled_coffee", "heated", "empty",
    "covered", "has_battery", "hung", "cut", "stirred", "toasted",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub instruction: String,
    #[serde(default)]
    pub arms: Arms,
    #[serde(default)]
    pub doors: DoorSetting,
    pub world: PathBuf,
    /// Emulator goal, e.g. `(and (on apple_1 desk_604) (not (is_open fridge_1)))`.
    pub goal: String,
    pub retrieval: PathBuf,
    pub grounding: PathBuf,
    /// Overrides the world's start node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_cost: Option<u64>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("suite file: {0}")]
    Json(String),
    #[error("task {id}: {msg}")]
    Task { id: String, msg: String },
}

impl TaskSpec {
    pub fn goal_literals(&self) -> Result<Vec<Literal>, SuiteError> {
        let lits = parse_condition(&self.goal).map_err(|e| SuiteError::Task { id: self.id.clone(), msg: e.to_string() })?;
        for l in &lits {
            let p = l.atom.pred.as_str().to_lowercase();
            if !GOAL_RELATIONS.contains(&p.as_str()) && !GOAL_FLAGS.contains(&p.as_str()) {
                return Err(SuiteError::Task { id: self.id.clone(), msg: format!("goal predicate {p} is not testable") });
            }
        }
        Ok(lits)
    }

    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.world, &mut self.retrieval, &mut self.grounding] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Reads a JSON task list; relative paths are taken from the file's directory.
pub fn load_suite(path: &Path) -> Result<Vec<TaskSpec>, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|e| SuiteError::Io { path: path.into(), msg: e.to_string() })?;
    let mut tasks: Vec<TaskSpec> = serde_json::from_str(&text).map_err(|e| SuiteError::Json(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = std::collections::BTreeSet::new();
    for t in &mut tasks {
        if !seen.insert(t.id.clone()) {
            return Err(SuiteError::Task { id: t.id.clone(), msg: "duplicate id".into() });
        }
        t.goal_literals()?;
        t.resolve(base);
    }
    Ok(tasks)
}

/// Expected outcome of a recorded plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<FailureCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_level_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<f64>,
}

impl Expectation {
    /// Mismatches between this expectation and an episode, empty if none.
    pub fn check(&self, r: &EpisodeResult) -> Vec<String> {
        let mut out = Vec::new();
        if r.success != self.success {
            out.push(format!("success {} != expected {}", r.success, self.success));
        }
        let f = r.failure.as_ref();
        if let Some(c) = self.code {
            if f.map(|f| f.code) != Some(c) {
                out.push(format!("failure code {:?} != expected {c}", f.map(|f| f.code)));
            }
        }
        if let Some(s) = self.step {
            if f.map(|f| f.step) != Some(s) {
                out.push(format!("failure step {:?} != expected {s}", f.map(|f| f.step)));
            }
        }
        if let Some(s) = self.high_level_step {
            if f.map(|f| f.high_level_step) != Some(s) {
                out.push(format!("high-level failure step {:?} != expected {s}", f.map(|f| f.high_level_step)));
            }
        }
        if let Some(c) = self.total_cost {
            if (r.total_cost - c).abs() > 1e-9 {
                out.push(format!("total cost {} != expected {c}", r.total_cost));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySpec {
    pub name: String,
    /// PDDL plan or free-form call lines.
    pub plan: PathBuf,
    #[serde(default)]
    pub arms: Arms,
    #[serde(default)]
    pub doors: DoorSetting,
    pub goal: String,
    pub expect: Expectation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayManifest {
    pub world: PathBuf,
    pub map: PathBuf,
    pub replays: Vec<ReplaySpec>,
}

/// Reads a replay manifest; relative paths are taken from the file's directory.
pub fn load_replays(path: &Path) -> Result<ReplayManifest, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|e| SuiteError::Io { path: path.into(), msg: e.to_string() })?;
    let mut m: ReplayManifest = serde_json::from_str(&text).map_err(|e| SuiteError::Json(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [&mut m.world, &mut m.map] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    for r in &mut m.replays {
        if r.plan.is_relative() {
            r.plan = base.join(&r.plan);
        }
        parse_condition(&r.goal).map_err(|e| SuiteError::Task { id: r.name.clone(), msg: e.to_string() })?;
    }
    Ok(m)
}
