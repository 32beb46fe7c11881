//! Grounding, optimal search, plan validation and refinement.

mod external;
mod ground;
mod search;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expand::NameTable;
use crate::pddl::{Atom, Plan, PlanStep};
use crate::topo::{expand_edge, CompressedMap};

pub use external::{solve_external, ExternalError, ExternalPlanner};
pub use ground::{ground_task, ground_task_with, GroundAction, GroundOptions, GroundedTask};
pub use search::{solve_optimal, SearchLimits, SearchStats, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Expansions,
    Time,
    OpenSize,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Expansions => "expansion limit",
            Limit::Time => "time limit",
            Limit::OpenSize => "open list limit",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("grounding produced more than {cap} actions ({count} so far); compress the map or raise the cap")]
    Explosion { count: usize, cap: usize },
    #[error("goal mentions an undeclared object: {0}")]
    UnknownGoalObject(String),
    #[error("no plan exists")]
    Unsolvable,
    #[error("search stopped: {0} exceeded")]
    LimitExceeded(Limit),
    #[error("step {step}: {action} is not a ground action of the task")]
    UnknownAction { step: usize, action: String },
    #[error("step {step}: no compressed edge for {action}")]
    NoSuchEdge { step: usize, action: String },
}

/// First failed step of a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepViolation {
    pub step: usize,
    pub action: String,
    /// Preconditions that did not hold, as literals.
    pub unmet: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    /// Facts true after the last applied step.
    pub state: BTreeSet<Atom>,
    pub cost: u64,
    pub violation: Option<StepViolation>,
    pub goal_holds: bool,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none() && self.goal_holds
    }
}

/// Applies the plan step by step from the initial state.
pub fn validate_plan(t: &GroundedTask, plan: &Plan) -> Result<Validation, PlanError> {
    let mut state: HashSet<u32> = t.init.iter().copied().collect();
    let mut cost = 0;
    let mut violation = None;
    for (i, step) in plan.steps.iter().enumerate() {
        let id = t
            .action_id(&step.name, &step.args)
            .ok_or_else(|| PlanError::UnknownAction { step: i, action: step.to_string() })?;
        let a = &t.actions[id as usize];
        let mut unmet: Vec<String> = a.pre_pos.iter().filter(|f| !state.contains(f)).map(|&f| t.facts[f as usize].to_string()).collect();
        unmet.extend(a.pre_neg.iter().filter(|f| state.contains(f)).map(|&f| format!("(not {})", t.facts[f as usize])));
        if !unmet.is_empty() {
            violation = Some(StepViolation { step: i, action: step.to_string(), unmet });
            break;
        }
        for f in &a.del {
            state.remove(f);
        }
        state.extend(a.add.iter().copied());
        cost += a.cost;
    }
    let goal_holds = t.goal_holds(&state);
    let state = state.into_iter().map(|f| t.facts[f as usize].clone()).collect();
    Ok(Validation { state, cost, violation, goal_holds })
}

/// Replaces each abstract move by one move per cached waypoint hop.
pub fn refine_plan(plan: &Plan, c: &CompressedMap, names: &NameTable) -> Result<Plan, PlanError> {
    let mut steps = Vec::new();
    for (i, s) in plan.steps.iter().enumerate() {
        if !s.name.is(&names.move_robot) || s.args.len() != 3 {
            steps.push(s.clone());
            continue;
        }
        let (from, to) = (s.args[1].as_str(), s.args[2].as_str());
        let hops = expand_edge(c, from, to).map_err(|_| PlanError::NoSuchEdge { step: i, action: s.to_string() })?;
        for w in hops.windows(2) {
            steps.push(PlanStep::new(s.name.clone(), [s.args[0].clone(), w[0].as_str().into(), w[1].as_str().into()]));
        }
    }
    Ok(Plan { steps, reported_cost: plan.reported_cost })
}

/// Plan length after merging runs of consecutive moves into one step.
pub fn high_level_steps(plan: &Plan, names: &NameTable) -> usize {
    let mut n = 0;
    let mut prev_move = false;
    for s in &plan.steps {
        let is_move = s.name.is(&names.move_robot);
        if !(is_move && prev_move) {
            n += 1;
        }
        prev_move = is_move;
    }
    n
}
