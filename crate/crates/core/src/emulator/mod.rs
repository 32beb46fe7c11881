//! Deterministic symbolic emulator for checking plans.
//!
//! Plans in PDDL form go through an operator table, call-style plans
//! through a small text parser; both yield [`EmuAction`]s over the
//! seventeen action kinds. Object names are matched to world objects per
//! node before the episode runs.

mod action;
mod facts;
mod ground;
mod run;
mod step;
mod task;
mod world;

pub use action::{parse_actions, parse_any, parse_freeform, ActionKind, ActionParseError, EmuAction, OpEntry, OperatorTable, TargetSpec};
pub use facts::{object_facts, world_grounding};
pub use ground::{ground_objects, ground_partial, match_score, name_tokens, ObjectMapping, Unresolved, SYNONYMS};
pub use run::{
    collapse_moves, execute, goal_from_pddl, goal_holds, holds, mean_std, rpqg, run, success_rate, EpisodeResult, Failure,
    MeanStd, MetricError, RunOptions,
};
pub use step::{FailureCode, Violation};
pub use task::{
    load_replays, load_suite, Arms, Expectation, ReplayManifest, ReplaySpec, SuiteError, TaskSpec, GOAL_FLAGS, GOAL_RELATIONS,
};
pub use world::{load_world, DoorSetting, Location, Object, WorldError, WorldState};
