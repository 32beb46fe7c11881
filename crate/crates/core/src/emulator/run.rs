use serde::Serialize;
use thiserror::Error;

use crate::pddl::{Atom, Literal};
use crate::topo::{shortest_path, shortest_paths_with, DoorMode, DoorState};

use super::action::{ActionKind, EmuAction};
use super::ground::ground_partial;
use super::step::{FailureCode, Violation};
use super::world::{Location, WorldState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Route moves to non-adjacent nodes over the map, preferring paths
    /// through open doors. A route that must cross a closed door fails
    /// at that door.
    pub expand_moves: bool,
    /// Resolve plan object names against the world first.
    pub ground_names: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub code: FailureCode,
    /// Index into the submitted action list.
    pub step: usize,
    /// Index after merging runs of moves.
    pub high_level_step: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    /// Primitive actions applied, counting each hop of a routed move.
    pub executed_steps: usize,
    pub high_level_steps: usize,
    /// Edge costs of the hops taken plus one per other action.
    pub total_cost: f64,
}

/// Number of steps once runs of consecutive moves count as one.
pub fn collapse_moves(kinds: impl IntoIterator<Item = ActionKind>) -> usize {
    let mut n = 0;
    let mut prev = false;
    for k in kinds {
        let m = k == ActionKind::Move;
        if !(m && prev) {
            n += 1;
        }
        prev = m;
    }
    n
}

fn high_level_index(actions: &[EmuAction], i: usize) -> usize {
    collapse_moves(actions[..=i].iter().map(|a| a.kind)) - 1
}

/// Goal vocabulary: `(on o s)`, `(in o c)`, `(hung o t)`, `(under o t)`,
/// `(held o)`, `(holding h o)`, `(at o n)`, `(robot_at n)`,
/// `(door_open a b)` and any unary flag such as `(washed o)`.
pub fn holds(w: &WorldState, a: &Atom) -> bool {
    let args: Vec<String> = a.args.iter().map(|s| s.as_str().to_lowercase()).collect();
    let obj = |i: usize| args.get(i).and_then(|id| w.objects.get(id));
    let loc = |l: Location| obj(0).is_some_and(|o| o.location == l);
    let arg = |i: usize| args.get(i).cloned().unwrap_or_default();
    match (a.pred.as_str().to_lowercase().as_str(), args.len()) {
        ("on", 2) => loc(Location::On(arg(1))),
        ("in", 2) => loc(Location::In(arg(1))),
        ("hung", 2) | ("hung_on", 2) => loc(Location::Hung(arg(1))),
        ("under", 2) => obj(0).is_some_and(|o| matches!(&o.location, Location::Under { target, .. } if *target == args[1])),
        ("held", 1) => w.hands.values().any(|h| h.as_deref() == Some(&args[0])),
        ("holding", 2) => w.hands.get(&args[0]).is_some_and(|h| h.as_deref() == Some(&args[1])),
        ("at", 2) => w.node_of(&args[0]) == Some(&args[1]),
        ("robot_at", 1) => w.robot_at == args[0],
        ("door_open", 2) => w.door(&args[0], &args[1]) == Some(DoorState::Open),
        (flag, 1) => obj(0).is_some_and(|o| o.flag(flag)),
        _ => false,
    }
}

pub fn goal_holds(w: &WorldState, goal: &[Literal]) -> Vec<Literal> {
    goal.iter().filter(|l| holds(w, &l.atom) != l.positive).cloned().collect()
}

/// Translates a PDDL goal over the shipped domain vocabulary into the
/// emulator's.
pub fn goal_from_pddl(goal: &[Literal]) -> Vec<Literal> {
    goal.iter()
        .map(|l| {
            let p = l.atom.pred.as_str().to_lowercase();
            let args = &l.atom.args;
            let atom = match (p.as_str(), args.len()) {
                ("on_table" | "on_coffee_maker", 2) => Atom::new("on", args.clone()),
                ("in_fridge" | "in_bin" | "in_remote", 2) => Atom::new("in", args.clone()),
                ("holding", 2) => Atom::new("held", [args[1].clone()]),
                ("holding", 3) => Atom::new("holding", [args[1].clone(), args[2].clone()]),
                ("robot_at_node" | "rob_at_node", 2) => Atom::new("robot_at", [args[1].clone()]),
                ("object_at_node" | "obj_at_node", 2) => Atom::new("at", args.clone()),
                _ => l.atom.clone(),
            };
            Literal { atom, positive: l.positive }
        })
        .collect()
}

/// Hops for a move, or the violation explaining why none is usable.
fn route(w: &WorldState, to: &str) -> Result<Vec<String>, Violation> {
    let m = w.map();
    let (Some(src), Some(dst)) = (m.index_of(&w.robot_at), m.index_of(to)) else {
        return Err(Violation { code: FailureCode::UnknownObject, detail: format!("no node {to}") });
    };
    let passable = |k: usize| {
        let e = &m.edges()[k];
        e.door == DoorState::None || w.door(&e.a, &e.b) != Some(DoorState::Closed)
    };
    if let Some(p) = shortest_paths_with(m, src, passable).path_to(dst) {
        return Ok(p[1..].iter().map(|&i| m.name(i).to_string()).collect());
    }
    match shortest_path(m, &w.robot_at, to, DoorMode::DoorsOpen) {
        Some((_, p)) => Ok(p[1..].to_vec()),
        None => Err(Violation { code: FailureCode::Disconnected, detail: format!("{to} is unreachable") }),
    }
}

/// Runs the actions and returns the outcome together with the final state.
pub fn execute(w: &WorldState, actions: &[EmuAction], goal: &[Literal], opts: RunOptions) -> (EpisodeResult, WorldState) {
    let mut w = w.clone();
    let mut res = EpisodeResult { success: false, failure: None, executed_steps: 0, high_level_steps: 0, total_cost: 0.0 };
    let (grounded, missing) = if opts.ground_names {
        let (g, _, missing) = ground_partial(actions, &w);
        (Some(g), missing)
    } else {
        (None, vec![])
    };
    let actions = grounded.as_deref().unwrap_or(actions);
    let mut kinds = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        let outcome = if let Some(u) = missing.iter().find(|u| u.step == i) {
            Err(Violation { code: FailureCode::UnknownObject, detail: format!("{} matches nothing at {}", u.name, u.node) })
        } else if a.kind == ActionKind::Move && opts.expand_moves && a.robot == w.robot {
            route(&w, &a.target).and_then(|hops| {
                for h in hops {
                    res.total_cost += w.hop(&h)?;
                    res.executed_steps += 1;
                    kinds.push(ActionKind::Move);
                }
                Ok(())
            })
        } else {
            let cost_before = w.robot_at.clone();
            w.apply(a).map(|_| {
                res.executed_steps += 1;
                kinds.push(a.kind);
                res.total_cost += match a.kind {
                    ActionKind::Move => w.map().edge_between(&cost_before, &w.robot_at).map_or(0.0, |e| e.cost),
                    _ => 1.0,
                };
            })
        };
        if let Err(v) = outcome {
            res.high_level_steps = collapse_moves(kinds.iter().copied());
            res.failure = Some(Failure { code: v.code, step: i, high_level_step: high_level_index(actions, i), detail: v.detail });
            return (res, w);
        }
    }
    res.high_level_steps = collapse_moves(kinds.iter().copied());
    let unmet = goal_holds(&w, goal);
    if unmet.is_empty() {
        res.success = true;
    } else {
        let detail = unmet.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
        res.failure = Some(Failure {
            code: FailureCode::GoalUnmet,
            step: actions.len(),
            high_level_step: collapse_moves(actions.iter().map(|a| a.kind)),
            detail,
        });
    }
    (res, w)
}

pub fn run(w: &WorldState, actions: &[EmuAction], goal: &[Literal], opts: RunOptions) -> EpisodeResult {
    execute(w, actions, goal, opts).0
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("no results to aggregate")]
    EmptyInput,
    #[error("no task succeeded under both methods")]
    EmptyIntersection,
    #[error("a baseline plan has zero steps")]
    ZeroBaseSteps,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(xs: &[f64]) -> Result<MeanStd, MetricError> {
    if xs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(MeanStd { mean, std })
}

/// Success percentage per run, then mean and deviation over runs.
pub fn success_rate(runs: &[Vec<bool>]) -> Result<MeanStd, MetricError> {
    if runs.iter().all(|r| r.is_empty()) {
        return Err(MetricError::EmptyInput);
    }
    let per_run: Vec<f64> = runs
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| 100.0 * r.iter().filter(|s| **s).count() as f64 / r.len() as f64)
        .collect();
    mean_std(&per_run)
}

/// Average relative step reduction against a baseline, in percent, over
/// (baseline steps, our steps) pairs of tasks both methods solved.
pub fn rpqg(pairs: &[(usize, usize)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyIntersection);
    }
    if pairs.iter().any(|(b, _)| *b == 0) {
        return Err(MetricError::ZeroBaseSteps);
    }
    let sum: f64 = pairs.iter().map(|&(b, o)| (b as f64 - o as f64) / b as f64).sum();
    Ok(sum / pairs.len() as f64 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rpqg_values() {
        assert_eq!(rpqg(&[(10, 9)]).unwrap(), 10.0);
        assert_eq!(rpqg(&[(10, 10), (20, 10)]).unwrap(), 25.0);
        assert!(rpqg(&[(10, 11)]).unwrap() < 0.0);
        assert_eq!(rpqg(&[]), Err(MetricError::EmptyIntersection));
        assert_eq!(rpqg(&[(0, 1)]), Err(MetricError::ZeroBaseSteps));
    }

    #[test]
    fn success_rate_values() {
        let r = success_rate(&[vec![true, false, true, true]]).unwrap();
        assert_eq!(r.mean, 75.0);
        assert_eq!(r.to_string(), "75.00 ± 0.00");
        assert_eq!(success_rate(&[vec![true; 3]]).unwrap().mean, 100.0);
        assert_eq!(success_rate(&[]), Err(MetricError::EmptyInput));
        let r = success_rate(&[vec![true, true], vec![true, false], vec![true, true], vec![false, false]]).unwrap();
        assert_eq!(r.mean, 62.5);
        assert_eq!(format!("{r}"), "62.50 ± 47.87");
    }

    #[test]
    fn collapse() {
        use ActionKind::*;
        assert_eq!(collapse_moves([Move, Move, Pick, Move, PlaceOn, Move]), 5);
        assert_eq!(collapse_moves([]), 0);
    }
}
