use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expand::NameTable;
use crate::pddl::Plan;

use super::Arms;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Pick,
    PlaceIn,
    PlaceOn,
    PlaceUnder,
    Open,
    Close,
    Pour,
    Cut,
    Stir,
    Scoop,
    Fold,
    Wipe,
    TurnOn,
    TurnOff,
    HangOn,
    OpenDoor,
    Move,
}

impl ActionKind {
    pub const ALL: [ActionKind; 17] = [
        ActionKind::Pick,
        ActionKind::PlaceIn,
        ActionKind::PlaceOn,
        ActionKind::PlaceUnder,
        ActionKind::Open,
        ActionKind::Close,
        ActionKind::Pour,
        ActionKind::Cut,
        ActionKind::Stir,
        ActionKind::Scoop,
        ActionKind::Fold,
        ActionKind::Wipe,
        ActionKind::TurnOn,
        ActionKind::TurnOff,
        ActionKind::HangOn,
        ActionKind::OpenDoor,
        ActionKind::Move,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Pick => "pick",
            ActionKind::PlaceIn => "place_in",
            ActionKind::PlaceOn => "place_on",
            ActionKind::PlaceUnder => "place_under",
            ActionKind::Open => "open",
            ActionKind::Close => "close",
            ActionKind::Pour => "pour",
            ActionKind::Cut => "cut",
            ActionKind::Stir => "stir",
            ActionKind::Scoop => "scoop",
            ActionKind::Fold => "fold",
            ActionKind::Wipe => "wipe",
            ActionKind::TurnOn => "turn_on",
            ActionKind::TurnOff => "turn_off",
            ActionKind::HangOn => "hang_on",
            ActionKind::OpenDoor => "open_door",
            ActionKind::Move => "move",
        }
    }

    /// Accepts `place_on`, `PlaceOn`, `placeon`.
    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s.chars().filter(|c| *c != '_').collect::<String>().to_lowercase();
        ActionKind::ALL.into_iter().find(|k| k.name().replace('_', "") == key)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmuAction {
    pub kind: ActionKind,
    pub robot: String,
    /// Absent for moves and for single-arm plans that name no hand.
    pub hand: Option<String>,
    /// Object id, node name for moves, or door name.
    pub target: String,
    /// Door endpoints when the source plan names them directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub door: Option<(String, String)>,
}

impl EmuAction {
    pub fn new(kind: ActionKind, robot: &str, hand: Option<&str>, target: &str) -> Self {
        EmuAction {
            kind,
            robot: robot.to_lowercase(),
            hand: hand.map(str::to_lowercase),
            target: target.to_lowercase(),
            door: None,
        }
    }
}

impl fmt::Display for EmuAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, &self.hand) {
            (ActionKind::Move, _) | (_, None) => write!(f, "{}({}, {})", self.kind, self.robot, self.target),
            (_, Some(h)) => write!(f, "{}({}, {}, {})", self.kind, self.robot, h, self.target),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Arg(usize),
    /// Door given by its two endpoint arguments.
    Door(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpEntry {
    pub kind: ActionKind,
    pub robot: usize,
    #[serde(default)]
    pub hand: Option<usize>,
    pub target: TargetSpec,
}

/// Operator name to action kind plus the argument positions it needs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OperatorTable(pub BTreeMap<String, OpEntry>);

/// Base operators: (name, kind, target index with the robot at 0).
const BASE_OPS: &[(&str, ActionKind, usize)] = &[
    ("fold_on_table", ActionKind::Fold, 1),
    ("put_in_bin", ActionKind::PlaceIn, 2),
    ("wipe_table", ActionKind::Wipe, 2),
    ("turn_on_faucet", ActionKind::TurnOn, 1),
    ("wash_under_faucet", ActionKind::PlaceUnder, 2),
    ("turn_off_faucet", ActionKind::TurnOff, 1),
    ("place_on_coffee_maker", ActionKind::PlaceOn, 2),
    ("pick_from_coffee_maker", ActionKind::Pick, 1),
    ("fill_coffee_into_cup", ActionKind::TurnOn, 2),
    ("open_laptop", ActionKind::Open, 1),
    ("close_laptop", ActionKind::Close, 1),
    ("turn_on_laptop", ActionKind::TurnOn, 1),
    ("turn_on_lamp", ActionKind::TurnOn, 1),
    ("close_window", ActionKind::Close, 1),
    ("open_window", ActionKind::Open, 1),
    ("open_curtain", ActionKind::Open, 1),
    ("close_curtain", ActionKind::Close, 1),
    ("wipe_blackboard", ActionKind::Wipe, 2),
    ("open_remote", ActionKind::Open, 1),
    ("close_remote", ActionKind::Close, 1),
    ("place_in_remote", ActionKind::PlaceIn, 2),
    ("pick_from_remote", ActionKind::Pick, 1),
    ("pick_from_table", ActionKind::Pick, 1),
    ("place_on_table", ActionKind::PlaceOn, 2),
    ("open_fridge", ActionKind::Open, 1),
    ("close_fridge", ActionKind::Close, 1),
    ("pick_from_fridge", ActionKind::Pick, 1),
    ("place_in_fridge", ActionKind::PlaceIn, 2),
];

impl OperatorTable {
    /// Table for the shipped base domain after expansion. Dual-arm
    /// operators carry the hand right after the robot.
    pub fn builtin(arms: Arms, names: &NameTable) -> Self {
        let shift = usize::from(arms == Arms::Dual);
        let hand = (arms == Arms::Dual).then_some(1);
        let mut t = BTreeMap::new();
        for &(name, kind, target) in BASE_OPS {
            t.insert(name.to_string(), OpEntry { kind, robot: 0, hand, target: TargetSpec::Arg(target + shift) });
        }
        t.insert(
            names.move_robot.clone(),
            OpEntry { kind: ActionKind::Move, robot: 0, hand: None, target: TargetSpec::Arg(2) },
        );
        t.insert(
            names.open_door.clone(),
            OpEntry { kind: ActionKind::OpenDoor, robot: 0, hand, target: TargetSpec::Door(1 + shift, 2 + shift) },
        );
        OperatorTable(t)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn get(&self, op: &str) -> Option<&OpEntry> {
        self.0.get(&op.to_lowercase())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionParseError {
    #[error("step {step}: operator {name} has no mapping")]
    UnmappedOperator { step: usize, name: String },
    #[error("step {step}: {name} has no argument {index}")]
    IndexOutOfRange { step: usize, name: String, index: usize },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Maps each operator of a PDDL plan to an emulator action.
pub fn parse_actions(plan: &Plan, table: &OperatorTable) -> Result<Vec<EmuAction>, ActionParseError> {
    plan.steps
        .iter()
        .enumerate()
        .map(|(step, s)| {
            let name = s.name.as_str().to_lowercase();
            let e = table.get(&name).ok_or_else(|| ActionParseError::UnmappedOperator { step, name: name.clone() })?;
            let arg = |i: usize| {
                s.args
                    .get(i)
                    .map(|a| a.as_str().to_lowercase())
                    .ok_or_else(|| ActionParseError::IndexOutOfRange { step, name: name.clone(), index: i })
            };
            let robot = arg(e.robot)?;
            let hand = e.hand.map(arg).transpose()?;
            let (target, door) = match e.target {
                TargetSpec::Arg(i) => (arg(i)?, None),
                TargetSpec::Door(i, j) => {
                    let (a, b) = (arg(i)?, arg(j)?);
                    (format!("door_{a}_{b}"), Some((a, b)))
                }
            };
            Ok(EmuAction { kind: e.kind, robot, hand, target, door })
        })
        .collect()
}

/// Parses call-style lines such as `pick(robot, left_hand, apple)`,
/// `Pick(hand, apple)` or `Move(pose_4)`. Numbering, bullets, blank lines
/// and `#`/`;` comments are skipped.
pub fn parse_freeform(text: &str, robot: &str) -> Result<Vec<EmuAction>, ActionParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        s = s.trim_start_matches(['-', '*', '•']).trim_start();
        if let Some(rest) = s.split_once(['.', ')']).filter(|(n, _)| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit())) {
            s = rest.1.trim_start();
        }
        let err = |msg: &str| ActionParseError::Syntax { line, msg: msg.into() };
        let (name, rest) = s.split_once('(').ok_or_else(|| err("expected name(args)"))?;
        let inner = rest.trim_end().strip_suffix(')').ok_or_else(|| err("missing closing parenthesis"))?;
        let kind = ActionKind::parse(name.trim()).ok_or_else(|| err(&format!("unknown action {}", name.trim())))?;
        let args: Vec<String> = inner.split(',').map(|a| a.trim().to_lowercase()).filter(|a| !a.is_empty()).collect();
        let robot_l = robot.to_lowercase();
        let a = match (kind, args.as_slice()) {
            (ActionKind::Move, [to]) => EmuAction::new(kind, &robot_l, None, to),
            (ActionKind::Move, [r, to]) => EmuAction::new(kind, r, None, to),
            (ActionKind::Move, _) => return Err(err("move takes (robot, node) or (node)")),
            (_, [x, target]) if *x == robot_l => EmuAction::new(kind, x, None, target),
            (_, [hand, target]) => EmuAction::new(kind, &robot_l, Some(hand), target),
            (_, [r, hand, target]) => EmuAction::new(kind, r, Some(hand), target),
            _ => return Err(err("expected (robot, hand, target) or (hand, target)")),
        };
        out.push(a);
    }
    Ok(out)
}

/// PDDL plan if the first instruction line starts with `(`, call syntax otherwise.
pub fn parse_any(text: &str, table: &OperatorTable, robot: &str) -> Result<Vec<EmuAction>, ActionParseError> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with(';') && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with('(') => {
            let plan = crate::pddl::parse_plan(text)
                .map_err(|e| ActionParseError::Syntax { line: e.line, msg: format!("malformed plan line {:?}", e.text) })?;
            parse_actions(&plan, table)
        }
        _ => parse_freeform(text, robot),
    }
}
