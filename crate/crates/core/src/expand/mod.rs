//! Rewrites a manipulation-only domain into a mobile-manipulation domain.
//!
//! Stages run in a fixed order: anchor detection, the optional dual-arm
//! lift, navigation (node constraints, `move_robot`, optionally
//! `open_door`) and action costs.

mod anchors;
mod bimanual;
mod costs;
mod navigation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{Domain, PddlError};

pub use anchors::{detect_anchors, AnchorAlias, AnchorBinding, AnchorKind, HAND_FREE, HOLDING};
pub use bimanual::expand_bimanual;
pub use costs::add_costs;
pub use navigation::expand_navigation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpandError {
    #[error("action {action} mentions neither hand_free nor holding")]
    NoAnchorFound { action: String },
    #[error("action {action} uses more than one robot variable in its anchors: {vars:?}")]
    AmbiguousRobotVariable { action: String, vars: Vec<String> },
    #[error("name {name} is already used by the input domain")]
    NameCollision { name: String },
    #[error("alias {alias}: {msg}")]
    BadAlias { alias: String, msg: String },
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// Names introduced by the expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameTable {
    pub rob_at_node: String,
    pub obj_at_node: String,
    pub rob_has_hand: String,
    pub connected: String,
    pub has_door: String,
    pub travel_cost: String,
    pub total_cost: String,
    pub move_robot: String,
    pub open_door: String,
}

impl NameTable {
    /// Long-form names (`robot_at_node`, `object_at_node`, ...).
    pub fn long() -> Self {
        NameTable {
            rob_at_node: "robot_at_node".into(),
            obj_at_node: "object_at_node".into(),
            rob_has_hand: "robot_has_hand".into(),
            connected: "connected".into(),
            has_door: "has_door".into(),
            travel_cost: "travel_cost".into(),
            total_cost: "total-cost".into(),
            move_robot: "move_robot".into(),
            open_door: "open_door".into(),
        }
    }

    /// Short-form names (`rob_at_node`, `obj_at_node`, ...).
    pub fn short() -> Self {
        NameTable {
            rob_at_node: "rob_at_node".into(),
            obj_at_node: "obj_at_node".into(),
            rob_has_hand: "rob_has_hand".into(),
            ..Self::long()
        }
    }

    pub fn by_label(label: &str) -> Option<Self> {
        match label {
            "long" => Some(Self::long()),
            "short" => Some(Self::short()),
            _ => None,
        }
    }
}

impl Default for NameTable {
    fn default() -> Self {
        Self::long()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionOptions {
    pub bimanual: bool,
    pub doors: bool,
    pub costs: bool,
    pub names: NameTable,
    pub node_var: String,
    pub hand_var: String,
    pub aliases: Vec<AnchorAlias>,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            bimanual: true,
            doors: true,
            costs: true,
            names: NameTable::default(),
            node_var: "?node".into(),
            hand_var: "?hand".into(),
            aliases: vec![],
        }
    }
}

/// Runs every enabled stage and validates the result.
pub fn expand_all(d: &Domain, o: &ExpansionOptions) -> Result<(Domain, AnchorBinding), ExpandError> {
    check_collisions(d, o)?;
    let (mut out, binding) = detect_anchors(d, &o.aliases)?;
    if o.bimanual {
        out = expand_bimanual(&out, &binding, o)?;
    }
    out = expand_navigation(&out, o)?;
    if o.costs {
        out = add_costs(&out, &o.names);
    }
    out.validate()?;
    Ok((out, binding))
}

fn check_collisions(d: &Domain, o: &ExpansionOptions) -> Result<(), ExpandError> {
    let n = &o.names;
    let mut preds = vec![&n.rob_at_node, &n.obj_at_node, &n.connected];
    if o.bimanual {
        preds.push(&n.rob_has_hand);
    }
    if o.doors {
        preds.push(&n.has_door);
    }
    let mut actions = vec![&n.move_robot];
    if o.doors {
        actions.push(&n.open_door);
    }
    for p in preds {
        if d.predicate(p).is_some() || d.function(p).is_some() {
            return Err(ExpandError::NameCollision { name: p.clone() });
        }
    }
    for a in actions {
        if d.action(a).is_some() {
            return Err(ExpandError::NameCollision { name: a.clone() });
        }
    }
    if o.costs && d.predicate(&n.travel_cost).is_some() {
        return Err(ExpandError::NameCollision { name: n.travel_cost.clone() });
    }
    Ok(())
}
