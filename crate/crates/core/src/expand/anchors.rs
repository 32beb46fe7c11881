use std::collections::BTreeMap;

use crate::pddl::{Domain, Literal, Signature, Symbol};

use super::ExpandError;

pub const HAND_FREE: &str = "hand_free";
pub const HOLDING: &str = "holding";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorKind {
    HandFree,
    Holding,
}

impl AnchorKind {
    pub fn canonical(self) -> &'static str {
        match self {
            AnchorKind::HandFree => HAND_FREE,
            AnchorKind::Holding => HOLDING,
        }
    }

    /// Arity in a single-arm domain.
    fn arity(self) -> usize {
        match self {
            AnchorKind::HandFree => 1,
            AnchorKind::Holding => 2,
        }
    }
}

/// Maps a domain-specific predicate onto a canonical anchor. An alias one
/// argument short of the canonical arity has no robot argument; one is
/// added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchorAlias {
    pub from: String,
    pub to: AnchorKind,
}

impl AnchorAlias {
    /// Parses `name=hand_free` or `name=holding`.
    pub fn parse(s: &str) -> Option<Self> {
        let (from, to) = s.split_once('=')?;
        let to = match to.trim() {
            HAND_FREE => AnchorKind::HandFree,
            HOLDING => AnchorKind::Holding,
            _ => return None,
        };
        Some(AnchorAlias { from: from.trim().to_string(), to })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnchorBinding {
    /// Robot variable of every action.
    pub robot_var: BTreeMap<Symbol, Symbol>,
    /// Number of literals rewritten through aliases.
    pub alias_rewrites: usize,
}

pub(crate) fn is_anchor(pred: &Symbol) -> bool {
    pred.is(HAND_FREE) || pred.is(HOLDING)
}

/// First argument of the first anchor literal, checking all anchors agree.
pub(crate) fn robot_var_of(a: &crate::pddl::ActionSchema) -> Result<Option<Symbol>, ExpandError> {
    let mut vars: Vec<Symbol> = Vec::new();
    for l in a.literals().filter(|l| is_anchor(&l.atom.pred)) {
        if let Some(v) = l.atom.args.first() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    match vars.len() {
        0 => Ok(None),
        1 => Ok(vars.pop()),
        _ => Err(ExpandError::AmbiguousRobotVariable {
            action: a.name.to_string(),
            vars: vars.iter().map(ToString::to_string).collect(),
        }),
    }
}

/// Applies aliases, then finds the robot variable of every action.
pub fn detect_anchors(d: &Domain, aliases: &[AnchorAlias]) -> Result<(Domain, AnchorBinding), ExpandError> {
    let mut out = d.clone();
    let mut binding = AnchorBinding::default();

    for alias in aliases {
        let canonical = alias.to.canonical();
        if alias.from.eq_ignore_ascii_case(canonical) {
            continue;
        }
        let Some(decl) = out.predicate(&alias.from).cloned() else {
            return Err(ExpandError::BadAlias { alias: alias.from.clone(), msg: "not declared".into() });
        };
        let robotless = match decl.arity() {
            n if n == alias.to.arity() => false,
            n if n + 1 == alias.to.arity() => true,
            n => {
                return Err(ExpandError::BadAlias {
                    alias: alias.from.clone(),
                    msg: format!("arity {n} does not fit {canonical}"),
                })
            }
        };
        for a in &mut out.actions {
            if !a.literals().any(|l| l.atom.pred.is(&alias.from)) {
                continue;
            }
            let robot = if robotless {
                match robot_var_of(a)? {
                    Some(r) => r,
                    None => {
                        let r = a.fresh_var("?r");
                        a.params.insert(0, r.clone());
                        r
                    }
                }
            } else {
                Symbol::from("")
            };
            let fix = |l: &mut Literal, count: &mut usize| {
                if l.atom.pred.is(&alias.from) {
                    l.atom.pred = Symbol::from(canonical);
                    if robotless {
                        l.atom.args.insert(0, robot.clone());
                    }
                    *count += 1;
                }
            };
            for l in a.pre.iter_mut().chain(a.eff.iter_mut()) {
                fix(l, &mut binding.alias_rewrites);
            }
        }
        out.predicates.retain(|p| !p.name.is(&alias.from));
        let params: Vec<&str> = match alias.to {
            AnchorKind::HandFree => vec!["?r"],
            AnchorKind::Holding => vec!["?r", "?o"],
        };
        if out.predicate(canonical).is_none() {
            out.predicates.push(Signature::new(canonical, params));
        }
    }

    for a in &out.actions {
        match robot_var_of(a)? {
            Some(r) => {
                binding.robot_var.insert(a.name.clone(), r);
            }
            None => return Err(ExpandError::NoAnchorFound { action: a.name.to_string() }),
        }
    }
    Ok((out, binding))
}
