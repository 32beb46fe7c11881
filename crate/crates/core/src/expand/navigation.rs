use std::collections::BTreeSet;

use crate::pddl::{ActionSchema, Atom, Domain, Literal, Signature, Symbol};

use super::anchors::{is_anchor, robot_var_of, HAND_FREE, HOLDING};
use super::{ExpandError, ExpansionOptions};

fn atom(pred: &str, args: &[&Symbol]) -> Atom {
    Atom { pred: Symbol::from(pred), args: args.iter().map(|s| (*s).clone()).collect() }
}

fn check_free(d: &Domain, name: &str, arity: usize) -> Result<(), ExpandError> {
    match d.predicate(name) {
        Some(p) if p.arity() != arity => Err(ExpandError::NameCollision { name: name.to_string() }),
        _ => Ok(()),
    }
}

/// Ties every anchored action to a map node and adds `move_robot` (and
/// `open_door` when doors are enabled).
pub fn expand_navigation(d: &Domain, o: &ExpansionOptions) -> Result<Domain, ExpandError> {
    let n = &o.names;
    check_free(d, &n.rob_at_node, 2)?;
    check_free(d, &n.obj_at_node, 2)?;
    check_free(d, &n.connected, 2)?;
    if o.doors {
        check_free(d, &n.has_door, 2)?;
    }
    for a in [&n.move_robot, &n.open_door] {
        if d.action(a).is_some() {
            return Err(ExpandError::NameCollision { name: a.clone() });
        }
    }
    let bimanual = d.predicate(HAND_FREE).is_some_and(|p| p.arity() == 2);

    let mut out = d.clone();
    for a in &mut out.actions {
        locate(a, o, bimanual)?;
    }
    out.actions.push(move_robot(o));
    if o.doors {
        out.actions.push(open_door(o, bimanual));
        out.require(":negative-preconditions");
        if out.predicate(HAND_FREE).is_none() {
            out.declare_predicate(Signature::new(HAND_FREE, ["?r"]));
        }
    }
    out.declare_predicate(Signature::new(n.rob_at_node.as_str(), ["?r", "?n"]));
    out.declare_predicate(Signature::new(n.obj_at_node.as_str(), ["?o", "?n"]));
    out.declare_predicate(Signature::new(n.connected.as_str(), ["?n1", "?n2"]));
    if o.doors {
        out.declare_predicate(Signature::new(n.has_door.as_str(), ["?n1", "?n2"]));
    }
    Ok(out)
}

fn locate(a: &mut ActionSchema, o: &ExpansionOptions, bimanual: bool) -> Result<(), ExpandError> {
    let Some(robot) = robot_var_of(a)? else { return Ok(()) };
    let mut hands = BTreeSet::new();
    if bimanual {
        for l in a.literals() {
            if (is_anchor(&l.atom.pred) || l.atom.pred.is(&o.names.rob_has_hand)) && l.atom.args.len() >= 2 {
                hands.insert(l.atom.args[1].clone());
            }
        }
    }
    let held_obj = |lits: &[Literal], positive: bool| -> BTreeSet<Symbol> {
        lits.iter()
            .filter(|l| l.positive == positive && l.atom.pred.is(HOLDING))
            .filter_map(|l| l.atom.args.last().cloned())
            .collect()
    };
    let held_before = held_obj(&a.pre, true);
    let picked = held_obj(&a.eff, true);
    let released = held_obj(&a.eff, false);

    let node = a.fresh_var(&o.node_var);
    let objects: Vec<Symbol> = a.params.iter().filter(|p| **p != robot && !hands.contains(*p)).cloned().collect();
    a.params.push(node.clone());
    a.add_pre(Literal::pos(atom(&o.names.rob_at_node, &[&robot, &node])));
    let at = |obj: &Symbol| atom(&o.names.obj_at_node, &[obj, &node]);
    for obj in &objects {
        if !held_before.contains(obj) {
            a.add_pre(Literal::pos(at(obj)));
        }
    }
    for obj in &objects {
        if picked.contains(obj) {
            a.add_eff(Literal::neg(at(obj)));
        }
        if released.contains(obj) {
            a.add_eff(Literal::pos(at(obj)));
        }
    }
    Ok(())
}

fn move_robot(o: &ExpansionOptions) -> ActionSchema {
    let n = &o.names;
    let (r, from, to) = (Symbol::from("?r"), Symbol::from("?from"), Symbol::from("?to"));
    let mut a = ActionSchema::new(n.move_robot.as_str());
    a.params = vec![r.clone(), from.clone(), to.clone()];
    a.pre.push(Literal::pos(atom(&n.rob_at_node, &[&r, &from])));
    a.pre.push(Literal::pos(atom(&n.connected, &[&from, &to])));
    a.eff.push(Literal::pos(atom(&n.rob_at_node, &[&r, &to])));
    a.eff.push(Literal::neg(atom(&n.rob_at_node, &[&r, &from])));
    a
}

fn open_door(o: &ExpansionOptions, bimanual: bool) -> ActionSchema {
    let n = &o.names;
    let (r, h, from, to) = (Symbol::from("?r"), Symbol::from(o.hand_var.as_str()), Symbol::from("?from"), Symbol::from("?to"));
    let mut a = ActionSchema::new(n.open_door.as_str());
    if bimanual {
        a.params = vec![r.clone(), h.clone(), from.clone(), to.clone()];
        a.pre.push(Literal::pos(atom(&n.rob_has_hand, &[&r, &h])));
    } else {
        a.params = vec![r.clone(), from.clone(), to.clone()];
    }
    a.pre.push(Literal::pos(atom(&n.rob_at_node, &[&r, &from])));
    a.pre.push(Literal::pos(atom(&n.has_door, &[&from, &to])));
    let free = if bimanual { atom(HAND_FREE, &[&r, &h]) } else { atom(HAND_FREE, &[&r]) };
    a.pre.push(Literal::pos(free));
    a.pre.push(Literal::neg(atom(&n.connected, &[&from, &to])));
    a.eff.push(Literal::pos(atom(&n.connected, &[&from, &to])));
    a.eff.push(Literal::pos(atom(&n.connected, &[&to, &from])));
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse_domain;

    #[test]
    fn held_objects_are_not_located() {
        let d = parse_domain(
            "(define (domain t) (:predicates (hand_free ?r) (holding ?r ?o) (table ?t) (on ?o ?t))
             (:action pick :parameters (?r ?o ?t) :precondition (and (hand_free ?r) (on ?o ?t) (table ?t))
               :effect (and (holding ?r ?o) (not (hand_free ?r)) (not (on ?o ?t))))
             (:action place :parameters (?r ?o ?t) :precondition (and (holding ?r ?o) (table ?t))
               :effect (and (on ?o ?t) (hand_free ?r) (not (holding ?r ?o)))))",
        )
        .unwrap();
        let o = ExpansionOptions { doors: false, ..Default::default() };
        let out = expand_navigation(&d, &o).unwrap();
        let pick = out.action("pick").unwrap();
        assert!(pick.pre.contains(&Literal::pos(Atom::new("object_at_node", ["?o", "?node"]))));
        assert!(pick.eff.contains(&Literal::neg(Atom::new("object_at_node", ["?o", "?node"]))));
        let place = out.action("place").unwrap();
        assert!(!place.pre.contains(&Literal::pos(Atom::new("object_at_node", ["?o", "?node"]))));
        assert!(place.eff.contains(&Literal::pos(Atom::new("object_at_node", ["?o", "?node"]))));
        assert!(place.pre.contains(&Literal::pos(Atom::new("object_at_node", ["?t", "?node"]))));
        assert!(out.action("open_door").is_none());
        out.validate().unwrap();
    }

    #[test]
    fn existing_predicate_with_other_arity_collides() {
        let d = parse_domain("(define (domain t) (:predicates (connected ?a)))").unwrap();
        assert!(matches!(expand_navigation(&d, &ExpansionOptions::default()), Err(ExpandError::NameCollision { .. })));
    }
}
