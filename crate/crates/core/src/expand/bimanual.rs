use crate::pddl::{Atom, Domain, Literal, Signature, Symbol};

use super::anchors::{is_anchor, robot_var_of, AnchorBinding, HAND_FREE, HOLDING};
use super::{ExpandError, ExpansionOptions};

/// Gives every anchored action a hand parameter right after its robot
/// variable and threads it through `hand_free` and `holding`.
pub fn expand_bimanual(d: &Domain, _binding: &AnchorBinding, o: &ExpansionOptions) -> Result<Domain, ExpandError> {
    let has_hand = o.names.rob_has_hand.as_str();
    if d.predicate(has_hand).is_some() {
        return Err(ExpandError::NameCollision { name: has_hand.to_string() });
    }
    let mut out = d.clone();
    for a in &mut out.actions {
        let Some(robot) = robot_var_of(a)? else { continue };
        let hand = a.fresh_var(&o.hand_var);
        let at = a.params.iter().position(|p| *p == robot).map_or(0, |i| i + 1);
        a.params.insert(at, hand.clone());
        for l in a.pre.iter_mut().chain(a.eff.iter_mut()) {
            if is_anchor(&l.atom.pred) && l.atom.args.first() == Some(&robot) {
                l.atom.args.insert(1, hand.clone());
            }
        }
        let has = Literal::pos(Atom { pred: Symbol::from(has_hand), args: vec![robot, hand] });
        a.pre.insert(0, has);
    }
    out.declare_predicate(Signature::new(HAND_FREE, ["?r", "?h"]));
    out.declare_predicate(Signature::new(HOLDING, ["?r", "?h", "?o"]));
    out.declare_predicate(Signature::new(has_hand, ["?r", "?h"]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::detect_anchors;
    use crate::pddl::parse_domain;

    #[test]
    fn hand_follows_robot() {
        let d = parse_domain(
            "(define (domain t) (:predicates (hand_free ?r) (holding ?r ?o) (bin ?b) (in ?o ?b))
             (:action put :parameters (?r ?o ?b) :precondition (and (holding ?r ?o) (bin ?b))
               :effect (and (in ?o ?b) (hand_free ?r) (not (holding ?r ?o)))))",
        )
        .unwrap();
        let (d, b) = detect_anchors(&d, &[]).unwrap();
        let out = expand_bimanual(&d, &b, &ExpansionOptions::default()).unwrap();
        let a = out.action("put").unwrap();
        let names: Vec<&str> = a.params.iter().map(Symbol::as_str).collect();
        assert_eq!(names, ["?r", "?hand", "?o", "?b"]);
        assert_eq!(a.pre[0], Literal::pos(Atom::new("robot_has_hand", ["?r", "?hand"])));
        assert!(a.eff.contains(&Literal::neg(Atom::new("holding", ["?r", "?hand", "?o"]))));
        out.validate().unwrap();
    }
}
