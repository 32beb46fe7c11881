use crate::pddl::{Atom, CostExpr, Domain, NumericEffect, Signature, Symbol};

use super::NameTable;

/// `move_robot` pays the travel cost of its edge; every other action pays
/// the domain's constant action cost.
pub fn add_costs(d: &Domain, names: &NameTable) -> Domain {
    let mut out = d.clone();
    let has_move = out.action(&names.move_robot).is_some();
    if has_move {
        out.declare_function(Signature::new(names.travel_cost.as_str(), ["?n1", "?n2"]));
    }
    out.declare_function(Signature::new(names.total_cost.as_str(), Vec::<&str>::new()));
    out.require(":action-costs");
    let unit = out.constant_action_cost;
    for a in &mut out.actions {
        if !a.costs.is_empty() {
            continue;
        }
        let amount = if a.name.is(&names.move_robot) && a.params.len() == 3 {
            CostExpr::Fluent(Atom { pred: Symbol::from(names.travel_cost.as_str()), args: a.params[1..3].to_vec() })
        } else {
            CostExpr::Const(unit)
        };
        a.costs.push(NumericEffect { target: Symbol::from(names.total_cost.as_str()), amount });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{expand_navigation, ExpansionOptions};
    use crate::pddl::parse_domain;

    #[test]
    fn constant_cost_is_configurable() {
        let mut d = parse_domain(
            "(define (domain t) (:predicates (hand_free ?r) (lit ?l))
             (:action on :parameters (?r ?l) :precondition (hand_free ?r) :effect (lit ?l)))",
        )
        .unwrap();
        d.constant_action_cost = 3;
        let d = expand_navigation(&d, &ExpansionOptions::default()).unwrap();
        let out = add_costs(&d, &NameTable::default());
        assert_eq!(out.action("on").unwrap().costs[0].amount, CostExpr::Const(3));
        match &out.action("move_robot").unwrap().costs[0].amount {
            CostExpr::Fluent(f) => assert_eq!(f.to_string(), "(travel_cost ?from ?to)"),
            other => panic!("unexpected {other:?}"),
        }
        out.validate().unwrap();
    }
}
