use std::collections::{BTreeMap, BTreeSet};

use super::*;

fn rename(atom: &Atom, map: &BTreeMap<Symbol, Symbol>) -> String {
    let mut s = format!("({}", atom.pred.key());
    for a in &atom.args {
        s.push(' ');
        s.push_str(&map.get(a).unwrap_or(a).key());
    }
    s.push(')');
    s
}

fn lit_set(lits: &[Literal], map: &BTreeMap<Symbol, Symbol>) -> BTreeSet<String> {
    lits.iter()
        .map(|l| if l.positive { rename(&l.atom, map) } else { format!("(not {})", rename(&l.atom, map)) })
        .collect()
}

fn cost_set(costs: &[NumericEffect], map: &BTreeMap<Symbol, Symbol>) -> BTreeSet<String> {
    costs
        .iter()
        .map(|c| match &c.amount {
            CostExpr::Const(v) => format!("{}:{v}", c.target.key()),
            CostExpr::Fluent(f) => format!("{}:{}", c.target.key(), rename(f, map)),
        })
        .collect()
}

/// Describes the first difference between two schemas, treating parameter
/// lists positionally up to renaming and literal lists as sets.
pub fn schema_difference(a: &ActionSchema, b: &ActionSchema) -> Option<String> {
    if a.name != b.name {
        return Some(format!("names differ: {} vs {}", a.name, b.name));
    }
    if a.params.len() != b.params.len() {
        return Some(format!("{}: {} vs {} parameters", a.name, a.params.len(), b.params.len()));
    }
    let map: BTreeMap<Symbol, Symbol> = a.params.iter().cloned().zip(b.params.iter().cloned()).collect();
    let ident = BTreeMap::new();
    let sides = [
        ("precondition", lit_set(&a.pre, &map), lit_set(&b.pre, &ident)),
        ("effect", lit_set(&a.eff, &map), lit_set(&b.eff, &ident)),
        ("cost", cost_set(&a.costs, &map), cost_set(&b.costs, &ident)),
    ];
    for (what, x, y) in sides {
        if x != y {
            let only_a: Vec<_> = x.difference(&y).collect();
            let only_b: Vec<_> = y.difference(&x).collect();
            return Some(format!("{} {what}: only left {only_a:?}, only right {only_b:?}", a.name));
        }
    }
    None
}

pub fn schemas_equal(a: &ActionSchema, b: &ActionSchema) -> bool {
    schema_difference(a, b).is_none()
}

fn sig_set(sigs: &[Signature]) -> BTreeSet<(String, usize)> {
    sigs.iter().map(|s| (s.name.key(), s.arity())).collect()
}

pub fn domain_difference(a: &Domain, b: &Domain) -> Option<String> {
    if sig_set(&a.predicates) != sig_set(&b.predicates) {
        let (x, y) = (sig_set(&a.predicates), sig_set(&b.predicates));
        return Some(format!(
            "predicates differ: only left {:?}, only right {:?}",
            x.difference(&y).collect::<Vec<_>>(),
            y.difference(&x).collect::<Vec<_>>()
        ));
    }
    if sig_set(&a.functions) != sig_set(&b.functions) {
        return Some("functions differ".into());
    }
    let names = |d: &Domain| d.actions.iter().map(|x| x.name.clone()).collect::<BTreeSet<_>>();
    if names(a) != names(b) {
        return Some(format!("action sets differ: {:?} vs {:?}", names(a), names(b)));
    }
    a.actions.iter().find_map(|x| schema_difference(x, b.action(x.name.as_str())?))
}

/// Same predicates, functions and actions, each schema equal up to a
/// consistent renaming of its parameters.
pub fn logically_equal(a: &Domain, b: &Domain) -> bool {
    domain_difference(a, b).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(src: &str) -> ActionSchema {
        let d = parse_domain(&format!(
            "(define (domain t) (:predicates (p ?x ?y) (q ?x)) (:functions (total-cost)) {src})"
        ))
        .unwrap();
        d.actions[0].clone()
    }

    #[test]
    fn equal_under_renaming_and_reordering() {
        let a = schema("(:action a :parameters (?x ?y) :precondition (and (p ?x ?y) (q ?y)) :effect (not (q ?x)))");
        let b = schema("(:action a :parameters (?u ?v) :precondition (and (q ?v) (p ?u ?v)) :effect (not (q ?u)))");
        assert!(schemas_equal(&a, &b));
    }

    #[test]
    fn positional_mapping_matters() {
        let a = schema("(:action a :parameters (?x ?y) :precondition (p ?x ?y) :effect (q ?x))");
        let b = schema("(:action a :parameters (?y ?x) :precondition (p ?x ?y) :effect (q ?x))");
        assert!(!schemas_equal(&a, &b));
    }

    #[test]
    fn cost_difference_detected() {
        let a = schema("(:action a :parameters (?x) :precondition (q ?x) :effect (increase (total-cost) 1))");
        let b = schema("(:action a :parameters (?x) :precondition (q ?x) :effect (increase (total-cost) 2))");
        assert!(schema_difference(&a, &b).unwrap().contains("cost"));
    }
}
