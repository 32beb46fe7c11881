use std::collections::BTreeMap;

use crate::grounding::{GroundingResult, RESERVED_PREDICATES};
use crate::pddl::{Atom, Domain, Literal};

use super::world::{Location, WorldState};

/// (support tag, relation predicate) pairs for objects resting on something.
const ON_RELATIONS: &[(&str, &str)] = &[("table", "on_table"), ("coffee_maker", "on_coffee_maker")];
/// Same for objects inside something.
const IN_RELATIONS: &[(&str, &str)] = &[("fridge", "in_fridge"), ("bin", "in_bin"), ("remote", "in_remote")];

fn unary(d: &Domain, p: &str) -> bool {
    d.predicate(p).is_some_and(|s| s.arity() == 1) && !RESERVED_PREDICATES.contains(&p)
}

fn binary(d: &Domain, p: &str) -> bool {
    d.predicate(p).is_some_and(|s| s.arity() == 2)
}

/// Domain facts describing the given objects: categories from tags,
/// flags, support and containment relations, and links.
pub fn object_facts(w: &WorldState, ids: &[&str], d: &Domain) -> Vec<Atom> {
    let mut out = Vec::new();
    for &id in ids {
        let o = &w.objects[id];
        let mut words: Vec<&str> = Vec::new();
        for t in &o.tags {
            words.push(t);
            if let Some(h) = t.rsplit('_').next() {
                words.push(h);
            }
        }
        words.extend(o.flags.iter().map(String::as_str));
        words.sort();
        words.dedup();
        for p in words {
            if unary(d, p) {
                out.push(Atom::new(p, [id]));
            }
        }
        let (support, table) = match &o.location {
            Location::On(s) => (s, ON_RELATIONS),
            Location::In(c) => (c, IN_RELATIONS),
            _ => continue,
        };
        for (tag, pred) in table {
            if w.objects[support].is_a(&[tag]) && binary(d, pred) {
                out.push(Atom::new(*pred, [id, support.as_str()]));
            }
        }
    }
    for (a, b) in &w.links {
        if ids.contains(&a.as_str()) && ids.contains(&b.as_str()) && binary(d, "link") {
            out.push(Atom::new("link", [a.as_str(), b.as_str()]));
        }
    }
    out
}

/// A grounding read straight from the world for the given nodes: every
/// object there, with its domain facts. The goal is left empty.
pub fn world_grounding(w: &WorldState, nodes: &[String], d: &Domain) -> GroundingResult {
    let mut objects: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut ids = Vec::new();
    for n in nodes {
        let here = w.objects_at(n);
        if !here.is_empty() {
            objects.insert(n.clone(), here.iter().map(|s| s.to_string()).collect());
            ids.extend(here);
        }
    }
    let init = object_facts(w, &ids, d).into_iter().map(Literal::pos).collect();
    GroundingResult { reasoning: "read from the world model".into(), objects, init, goal: vec![] }
}
