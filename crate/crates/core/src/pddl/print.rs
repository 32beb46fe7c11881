use std::fmt::Write;

use super::*;

fn sig_line(s: &Signature) -> String {
    let mut out = format!("({}", s.name);
    for p in &s.params {
        out.push(' ');
        out.push_str(p.as_str());
    }
    out.push(')');
    out
}

fn conj<T: fmt::Display>(items: &[T]) -> String {
    match items {
        [] => "(and)".to_string(),
        _ => {
            let body: Vec<String> = items.iter().map(ToString::to_string).collect();
            format!("(and {})", body.join(" "))
        }
    }
}

/// Canonical text: predicates sorted by name, actions in insertion order.
pub fn print_domain(d: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    let mut preds: Vec<&Signature> = d.predicates.iter().collect();
    preds.sort_by(|a, b| a.name.cmp(&b.name));
    out.push_str("  (:predicates\n");
    for p in preds {
        let _ = writeln!(out, "    {}", sig_line(p));
    }
    out.push_str("  )\n");
    if !d.functions.is_empty() {
        out.push_str("  (:functions\n");
        for f in &d.functions {
            let _ = writeln!(out, "    {}", sig_line(f));
        }
        out.push_str("  )\n");
    }
    for a in &d.actions {
        out.push('\n');
        let _ = writeln!(out, "  (:action {}", a.name);
        let params: Vec<&str> = a.params.iter().map(Symbol::as_str).collect();
        let _ = writeln!(out, "    :parameters ({})", params.join(" "));
        let _ = writeln!(out, "    :precondition {}", conj(&a.pre));
        let mut eff: Vec<String> = a.eff.iter().map(ToString::to_string).collect();
        eff.extend(a.costs.iter().map(ToString::to_string));
        let _ = writeln!(out, "    :effect {}", conj(&eff));
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    out.push_str("  (:objects");
    for chunk in p.objects.chunks(8) {
        out.push_str("\n    ");
        let names: Vec<&str> = chunk.iter().map(Symbol::as_str).collect();
        out.push_str(&names.join(" "));
    }
    out.push_str("\n  )\n  (:init\n");
    for a in &p.init {
        let _ = writeln!(out, "    {a}");
    }
    for f in &p.fluents {
        let _ = writeln!(out, "    {f}");
    }
    out.push_str("  )\n");
    out.push_str("  (:goal (and");
    for g in &p.goal {
        let _ = write!(out, "\n    {g}");
    }
    out.push_str("\n  ))\n");
    if let Some(Metric::MinimizeTotalCost) = p.metric {
        let _ = writeln!(out, "  (:metric minimize ({TOTAL_COST}))");
    }
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_round_trip() {
        let src = "(define (domain t) (:requirements :strips :action-costs)
          (:predicates (q ?x) (p ?x ?y))
          (:functions (total-cost))
          (:action a :parameters (?x ?y) :precondition (and (p ?x ?y) (not (q ?x)))
            :effect (and (q ?x) (increase (total-cost) 2)))
          (:action b :parameters () :precondition () :effect ()))";
        let d = parse_domain(src).unwrap();
        let text = print_domain(&d);
        assert!(text.find("    (p ?x ?y)").unwrap() < text.find("    (q ?x)").unwrap());
        let again = parse_domain(&text).unwrap();
        assert!(logically_equal(&d, &again));
        assert_eq!(print_domain(&again), text);
    }

    #[test]
    fn problem_round_trip() {
        let src = "(define (problem p) (:domain t) (:objects a b)
          (:init (p a b) (= (travel_cost a b) 4) (= (total-cost) 0))
          (:goal (and (q a) (not (p a b))))
          (:metric minimize (total-cost)))";
        let p = parse_problem(src).unwrap();
        let again = parse_problem(&print_problem(&p)).unwrap();
        assert_eq!(p, again);
    }
}
