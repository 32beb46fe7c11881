use std::collections::HashSet;

use super::sexpr::{read_all, Sexp};
use super::*;

/// Accepted spelling for the travel-cost function.
const COST_ALIAS: &str = "cost";
const TRAVEL_COST: &str = "travel_cost";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub msg: String,
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = read_all(text)?;
    let root = single_define(&top, "domain")?;
    let items = root.list().unwrap_or_default();
    let mut d = Domain::new(header_name(root, "domain")?);
    d.requirements.clear();

    for sec in &items[2..] {
        let head = sec.head().ok_or_else(|| sec.error("expected a section"))?;
        let body = &sec.list().unwrap_or_default()[1..];
        match head.as_str() {
            ":requirements" => {
                for r in body {
                    let r = r.token().ok_or_else(|| r.error("expected a requirement flag"))?;
                    if r.eq_ignore_ascii_case(":typing") {
                        return Err(PddlError::TypesNotSupported { line: sec.line() });
                    }
                    d.requirements.push(r.to_string());
                }
            }
            ":types" => return Err(PddlError::TypesNotSupported { line: sec.line() }),
            ":predicates" => {
                for p in body {
                    let sig = signature(p)?;
                    if d.predicate(sig.name.as_str()).is_some() {
                        return Err(PddlError::DuplicatePredicate(sig.name.to_string()));
                    }
                    d.predicates.push(sig);
                }
            }
            ":functions" => {
                let mut i = 0;
                while i < body.len() {
                    if body[i].token() == Some("-") {
                        // `- number` annotations on function declarations.
                        i += 2;
                        continue;
                    }
                    let mut sig = signature(&body[i])?;
                    if sig.name.is(COST_ALIAS) {
                        sig.name = Symbol::from(TRAVEL_COST);
                    }
                    d.declare_function(sig);
                    i += 1;
                }
            }
            ":action" => {
                let a = action(sec)?;
                if d.action(a.name.as_str()).is_some() {
                    return Err(PddlError::DuplicateAction(a.name.to_string()));
                }
                d.actions.push(a);
            }
            ":constants" | ":derived" | ":durative-action" | ":constraints" => {
                return Err(PddlError::Unsupported { construct: head, line: sec.line() })
            }
            _ => return Err(PddlError::UnknownDirective { name: head, line: sec.line() }),
        }
    }
    d.validate()?;
    Ok(d)
}

/// Parses a problem, logging any warnings.
pub fn parse_problem(text: &str) -> Result<Problem, PddlError> {
    let (p, warnings) = parse_problem_diag(text)?;
    for w in warnings {
        log::warn!("line {}: {}", w.line, w.msg);
    }
    Ok(p)
}

pub fn parse_problem_diag(text: &str) -> Result<(Problem, Vec<ParseWarning>), PddlError> {
    let top = read_all(text)?;
    let root = single_define(&top, "problem")?;
    let items = root.list().unwrap_or_default();
    let mut p = Problem::new(header_name(root, "problem")?, "");
    let mut warnings = Vec::new();

    for sec in &items[2..] {
        let head = sec.head().ok_or_else(|| sec.error("expected a section"))?;
        let body = &sec.list().unwrap_or_default()[1..];
        match head.as_str() {
            ":domain" => {
                p.domain = Symbol::from(body.first().and_then(Sexp::token).ok_or_else(|| sec.error("missing domain name"))?)
            }
            ":objects" => {
                let mut seen = HashSet::new();
                for o in body {
                    let name = o.token().ok_or_else(|| o.error("expected an object name"))?;
                    if name == "-" {
                        return Err(PddlError::TypesNotSupported { line: o.line() });
                    }
                    if seen.insert(Symbol::from(name)) {
                        p.objects.push(Symbol::from(name));
                    } else {
                        warnings.push(ParseWarning { line: o.line(), msg: format!("duplicate object {name} ignored") });
                    }
                }
            }
            ":init" => {
                let mut seen = HashSet::new();
                for f in body {
                    if f.head().as_deref() == Some("=") {
                        let fv = fluent_value(f)?;
                        if p.fluents.iter().any(|x| x.func == fv.func) {
                            warnings.push(ParseWarning { line: f.line(), msg: format!("duplicate value for {}", fv.func) });
                            p.fluents.retain(|x| x.func != fv.func);
                        }
                        p.fluents.push(fv);
                        continue;
                    }
                    let lit = literal(f)?;
                    if !lit.positive {
                        return Err(f.error("negative literals are not allowed in :init"));
                    }
                    if !lit.atom.is_ground() {
                        return Err(f.error("variables are not allowed in :init"));
                    }
                    if seen.insert(lit.atom.clone()) {
                        p.init.push(lit.atom);
                    } else {
                        warnings.push(ParseWarning { line: f.line(), msg: format!("duplicate init atom {} ignored", lit.atom) });
                    }
                }
            }
            ":goal" => {
                let g = body.first().ok_or_else(|| sec.error("empty goal"))?;
                p.goal = condition(g)?;
                if let Some(l) = p.goal.iter().find(|l| !l.atom.is_ground()) {
                    return Err(g.error(format!("goal literal {l} is not ground")));
                }
            }
            ":metric" => {
                let dir = body.first().and_then(Sexp::token).map(str::to_ascii_lowercase);
                let target = body.get(1).and_then(|t| t.head());
                if dir.as_deref() == Some("minimize") && target.as_deref() == Some(TOTAL_COST) {
                    p.metric = Some(Metric::MinimizeTotalCost);
                } else {
                    return Err(PddlError::Unsupported { construct: "metric".into(), line: sec.line() });
                }
            }
            _ => return Err(PddlError::UnknownDirective { name: head, line: sec.line() }),
        }
    }
    Ok((p, warnings))
}

/// Parses one literal such as `(on_table cup_1 table_1)` or `(not (is_open f))`.
pub fn parse_literal(text: &str) -> Result<Literal, PddlError> {
    let top = read_all(text)?;
    match top.as_slice() {
        [one] => literal(one),
        _ => Err(PddlError::Syntax { line: 1, col: 1, msg: format!("expected one literal in {text:?}") }),
    }
}

/// Parses a conjunction (`(and ...)`, a single literal, or `()`).
pub fn parse_condition(text: &str) -> Result<Vec<Literal>, PddlError> {
    let top = read_all(text)?;
    match top.as_slice() {
        [one] => condition(one),
        [] => Ok(vec![]),
        _ => Err(PddlError::Syntax { line: 1, col: 1, msg: "expected one condition".into() }),
    }
}

fn single_define<'a>(top: &'a [Sexp], kind: &str) -> Result<&'a Sexp, PddlError> {
    let root = match top {
        [one] => one,
        [] => return Err(PddlError::Syntax { line: 1, col: 1, msg: "empty input".into() }),
        [_, extra, ..] => return Err(extra.error("unexpected text after the definition")),
    };
    if root.head().as_deref() != Some("define") {
        return Err(root.error("expected (define ...)"));
    }
    let items = root.list().unwrap_or_default();
    match items.get(1).and_then(|h| h.head()) {
        Some(h) if h == kind => Ok(root),
        _ => Err(root.error(format!("expected ({kind} <name>)"))),
    }
}

fn header_name(root: &Sexp, kind: &str) -> Result<Symbol, PddlError> {
    let hdr = &root.list().unwrap_or_default()[1];
    hdr.list()
        .and_then(|l| l.get(1))
        .and_then(Sexp::token)
        .map(Symbol::from)
        .ok_or_else(|| hdr.error(format!("missing {kind} name")))
}

fn signature(s: &Sexp) -> Result<Signature, PddlError> {
    let items = s.list().ok_or_else(|| s.error("expected a declaration list"))?;
    let name = items.first().and_then(Sexp::token).ok_or_else(|| s.error("missing name"))?;
    let mut params = Vec::new();
    for p in &items[1..] {
        let t = p.token().ok_or_else(|| p.error("expected a variable"))?;
        if t == "-" {
            return Err(PddlError::TypesNotSupported { line: p.line() });
        }
        params.push(Symbol::from(t));
    }
    Ok(Signature { name: Symbol::from(name), params })
}

fn action(sec: &Sexp) -> Result<ActionSchema, PddlError> {
    let items = sec.list().unwrap_or_default();
    let name = items.get(1).and_then(Sexp::token).ok_or_else(|| sec.error("missing action name"))?;
    let mut a = ActionSchema::new(name);
    let mut i = 2;
    while i < items.len() {
        let key = items[i].token().map(str::to_ascii_lowercase).ok_or_else(|| items[i].error("expected a keyword"))?;
        let val = items.get(i + 1).ok_or_else(|| items[i].error(format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" => {
                let list = val.list().ok_or_else(|| val.error("expected a parameter list"))?;
                for p in list {
                    let t = p.token().ok_or_else(|| p.error("expected a variable"))?;
                    if t == "-" {
                        return Err(PddlError::TypesNotSupported { line: p.line() });
                    }
                    if !t.starts_with('?') {
                        return Err(p.error(format!("parameter {t} must start with '?'")));
                    }
                    a.params.push(Symbol::from(t));
                }
            }
            ":precondition" => a.pre = condition(val)?,
            ":effect" => effect(val, &mut a)?,
            _ => return Err(PddlError::UnknownDirective { name: key, line: items[i].line() }),
        }
        i += 2;
    }
    Ok(a)
}

fn condition(s: &Sexp) -> Result<Vec<Literal>, PddlError> {
    let mut out = Vec::new();
    collect_condition(s, &mut out)?;
    Ok(out)
}

fn collect_condition(s: &Sexp, out: &mut Vec<Literal>) -> Result<(), PddlError> {
    let items = s.list().ok_or_else(|| s.error("expected a condition"))?;
    if items.is_empty() {
        return Ok(());
    }
    match s.head().as_deref() {
        Some("and") => {
            for c in &items[1..] {
                collect_condition(c, out)?;
            }
            Ok(())
        }
        Some(h @ ("or" | "imply" | "forall" | "exists" | "=" | "<" | ">" | "<=" | ">=" | "when")) => {
            Err(PddlError::Unsupported { construct: h.to_string(), line: s.line() })
        }
        _ => {
            let lit = literal(s)?;
            if !out.contains(&lit) {
                out.push(lit);
            }
            Ok(())
        }
    }
}

fn effect(s: &Sexp, a: &mut ActionSchema) -> Result<(), PddlError> {
    let items = s.list().ok_or_else(|| s.error("expected an effect"))?;
    if items.is_empty() {
        return Ok(());
    }
    match s.head().as_deref() {
        Some("and") => {
            for e in &items[1..] {
                effect(e, a)?;
            }
            Ok(())
        }
        Some("increase") => {
            if items.len() != 3 {
                return Err(s.error("increase takes two arguments"));
            }
            let target = items[1].list().and_then(|l| l.first()).and_then(Sexp::token).ok_or_else(|| items[1].error("expected (total-cost)"))?;
            let amount = match &items[2] {
                Sexp::Token { text, .. } => CostExpr::Const(number(&items[2], text)?),
                list => {
                    let mut f = atom(list)?;
                    if f.pred.is(COST_ALIAS) {
                        f.pred = Symbol::from(TRAVEL_COST);
                    }
                    CostExpr::Fluent(f)
                }
            };
            let ne = NumericEffect { target: Symbol::from(target), amount };
            if !a.costs.contains(&ne) {
                a.costs.push(ne);
            }
            Ok(())
        }
        Some(h @ ("decrease" | "assign" | "scale-up" | "scale-down" | "when" | "forall")) => {
            Err(PddlError::Unsupported { construct: h.to_string(), line: s.line() })
        }
        _ => {
            let lit = literal(s)?;
            a.add_eff(lit);
            Ok(())
        }
    }
}

fn literal(s: &Sexp) -> Result<Literal, PddlError> {
    if s.head().as_deref() == Some("not") {
        let items = s.list().unwrap_or_default();
        if items.len() != 2 {
            return Err(s.error("not takes one argument"));
        }
        if items[1].head().as_deref() == Some("not") {
            return Err(PddlError::Unsupported { construct: "nested not".into(), line: s.line() });
        }
        return Ok(Literal::neg(atom(&items[1])?));
    }
    Ok(Literal::pos(atom(s)?))
}

fn atom(s: &Sexp) -> Result<Atom, PddlError> {
    let items = s.list().ok_or_else(|| s.error("expected an atom"))?;
    let mut toks = items.iter().map(|t| t.token().ok_or_else(|| t.error("nested expression inside an atom")));
    let pred = toks.next().ok_or_else(|| s.error("empty atom"))??;
    let args = toks.map(|t| t.map(Symbol::from)).collect::<Result<Vec<_>, _>>()?;
    Ok(Atom { pred: Symbol::from(pred), args })
}

fn fluent_value(s: &Sexp) -> Result<FluentValue, PddlError> {
    let items = s.list().unwrap_or_default();
    if items.len() != 3 {
        return Err(s.error("expected (= (function args) value)"));
    }
    let mut func = atom(&items[1])?;
    if func.pred.is(COST_ALIAS) {
        func.pred = Symbol::from(TRAVEL_COST);
    }
    let text = items[2].token().ok_or_else(|| items[2].error("expected a number"))?;
    Ok(FluentValue { func, value: number(&items[2], text)? })
}

fn number(s: &Sexp, text: &str) -> Result<u64, PddlError> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    match text.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        Ok(_) => Err(s.error(format!("value {text} must be a non-negative integer"))),
        Err(_) => Err(s.error(format!("expected a number, found {text}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "(define (domain Test)
      (:requirements :strips :negative-preconditions :action-costs)
      (:predicates (hand_free ?r) (holding ?r ?o) (on ?o ?t))
      (:functions (cost ?a ?b) (total-cost) - number)
      (:action PICK
        :parameters (?r ?o ?t)
        :precondition (and (hand_free ?r) (on ?o ?t) (not (holding ?r ?o)))
        :effect (and (holding ?r ?o) (not (hand_free ?r)) (not (on ?o ?t)) (increase (total-cost) 1))))";

    #[test]
    fn parses_small_domain() {
        let d = parse_domain(SMALL).unwrap();
        assert_eq!(d.name, "test");
        assert_eq!(d.predicates.len(), 3);
        assert!(d.function("travel_cost").is_some());
        let a = d.action("pick").unwrap();
        assert_eq!(a.params.len(), 3);
        assert_eq!(a.pre.len(), 3);
        assert!(!a.pre[2].positive);
        assert_eq!(a.costs, vec![NumericEffect::total_cost(CostExpr::Const(1))]);
    }

    #[test]
    fn rejects_types() {
        let t = "(define (domain t) (:requirements :strips :typing) (:types thing))";
        assert!(matches!(parse_domain(t), Err(PddlError::TypesNotSupported { .. })));
        let t = "(define (domain t) (:predicates (p ?x - thing)))";
        assert!(matches!(parse_domain(t), Err(PddlError::TypesNotSupported { .. })));
    }

    #[test]
    fn rejects_unknown_directive() {
        let t = "(define (domain t) (:frobnicate))";
        assert!(matches!(parse_domain(t), Err(PddlError::UnknownDirective { .. })));
    }

    #[test]
    fn rejects_unbound_variable() {
        let t = "(define (domain t) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?y) :effect (p ?x)))";
        assert!(matches!(parse_domain(t), Err(PddlError::UnboundVariable { .. })));
    }

    #[test]
    fn rejects_arity_mismatch() {
        let t = "(define (domain t) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?x ?x) :effect (p ?x)))";
        assert!(matches!(parse_domain(t), Err(PddlError::ArityMismatch { .. })));
    }

    #[test]
    fn rejects_contradictory_effects() {
        let t = "(define (domain t) (:predicates (p ?x)) (:action a :parameters (?x) :precondition () :effect (and (p ?x) (not (p ?x)))))";
        assert!(matches!(parse_domain(t), Err(PddlError::ContradictoryEffects { .. })));
    }

    #[test]
    fn syntax_error_carries_position() {
        let t = "(define (domain t)\n  (:predicates (p ?x)\n";
        match parse_domain(t) {
            Err(PddlError::Syntax { line: 2, col: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn problem_dedupes_init_with_warning() {
        let t = "(define (problem p) (:domain d) (:objects a b)
          (:init (on a b) (on a b) (= (cost a b) 3) (= (total-cost) 0))
          (:goal (and (on b a) (not (on a b))))
          (:metric minimize (total-cost)))";
        let (p, w) = parse_problem_diag(t).unwrap();
        assert_eq!(p.init.len(), 1);
        assert_eq!(w.len(), 1);
        assert_eq!(p.fluent(&Atom::new("travel_cost", ["a", "b"])), Some(3));
        assert_eq!(p.goal.len(), 2);
        assert_eq!(p.metric, Some(Metric::MinimizeTotalCost));
    }

    #[test]
    fn problem_rejects_fractional_values() {
        let t = "(define (problem p) (:domain d) (:objects a b) (:init (= (travel_cost a b) 2.5)) (:goal (and)))";
        assert!(matches!(parse_problem(t), Err(PddlError::Syntax { .. })));
    }

    #[test]
    fn single_literals() {
        let l = parse_literal("(not (is_open fridge_1))").unwrap();
        assert!(!l.positive);
        assert_eq!(l.atom, Atom::new("is_open", ["fridge_1"]));
        assert_eq!(parse_condition("(and (a x) (b y))").unwrap().len(), 2);
    }
}
