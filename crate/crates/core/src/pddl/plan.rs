use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Symbol;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub name: Symbol,
    pub args: Vec<Symbol>,
}

impl PlanStep {
    pub fn new<S: Into<Symbol>>(name: impl Into<Symbol>, args: impl IntoIterator<Item = S>) -> Self {
        PlanStep { name: name.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub reported_cost: Option<u64>,
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        if let Some(c) = self.reported_cost {
            writeln!(f, "; cost = {c} (general cost)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed plan line {line}: {text:?}")]
pub struct PlanParseError {
    pub line: usize,
    pub text: String,
}

/// One `(name args...)` per line. `;` lines are comments, except
/// `; cost = <int>` which sets the reported cost.
pub fn parse_plan(text: &str) -> Result<Plan, PlanParseError> {
    let mut plan = Plan::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = || PlanParseError { line: i + 1, text: raw.to_string() };
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix(';') {
            if let Some(c) = reported_cost(comment) {
                plan.reported_cost = Some(c);
            }
            continue;
        }
        let inner = line.strip_prefix('(').and_then(|l| l.strip_suffix(')')).ok_or_else(err)?;
        if inner.contains(['(', ')', ';']) {
            return Err(err());
        }
        let mut toks = inner.split_whitespace();
        let name = toks.next().ok_or_else(err)?;
        plan.steps.push(PlanStep::new(name, toks));
    }
    Ok(plan)
}

fn reported_cost(comment: &str) -> Option<u64> {
    let rest = comment.trim_start().strip_prefix("cost")?.trim_start().strip_prefix('=')?;
    let digits: String = rest.trim_start().chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_steps_and_cost() {
        let p = parse_plan("(move_robot robot pose_15 pose_21)\n; note\n\n(open_door robot pose_21 office_602)\n; cost = 73 (general cost)\n").unwrap();
        assert_eq!(p.steps.len(), 2);
        assert_eq!(p.steps[1], PlanStep::new("open_door", ["robot", "pose_21", "office_602"]));
        assert_eq!(p.reported_cost, Some(73));
    }

    #[test]
    fn round_trip() {
        let p = Plan { steps: vec![PlanStep::new("a", ["x"]), PlanStep::new("b", Vec::<&str>::new())], reported_cost: Some(2) };
        assert_eq!(parse_plan(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn reports_bad_line() {
        let e = parse_plan("(a x)\nb y\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.text, "b y");
        assert_eq!(parse_plan("(a (x))").unwrap_err().line, 1);
    }
}
