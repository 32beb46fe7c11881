//! PDDL fragment: untyped STRIPS with negative preconditions and
//! `total-cost` action costs.

mod equal;
mod parse;
mod plan;
mod print;
mod sexpr;
mod symbol;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use equal::{domain_difference, logically_equal, schema_difference, schemas_equal};
pub use parse::{parse_condition, parse_literal, parse_domain, parse_problem, parse_problem_diag, ParseWarning};
pub use plan::{parse_plan, Plan, PlanParseError, PlanStep};
pub use print::{print_domain, print_problem};
pub use symbol::Symbol;

pub const TOTAL_COST: &str = "total-cost";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("typed PDDL is not supported (line {line})")]
    TypesNotSupported { line: usize },
    #[error("unknown directive {name} at line {line}")]
    UnknownDirective { name: String, line: usize },
    #[error("unsupported construct `{construct}` at line {line}")]
    Unsupported { construct: String, line: usize },
    #[error("predicate {predicate} used with {found} arguments, declared with {expected} (in {context})")]
    ArityMismatch { predicate: String, expected: usize, found: usize, context: String },
    #[error("undeclared predicate {predicate} (in {context})")]
    UndeclaredPredicate { predicate: String, context: String },
    #[error("undeclared function {function} (in {context})")]
    UndeclaredFunction { function: String, context: String },
    #[error("variable {var} is not a parameter of action {action}")]
    UnboundVariable { action: String, var: String },
    #[error("duplicate parameter {var} in action {action}")]
    DuplicateParameter { action: String, var: String },
    #[error("duplicate action {0}")]
    DuplicateAction(String),
    #[error("predicate {0} declared twice")]
    DuplicatePredicate(String),
    #[error("action {action} both adds and deletes {atom}")]
    ContradictoryEffects { action: String, atom: String },
    #[error("invalid numeric effect in {action}: {msg}")]
    NumericEffect { action: String, msg: String },
}

/// `(pred arg...)`. Arguments starting with `?` are variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Vec<Symbol>,
}

impl Atom {
    pub fn new<S: Into<Symbol>>(pred: impl Into<Symbol>, args: impl IntoIterator<Item = S>) -> Self {
        Atom { pred: pred.into(), args: args.into_iter().map(Into::into).collect() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.is_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { positive: false, atom }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostExpr {
    Const(u64),
    /// A function term such as `(travel_cost ?from ?to)`.
    Fluent(Atom),
}

impl fmt::Display for CostExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostExpr::Const(c) => write!(f, "{c}"),
            CostExpr::Fluent(a) => write!(f, "{a}"),
        }
    }
}

/// `(increase (<target>) <amount>)`; the target is always `total-cost`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NumericEffect {
    pub target: Symbol,
    pub amount: CostExpr,
}

impl NumericEffect {
    pub fn total_cost(amount: CostExpr) -> Self {
        NumericEffect { target: Symbol::from(TOTAL_COST), amount }
    }
}

impl fmt::Display for NumericEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(increase ({}) {})", self.target, self.amount)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Symbol,
    pub params: Vec<Symbol>,
    pub pre: Vec<Literal>,
    pub eff: Vec<Literal>,
    pub costs: Vec<NumericEffect>,
}

impl ActionSchema {
    pub fn new(name: impl Into<Symbol>) -> Self {
        ActionSchema { name: name.into(), params: vec![], pre: vec![], eff: vec![], costs: vec![] }
    }

    pub fn add_pre(&mut self, lit: Literal) {
        if !self.pre.contains(&lit) {
            self.pre.push(lit);
        }
    }

    pub fn add_eff(&mut self, lit: Literal) {
        if !self.eff.contains(&lit) {
            self.eff.push(lit);
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.pre.iter().chain(self.eff.iter())
    }

    /// A parameter name starting with `base` that is not yet used.
    pub fn fresh_var(&self, base: &str) -> Symbol {
        let base = if base.starts_with('?') { base.to_string() } else { format!("?{base}") };
        let taken = |s: &str| self.params.iter().any(|p| p == s);
        if !taken(&base) {
            return Symbol::from(base);
        }
        (1..)
            .map(|i| format!("{base}{i}"))
            .find(|s| !taken(s))
            .map(Symbol::from)
            .expect("unbounded search")
    }
}

/// Predicate or function declaration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub name: Symbol,
    pub params: Vec<Symbol>,
}

impl Signature {
    pub fn new<S: Into<Symbol>>(name: impl Into<Symbol>, params: impl IntoIterator<Item = S>) -> Self {
        Signature { name: name.into(), params: params.into_iter().map(Into::into).collect() }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: Symbol,
    pub requirements: Vec<String>,
    pub predicates: Vec<Signature>,
    pub functions: Vec<Signature>,
    pub actions: Vec<ActionSchema>,
    /// Cost charged to non-navigation actions when costs are added. Not part
    /// of the PDDL text.
    pub constant_action_cost: u64,
}

impl Domain {
    pub fn new(name: impl Into<Symbol>) -> Self {
        Domain {
            name: name.into(),
            requirements: vec![":strips".into()],
            predicates: vec![],
            functions: vec![],
            actions: vec![],
            constant_action_cost: 1,
        }
    }

    pub fn predicate(&self, name: &str) -> Option<&Signature> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&Signature> {
        self.functions.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn action_mut(&mut self, name: &str) -> Option<&mut ActionSchema> {
        self.actions.iter_mut().find(|a| a.name == name)
    }

    /// Adds or replaces a predicate declaration.
    pub fn declare_predicate(&mut self, sig: Signature) {
        match self.predicates.iter_mut().find(|p| p.name == sig.name) {
            Some(p) => *p = sig,
            None => self.predicates.push(sig),
        }
    }

    pub fn declare_function(&mut self, sig: Signature) {
        match self.functions.iter_mut().find(|p| p.name == sig.name) {
            Some(p) => *p = sig,
            None => self.functions.push(sig),
        }
    }

    pub fn require(&mut self, flag: &str) {
        if !self.requirements.iter().any(|r| r.eq_ignore_ascii_case(flag)) {
            self.requirements.push(flag.to_string());
        }
    }

    /// Predicates that appear in some action effect.
    pub fn fluent_predicates(&self) -> BTreeSet<Symbol> {
        self.actions.iter().flat_map(|a| a.eff.iter().map(|l| l.atom.pred.clone())).collect()
    }

    /// Checks the structural invariants every domain must satisfy.
    pub fn validate(&self) -> Result<(), PddlError> {
        let mut seen = BTreeSet::new();
        for p in &self.predicates {
            if !seen.insert(p.name.clone()) {
                return Err(PddlError::DuplicatePredicate(p.name.to_string()));
            }
        }
        let mut names = BTreeSet::new();
        for a in &self.actions {
            if !names.insert(a.name.clone()) {
                return Err(PddlError::DuplicateAction(a.name.to_string()));
            }
            self.validate_action(a)?;
        }
        Ok(())
    }

    fn validate_action(&self, a: &ActionSchema) -> Result<(), PddlError> {
        let action = a.name.to_string();
        let mut params = BTreeSet::new();
        for p in &a.params {
            if !params.insert(p.clone()) {
                return Err(PddlError::DuplicateParameter { action, var: p.to_string() });
            }
        }
        let check_vars = |atom: &Atom| -> Result<(), PddlError> {
            for v in atom.args.iter().filter(|v| v.is_var()) {
                if !params.contains(v) {
                    return Err(PddlError::UnboundVariable { action: action.clone(), var: v.to_string() });
                }
            }
            Ok(())
        };
        for lit in a.literals() {
            let decl = self.predicate(lit.atom.pred.as_str()).ok_or_else(|| PddlError::UndeclaredPredicate {
                predicate: lit.atom.pred.to_string(),
                context: action.clone(),
            })?;
            if decl.arity() != lit.atom.args.len() {
                return Err(PddlError::ArityMismatch {
                    predicate: lit.atom.pred.to_string(),
                    expected: decl.arity(),
                    found: lit.atom.args.len(),
                    context: action.clone(),
                });
            }
            check_vars(&lit.atom)?;
        }
        for add in a.eff.iter().filter(|l| l.positive) {
            if a.eff.iter().any(|l| !l.positive && l.atom == add.atom) {
                return Err(PddlError::ContradictoryEffects { action, atom: add.atom.to_string() });
            }
        }
        for ne in &a.costs {
            let bad = |msg: String| PddlError::NumericEffect { action: action.clone(), msg };
            if !ne.target.is(TOTAL_COST) {
                return Err(bad(format!("target must be {TOTAL_COST}, found {}", ne.target)));
            }
            if self.function(TOTAL_COST).is_none() {
                return Err(bad(format!("{TOTAL_COST} is not declared")));
            }
            if let CostExpr::Fluent(f) = &ne.amount {
                let decl = self.function(f.pred.as_str()).ok_or_else(|| PddlError::UndeclaredFunction {
                    function: f.pred.to_string(),
                    context: action.clone(),
                })?;
                if decl.arity() != f.args.len() {
                    return Err(bad(format!("{} takes {} arguments", f.pred, decl.arity())));
                }
                check_vars(f)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    MinimizeTotalCost,
}

/// `(= (func args) value)` in a problem's init.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FluentValue {
    pub func: Atom,
    pub value: u64,
}

impl fmt::Display for FluentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(= {} {})", self.func, self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub name: Symbol,
    pub domain: Symbol,
    pub objects: Vec<Symbol>,
    pub init: Vec<Atom>,
    pub fluents: Vec<FluentValue>,
    pub goal: Vec<Literal>,
    pub metric: Option<Metric>,
}

impl Problem {
    pub fn new(name: impl Into<Symbol>, domain: impl Into<Symbol>) -> Self {
        Problem {
            name: name.into(),
            domain: domain.into(),
            objects: vec![],
            init: vec![],
            fluents: vec![],
            goal: vec![],
            metric: None,
        }
    }

    pub fn fluent(&self, func: &Atom) -> Option<u64> {
        self.fluents.iter().find(|f| &f.func == func).map(|f| f.value)
    }
}
