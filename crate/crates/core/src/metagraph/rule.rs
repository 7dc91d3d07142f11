use std::collections::BTreeMap;
use std::fmt;

use super::state::WorldState;
use super::term::{Symbol, Term};
use crate::error::{Error, Result};

/// Variable name to ground leaf.
pub type Bindings = BTreeMap<Symbol, Term>;

/// A conjunction of fact patterns.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    facts: Vec<Term>,
}

impl Pattern {
    pub fn new(facts: Vec<Term>) -> Self {
        Pattern { facts }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Pattern::new(Term::parse_many(src)?))
    }

    pub fn facts(&self) -> &[Term] {
        &self.facts
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.facts.iter().for_each(|f| f.collect_vars(&mut out));
        out
    }

    pub fn contains(&self, fact: &Term) -> bool {
        self.facts.contains(fact)
    }

    /// Instantiates every fact under `bindings`.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Vec<Term>> {
        self.facts.iter().map(|f| substitute(f, bindings)).collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.facts.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Instantiates a term. Fails when a variable has no binding.
pub fn substitute(term: &Term, bindings: &Bindings) -> Result<Term> {
    match term {
        Term::Var(v) => bindings
            .get(v)
            .cloned()
            .ok_or_else(|| Error::UnboundVariable(v.to_string())),
        Term::Node { label, children } => Ok(Term::Node {
            label: label.clone(),
            children: children
                .iter()
                .map(|c| substitute(c, bindings))
                .collect::<Result<_>>()?,
        }),
    }
}

fn unify(pattern: &Term, fact: &Term, bindings: &mut Bindings) -> bool {
    match pattern {
        Term::Var(v) => {
            // first-order: variables only stand for leaf constants
            if !fact.is_leaf() || fact.is_var() {
                return false;
            }
            match bindings.get(v) {
                Some(bound) => bound == fact,
                None => {
                    bindings.insert(v.clone(), fact.clone());
                    true
                }
            }
        }
        Term::Node { label, children } => match fact {
            Term::Node {
                label: fl,
                children: fc,
            } => {
                label == fl
                    && children.len() == fc.len()
                    && children.iter().zip(fc).all(|(p, f)| unify(p, f, bindings))
            }
            Term::Var(_) => false,
        },
    }
}

fn match_from(patterns: &[Term], state: &WorldState, bindings: &mut Bindings) -> bool {
    let Some((first, rest)) = patterns.split_first() else {
        return true;
    };
    for fact in state.with_label(first.label()) {
        let saved = bindings.clone();
        if unify(first, fact, bindings) && match_from(rest, state, bindings) {
            return true;
        }
        *bindings = saved;
    }
    false
}

/// Finds the first consistent assignment making every pattern fact a fact
/// of `state`, trying facts in state order.
pub fn match_pattern(pattern: &Pattern, state: &WorldState) -> Option<Bindings> {
    let mut b = Bindings::new();
    match_from(&pattern.facts, state, &mut b).then_some(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u64);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Seed,
    Mutation,
    Abstraction,
    Airis,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::Mutation => "mutation",
            Origin::Abstraction => "abstraction",
            Origin::Airis => "airis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "seed" => Origin::Seed,
            "mutation" => Origin::Mutation,
            "abstraction" => Origin::Abstraction,
            "airis" => Origin::Airis,
            other => return Err(Error::MalformedRule(format!("unknown origin `{other}`"))),
        })
    }
}

/// What a rule's output is about, read off the facts its rhs introduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleRole {
    /// Introduces an `(Action _)` fact: a policy rule.
    Policy,
    /// Introduces an `(Event _)` fact: a predictive world-model rule.
    Model,
    /// Introduces an `(Is _)` category fact: an abstraction label.
    Label,
    Other,
}

pub const ACTION: &str = "Action";
pub const EVENT: &str = "Event";
pub const CATEGORY: &str = "Is";

/// `lhs → rhs` over fact patterns. Every rhs variable occurs in the lhs.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    pub id: RuleId,
    lhs: Pattern,
    rhs: Pattern,
    pub origin: Origin,
}

impl RewriteRule {
    pub fn new(id: RuleId, lhs: Pattern, rhs: Pattern, origin: Origin) -> Result<Self> {
        if let Some(f) = lhs.facts.iter().chain(&rhs.facts).find(|f| f.is_var()) {
            return Err(Error::MalformedRule(format!("bare variable `{f}` used as a fact")));
        }
        let lv = lhs.variables();
        if let Some(v) = rhs.variables().into_iter().find(|v| !lv.contains(v)) {
            return Err(Error::MalformedRule(format!(
                "rhs variable ?{v} does not occur in the lhs"
            )));
        }
        Ok(RewriteRule {
            id,
            lhs,
            rhs,
            origin,
        })
    }

    /// Parses `lhs-facts => rhs-facts`, e.g. `(State ?s) => (State ?s) (Action Right)`.
    pub fn parse(id: u64, src: &str, origin: Origin) -> Result<Self> {
        let (l, r) = src
            .split_once("=>")
            .ok_or_else(|| Error::MalformedRule("missing `=>`".into()))?;
        RewriteRule::new(RuleId(id), Pattern::parse(l)?, Pattern::parse(r)?, origin)
    }

    pub fn lhs(&self) -> &Pattern {
        &self.lhs
    }

    pub fn rhs(&self) -> &Pattern {
        &self.rhs
    }

    /// rhs facts not present in the lhs.
    pub fn added(&self) -> impl Iterator<Item = &Term> {
        self.rhs.facts.iter().filter(|f| !self.lhs.contains(f))
    }

    /// lhs facts dropped by the rewrite.
    pub fn deleted(&self) -> impl Iterator<Item = &Term> {
        self.lhs.facts.iter().filter(|f| !self.rhs.contains(f))
    }

    pub fn role(&self) -> RuleRole {
        let mut role = RuleRole::Other;
        for f in self.added() {
            match f.label() {
                ACTION => return RuleRole::Policy,
                EVENT => role = RuleRole::Model,
                CATEGORY if role == RuleRole::Other => role = RuleRole::Label,
                _ => {}
            }
        }
        role
    }

    /// The action constant this rule emits, if it is a policy rule with a
    /// ground action.
    pub fn action(&self) -> Option<&str> {
        self.added()
            .find(|f| f.label() == ACTION)
            .and_then(|f| f.children().first())
            .filter(|a| !a.is_var())
            .map(|a| a.label())
    }

    /// Structural equality, ignoring id and origin.
    /// Equal up to renaming of variables and fact order.
    pub fn same_structure(&self, other: &RewriteRule) -> bool {
        (self.lhs == other.lhs && self.rhs == other.rhs)
            || super::distance::canonical_tree(self) == super::distance::canonical_tree(other)
    }

    pub fn with_id(mut self, id: RuleId) -> Self {
        self.id = id;
        self
    }

    /// `(Rule (lhs ...) (rhs ...))`
    pub fn to_term(&self) -> Term {
        Term::node(
            "Rule",
            vec![
                Term::node("lhs", self.lhs.facts.clone()),
                Term::node("rhs", self.rhs.facts.clone()),
            ],
        )
    }

    pub fn from_term(id: RuleId, origin: Origin, t: &Term) -> Result<Self> {
        let bad = || Error::MalformedRule(t.to_string());
        if t.label() != "Rule" || t.children().len() != 2 {
            return Err(bad());
        }
        let (l, r) = (&t.children()[0], &t.children()[1]);
        if l.label() != "lhs" || r.label() != "rhs" || l.is_var() || r.is_var() {
            return Err(bad());
        }
        RewriteRule::new(
            id,
            Pattern::new(l.children().to_vec()),
            Pattern::new(r.children().to_vec()),
            origin,
        )
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// Rewrites the matched lhs facts into the instantiated rhs facts.
pub fn apply_rule(rule: &RewriteRule, state: &WorldState) -> Option<WorldState> {
    let b = match_pattern(&rule.lhs, state)?;
    // substitution cannot fail: rhs vars ⊆ lhs vars, all bound by the match
    let matched = rule.lhs.substitute(&b).ok()?;
    let produced = rule.rhs.substitute(&b).ok()?;
    let mut next = state.clone();
    for f in &matched {
        next.remove(f);
    }
    for f in produced {
        next.insert(f).ok()?;
    }
    Some(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> WorldState {
        WorldState::parse(s).unwrap()
    }

    #[test]
    fn single_variable_match() {
        let p = Pattern::parse("(State ?s)").unwrap();
        let b = match_pattern(&p, &st("(State 2)")).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.get("s").unwrap(), &Term::atom("2"));
    }

    #[test]
    fn constant_mismatch_and_missing_fact() {
        assert!(match_pattern(&Pattern::parse("(State 0)").unwrap(), &st("(State 1)")).is_none());
        assert!(
            match_pattern(&Pattern::parse("(State ?s) (Sees F)").unwrap(), &st("(State 1)"))
                .is_none()
        );
    }

    #[test]
    fn shared_variable_must_agree() {
        let p = Pattern::parse("(A ?x) (B ?x)").unwrap();
        assert!(match_pattern(&p, &st("(A 1) (B 2)")).is_none());
        assert!(match_pattern(&p, &st("(A 1) (A 2) (B 2)")).is_some());
    }

    #[test]
    fn variables_only_bind_leaves() {
        let p = Pattern::parse("(Hold ?x)").unwrap();
        assert!(match_pattern(&p, &st("(Hold (Item Red))")).is_none());
    }

    #[test]
    fn first_match_follows_fact_order() {
        let p = Pattern::parse("(State ?s)").unwrap();
        let b = match_pattern(&p, &st("(State 3) (State 1)")).unwrap();
        assert_eq!(b.get("s").unwrap(), &Term::atom("1"));
    }

    #[test]
    fn substitution_examples() {
        let p = Pattern::parse("(State ?s) (Action Right)").unwrap();
        let mut b = Bindings::new();
        b.insert("s".into(), Term::atom("0"));
        let out: Vec<String> = p.substitute(&b).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(out, ["(State 0)", "(Action Right)"]);

        let ground = Pattern::parse("(State 0)").unwrap();
        assert_eq!(ground.substitute(&Bindings::new()).unwrap(), ground.facts());

        let err = Pattern::parse("(State ?s)").unwrap().substitute(&Bindings::new());
        assert_eq!(err, Err(Error::UnboundVariable("s".into())));
    }

    #[test]
    fn apply_generic_rule() {
        let r1 = RewriteRule::parse(1, "(State ?s) => (State ?s) (Action Right)", Origin::Seed)
            .unwrap();
        let out = apply_rule(&r1, &st("(State 2)")).unwrap();
        assert_eq!(out, st("(State 2) (Action Right)"));
        assert_eq!(r1.role(), RuleRole::Policy);
        assert_eq!(r1.action(), Some("Right"));
    }

    #[test]
    fn apply_non_matching_and_identity() {
        let r = RewriteRule::parse(1, "(State 0) => (State 0) (Action Right)", Origin::Seed)
            .unwrap();
        assert!(apply_rule(&r, &st("(State 1)")).is_none());
        let id = RewriteRule::parse(2, "(State ?s) => (State ?s)", Origin::Seed).unwrap();
        let s = st("(State 1) (Hand Empty)");
        assert_eq!(apply_rule(&id, &s).unwrap(), s);
    }

    #[test]
    fn rhs_variables_must_be_bound_by_lhs() {
        assert!(RewriteRule::parse(1, "(State 0) => (State ?s)", Origin::Seed).is_err());
    }

    #[test]
    fn rule_term_round_trip() {
        let r = RewriteRule::parse(7, "(State ?s) => (State ?s) (Action Left)", Origin::Mutation)
            .unwrap();
        assert_eq!(
            r.to_string(),
            "(Rule (lhs (State ?s)) (rhs (State ?s) (Action Left)))"
        );
        let back = RewriteRule::from_term(r.id, r.origin, &r.to_term()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn roles() {
        let m = RewriteRule::parse(1, "(Action Eat) => (Action Eat) (Event Fed)", Origin::Airis)
            .unwrap();
        assert_eq!(m.role(), RuleRole::Model);
        let l = RewriteRule::parse(2, "(Color Red) (Shape Round) => (Color Red) (Shape Round) (Is PatternA)", Origin::Abstraction).unwrap();
        assert_eq!(l.role(), RuleRole::Label);
    }
}
