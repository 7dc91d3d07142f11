use std::collections::BTreeSet;
use std::fmt;

use super::term::Term;
use crate::error::{Error, Result};

/// A set of ground facts. Iteration order is the term order (label first,
/// then children), which fixes the order in which matching tries facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldState {
    facts: BTreeSet<Term>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts<I: IntoIterator<Item = Term>>(facts: I) -> Result<Self> {
        let mut s = Self::new();
        for f in facts {
            s.insert(f)?;
        }
        Ok(s)
    }

    /// Parses whitespace-separated facts, e.g. `(State 0) (Action Right)`.
    pub fn parse(src: &str) -> Result<Self> {
        Self::from_facts(Term::parse_many(src)?)
    }

    pub fn insert(&mut self, fact: Term) -> Result<bool> {
        if !fact.is_ground() {
            return Err(Error::NotGround(fact.to_string()));
        }
        Ok(self.facts.insert(fact))
    }

    /// Slot-unique insert: removes every fact sharing the head label first.
    pub fn set(&mut self, fact: Term) -> Result<()> {
        if !fact.is_ground() {
            return Err(Error::NotGround(fact.to_string()));
        }
        let label = fact.label().to_string();
        self.facts.retain(|f| f.label() != label);
        self.facts.insert(fact);
        Ok(())
    }

    pub fn remove(&mut self, fact: &Term) -> bool {
        self.facts.remove(fact)
    }

    pub fn remove_label(&mut self, label: &str) {
        self.facts.retain(|f| f.label() != label);
    }

    pub fn contains(&self, fact: &Term) -> bool {
        self.facts.contains(fact)
    }

    /// First fact with the given head label.
    pub fn get(&self, label: &str) -> Option<&Term> {
        self.facts.iter().find(|f| f.label() == label)
    }

    pub fn with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.facts.iter().filter(move |f| f.label() == label)
    }

    pub fn facts(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Keeps only facts whose head label is in `labels`.
    pub fn project(&self, labels: &[String]) -> WorldState {
        WorldState {
            facts: self
                .facts
                .iter()
                .filter(|f| labels.iter().any(|l| l == f.label()))
                .cloned()
                .collect(),
        }
    }

    pub fn union(&self, other: &WorldState) -> WorldState {
        WorldState {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &WorldState) -> Vec<Term> {
        self.facts.difference(&other.facts).cloned().collect()
    }

    /// Packs the facts into one term, `(head f1 f2 ...)`.
    pub fn to_term(&self, head: &str) -> Term {
        Term::node(head, self.facts.iter().cloned().collect())
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for fact in &self.facts {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{fact}")?;
        }
        Ok(())
    }
}
