//! Symbolic terms and their s-expression form.
//!
//! A [`Term`] is a finite labelled tree. Leaves may be pattern variables
//! (written `?name`); interior nodes never are. Ground terms (no variables)
//! are the facts that make up a [`WorldState`](super::WorldState).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Interned-ish label. Cheap to clone, ordered by string content.
pub type Symbol = Arc<str>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Pattern variable; only ever a leaf.
    Var(Symbol),
    /// Labelled node with an ordered (possibly empty) list of children.
    Node { label: Symbol, children: Vec<Term> },
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Arc::from(name.trim_start_matches('?')))
    }

    pub fn atom(label: &str) -> Self {
        Term::Node {
            label: Arc::from(label),
            children: Vec::new(),
        }
    }

    pub fn node(label: &str, children: Vec<Term>) -> Self {
        Term::Node {
            label: Arc::from(label),
            children,
        }
    }

    /// Builds a flat fact such as `(State 0)`. Arguments starting with `?`
    /// become variables.
    pub fn fact(label: &str, args: &[&str]) -> Self {
        let children = args
            .iter()
            .map(|a| {
                if a.starts_with('?') {
                    Term::var(a)
                } else {
                    Term::atom(a)
                }
            })
            .collect();
        Term::node(label, children)
    }

    pub fn label(&self) -> &str {
        match self {
            Term::Var(v) => v,
            Term::Node { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::Node { children, .. } => children,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_leaf(&self) -> bool {
        self.children().is_empty()
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Node { children, .. } => children.iter().all(Term::is_ground),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Term::size).sum::<usize>()
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Node { children, .. } => children.iter().for_each(|c| c.collect_vars(out)),
        }
    }

    /// Child `i` read as a number, if it is a numeric leaf.
    pub fn arg_f64(&self, i: usize) -> Option<f64> {
        self.children().get(i).and_then(|c| {
            if c.is_leaf() && !c.is_var() {
                c.label().parse().ok()
            } else {
                None
            }
        })
    }

    /// Parses exactly one term; trailing input is an error.
    pub fn parse(src: &str) -> Result<Term> {
        let mut p = Parser { src, pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }

    /// Parses a whitespace-separated sequence of terms.
    pub fn parse_many(src: &str) -> Result<Vec<Term>> {
        let mut p = Parser { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            p.skip_ws();
            if p.pos == src.len() {
                return Ok(out);
            }
            out.push(p.term()?);
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Node { label, children } if children.is_empty() => write!(f, "{label}"),
            Term::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn symbol(&mut self) -> Result<&str> {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected symbol"));
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn leaf(&mut self) -> Result<Term> {
        let s = self.symbol()?;
        if let Some(name) = s.strip_prefix('?') {
            if name.is_empty() {
                return Err(self.err("empty variable name"));
            }
            Ok(Term::var(name))
        } else {
            Ok(Term::atom(s))
        }
    }

    fn term(&mut self) -> Result<Term> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(')') => Err(self.err("unexpected `)`")),
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let head = self.symbol()?;
                if head.starts_with('?') {
                    return Err(self.err("a variable cannot head a node"));
                }
                let head = head.to_string();
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(self.err("unclosed `(`")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Term::node(&head, children));
                        }
                        Some('(') => children.push(self.term()?),
                        Some(_) => children.push(self.leaf()?),
                    }
                }
            }
            Some(_) => self.leaf(),
        }
    }
}
