//! Unit-cost ordered tree edit distance between rules.
//!
//! A rule is compared through its canonical tree
//! `(Rule (lhs ..) (del ..) (add ..))`: the conditions, the facts it
//! deletes, and the facts it introduces, each sorted, with variables renamed
//! by first occurrence. Facts the rewrite preserves are not repeated, so
//! specializing `?s` to `0` in `(State ?s) → (State ?s) (Action Right)` is a
//! single relabel.

use std::collections::BTreeMap;

use super::rule::RewriteRule;
use super::term::{Symbol, Term};

fn mask_vars(t: &Term) -> Term {
    match t {
        Term::Var(_) => Term::var("_"),
        Term::Node { label, children } => Term::Node {
            label: label.clone(),
            children: children.iter().map(mask_vars).collect(),
        },
    }
}

fn rename(t: &Term, names: &mut BTreeMap<Symbol, Symbol>) -> Term {
    match t {
        Term::Var(v) => {
            let n = names.len();
            Term::Var(names.entry(v.clone()).or_insert_with(|| format!("v{n}").into()).clone())
        }
        Term::Node { label, children } => Term::Node {
            label: label.clone(),
            children: children.iter().map(|c| rename(c, names)).collect(),
        },
    }
}

fn sorted(mut v: Vec<Term>) -> Vec<Term> {
    v.sort_by(|a, b| mask_vars(a).cmp(&mask_vars(b)).then_with(|| a.cmp(b)));
    v
}

/// Canonical tree used for distances between rules.
pub fn canonical_tree(rule: &RewriteRule) -> Term {
    let lhs = sorted(rule.lhs().facts().to_vec());
    let mut names = BTreeMap::new();
    let lhs: Vec<Term> = lhs.iter().map(|f| rename(f, &mut names)).collect();
    let del = sorted(rule.deleted().map(|f| rename(f, &mut names)).collect());
    let add = sorted(rule.added().map(|f| rename(f, &mut names)).collect());
    Term::node(
        "Rule",
        vec![Term::node("lhs", sorted(lhs)), Term::node("del", del), Term::node("add", add)],
    )
}

struct Flat {
    labels: Vec<String>,
    /// leftmost leaf descendant, postorder index, 1-based
    lmld: Vec<usize>,
    keyroots: Vec<usize>,
}

fn node_label(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Node { label, .. } => label.to_string(),
    }
}

fn flatten(t: &Term) -> Flat {
    fn walk(t: &Term, labels: &mut Vec<String>, lmld: &mut Vec<usize>) -> usize {
        let mut leftmost = None;
        for c in t.children() {
            let l = walk(c, labels, lmld);
            leftmost.get_or_insert(l);
        }
        labels.push(node_label(t));
        let idx = labels.len();
        let l = leftmost.unwrap_or(idx);
        lmld.push(l);
        l
    }
    let mut labels = Vec::new();
    let mut lmld = Vec::new();
    walk(t, &mut labels, &mut lmld);
    // slot 0 is a sentinel so postorder indices are 1-based
    labels.insert(0, String::new());
    lmld.insert(0, 0);
    let n = labels.len() - 1;
    let mut keyroots = Vec::new();
    for i in 1..=n {
        if !(i + 1..=n).any(|j| lmld[j] == lmld[i]) {
            keyroots.push(i);
        }
    }
    Flat {
        labels,
        lmld,
        keyroots,
    }
}

/// Zhang–Shasha edit distance with unit insert, delete and relabel costs.
pub fn tree_edit_distance(a: &Term, b: &Term) -> usize {
    let fa = flatten(a);
    let fb = flatten(b);
    let (n, m) = (fa.labels.len() - 1, fb.labels.len() - 1);
    let mut td = vec![vec![0usize; m + 1]; n + 1];
    let mut fd = vec![vec![0usize; m + 2]; n + 2];
    for &i in &fa.keyroots {
        for &j in &fb.keyroots {
            let (li, lj) = (fa.lmld[i], fb.lmld[j]);
            // fd indices are offset so that li-1 maps to 0
            let oi = li - 1;
            let oj = lj - 1;
            fd[0][0] = 0;
            for x in li..=i {
                fd[x - oi][0] = fd[x - 1 - oi][0] + 1;
            }
            for y in lj..=j {
                fd[0][y - oj] = fd[0][y - 1 - oj] + 1;
            }
            for x in li..=i {
                for y in lj..=j {
                    let del = fd[x - 1 - oi][y - oj] + 1;
                    let ins = fd[x - oi][y - 1 - oj] + 1;
                    if fa.lmld[x] == li && fb.lmld[y] == lj {
                        let rel = fd[x - 1 - oi][y - 1 - oj]
                            + usize::from(fa.labels[x] != fb.labels[y]);
                        fd[x - oi][y - oj] = del.min(ins).min(rel);
                        td[x][y] = fd[x - oi][y - oj];
                    } else {
                        let sub = fd[fa.lmld[x] - 1 - oi][fb.lmld[y] - 1 - oj] + td[x][y];
                        fd[x - oi][y - oj] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    td[n][m]
}

/// Structural distance between two rules (ids and origins ignored).
pub fn rule_distance(a: &RewriteRule, b: &RewriteRule) -> f64 {
    tree_edit_distance(&canonical_tree(a), &canonical_tree(b)) as f64
}
