//! Local edits of policy rules.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::metagraph::{match_pattern, Origin, Pattern, RewriteRule, RuleId, RuleRole, Term, WorldState, ACTION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MutationKind {
    SpecializeVariable,
    GeneralizeConstant,
    SwapAction,
    AddCondition,
    RemoveCondition,
    ComposeConjunction,
}

impl MutationKind {
    pub const ALL: [MutationKind; 6] = [
        MutationKind::SpecializeVariable,
        MutationKind::GeneralizeConstant,
        MutationKind::SwapAction,
        MutationKind::AddCondition,
        MutationKind::RemoveCondition,
        MutationKind::ComposeConjunction,
    ];

    /// Whether the edit adds a new rule next to the original instead of
    /// replacing it. Narrowing edits spawn so the original keeps covering
    /// the contexts the new rule leaves out.
    pub fn spawns(self) -> bool {
        matches!(
            self,
            MutationKind::SpecializeVariable | MutationKind::AddCondition | MutationKind::ComposeConjunction
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::SpecializeVariable => "specialize-variable",
            MutationKind::GeneralizeConstant => "generalize-constant",
            MutationKind::SwapAction => "swap-action",
            MutationKind::AddCondition => "add-condition",
            MutationKind::RemoveCondition => "remove-condition",
            MutationKind::ComposeConjunction => "compose-conjunction",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateEdit {
    pub target: RuleId,
    pub rule: RewriteRule,
    pub kind: MutationKind,
}

/// What the neighbourhood of a rule may draw on.
#[derive(Clone, Copy, Debug)]
pub struct MutationScope<'a> {
    /// Contexts seen recently.
    pub contexts: &'a [WorldState],
    pub actions: &'a [&'a str],
    /// Fact labels that may become conditions; empty allows all.
    pub condition_labels: &'a [String],
    /// The current population, for conjunctions.
    pub population: &'a [RewriteRule],
}

fn rebuild(rule: &RewriteRule, lhs: Vec<Term>, rhs: Vec<Term>) -> Option<RewriteRule> {
    RewriteRule::new(rule.id, Pattern::new(lhs), Pattern::new(rhs), Origin::Mutation).ok()
}

fn map_fact(rule: &RewriteRule, from: &Term, to: &Term) -> Option<RewriteRule> {
    let sub = |f: &Term| if f == from { to.clone() } else { f.clone() };
    rebuild(
        rule,
        rule.lhs().facts().iter().map(sub).collect(),
        rule.rhs().facts().iter().map(sub).collect(),
    )
}

fn replace_var(t: &Term, var: &Term, value: &Term) -> Term {
    if t == var {
        return value.clone();
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::Node { label, children } => Term::Node {
            label: label.clone(),
            children: children.iter().map(|c| replace_var(c, var, value)).collect(),
        },
    }
}

fn fresh_var(rule: &RewriteRule) -> Term {
    let used = rule.lhs().variables();
    (0..)
        .map(|i| format!("g{i}"))
        .find(|n| !used.iter().any(|u| u.as_ref() == n.as_str()))
        .map(|n| Term::var(&n))
        .expect("unbounded names")
}

fn candidates(rule: &RewriteRule, kind: MutationKind, scope: &MutationScope<'_>) -> Vec<RewriteRule> {
    let lhs = rule.lhs().facts();
    let rhs = rule.rhs().facts();
    let matched: Vec<&WorldState> = scope
        .contexts
        .iter()
        .filter(|s| match_pattern(rule.lhs(), s).is_some())
        .collect();
    let allowed = |f: &Term| {
        f.label() != ACTION
            && (scope.condition_labels.is_empty() || scope.condition_labels.iter().any(|l| l == f.label()))
    };
    let mut out: Vec<RewriteRule> = Vec::new();
    match kind {
        MutationKind::SpecializeVariable => {
            for v in rule.lhs().variables() {
                let var = Term::Var(v.clone());
                let mut values = BTreeSet::new();
                for s in &matched {
                    if let Some(b) = match_pattern(rule.lhs(), s) {
                        if let Some(val) = b.get(&v) {
                            values.insert(val.clone());
                        }
                    }
                }
                for val in values {
                    let l = lhs.iter().map(|f| replace_var(f, &var, &val)).collect();
                    let r = rhs.iter().map(|f| replace_var(f, &var, &val)).collect();
                    out.extend(rebuild(rule, l, r));
                }
            }
        }
        MutationKind::GeneralizeConstant => {
            let var = fresh_var(rule);
            for f in lhs.iter().filter(|f| f.label() != ACTION) {
                for (i, c) in f.children().iter().enumerate() {
                    if c.is_leaf() && !c.is_var() {
                        let mut kids = f.children().to_vec();
                        kids[i] = var.clone();
                        out.extend(map_fact(rule, f, &Term::node(f.label(), kids)));
                    }
                }
            }
        }
        MutationKind::SwapAction => {
            if let Some(a) = rule.action() {
                let old = Term::fact(ACTION, &[a]);
                for b in scope.actions.iter().filter(|b| **b != a) {
                    let new = Term::fact(ACTION, &[b]);
                    let r = rhs.iter().map(|f| if *f == old { new.clone() } else { f.clone() }).collect();
                    out.extend(rebuild(rule, lhs.to_vec(), r));
                }
            }
        }
        MutationKind::AddCondition => {
            let mut facts = BTreeSet::new();
            for s in &matched {
                facts.extend(s.facts().filter(|f| allowed(f) && !lhs.contains(f)).cloned());
            }
            for f in facts {
                let mut l = lhs.to_vec();
                let mut r = rhs.to_vec();
                l.push(f.clone());
                r.push(f);
                out.extend(rebuild(rule, l, r));
            }
        }
        MutationKind::RemoveCondition => {
            for f in lhs.iter().filter(|f| f.label() != ACTION) {
                let l = lhs.iter().filter(|g| *g != f).cloned().collect();
                let r = rhs.iter().filter(|g| *g != f).cloned().collect();
                out.extend(rebuild(rule, l, r));
            }
        }
        MutationKind::ComposeConjunction => {
            for other in scope.population {
                if other.id == rule.id || other.role() != RuleRole::Policy || other.action() != rule.action() {
                    continue;
                }
                let extra: Vec<&Term> = other
                    .lhs()
                    .facts()
                    .iter()
                    .filter(|f| !lhs.contains(f) && f.is_ground())
                    .collect();
                if extra.is_empty() {
                    continue;
                }
                let mut l = lhs.to_vec();
                let mut r = rhs.to_vec();
                for f in extra {
                    l.push(f.clone());
                    r.push(f.clone());
                }
                if let Some(c) = rebuild(rule, l, r) {
                    if scope.contexts.iter().any(|s| match_pattern(c.lhs(), s).is_some()) {
                        out.push(c);
                    }
                }
            }
        }
    }
    out.retain(|c| !c.same_structure(rule) && !scope.population.iter().any(|p| p.same_structure(c)));
    let mut seen: Vec<RewriteRule> = Vec::new();
    for c in out {
        if !seen.iter().any(|s| s.same_structure(&c)) {
            seen.push(c);
        }
    }
    seen
}

/// Up to `budget` distinct edits: each draw picks a kind uniformly among
/// those with at least one candidate, then a candidate uniformly.
pub fn neighborhood<R: Rng + ?Sized>(
    rule: &RewriteRule,
    budget: usize,
    scope: &MutationScope<'_>,
    rng: &mut R,
) -> Vec<CandidateEdit> {
    if rule.role() != RuleRole::Policy || budget == 0 {
        return Vec::new();
    }
    let mut pools: Vec<(MutationKind, Vec<RewriteRule>)> = MutationKind::ALL
        .iter()
        .map(|&k| (k, candidates(rule, k, scope)))
        .filter(|(_, c)| !c.is_empty())
        .collect();
    let mut out: Vec<CandidateEdit> = Vec::new();
    while out.len() < budget && !pools.is_empty() {
        let k = rng.gen_range(0..pools.len());
        let pool = &mut pools[k].1;
        let i = rng.gen_range(0..pool.len());
        let r = pool.swap_remove(i);
        out.push(CandidateEdit {
            target: rule.id,
            rule: r,
            kind: pools[k].0,
        });
        if pools[k].1.is_empty() {
            pools.remove(k);
        }
    }
    out
}

/// Shuffled indices of the policy rules.
pub fn policy_indices<R: Rng + ?Sized>(rules: &[RewriteRule], rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rules.len()).filter(|&i| rules[i].role() == RuleRole::Policy).collect();
    idx.shuffle(rng);
    idx
}
