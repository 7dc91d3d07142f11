//! Category labels for feature conjunctions that predict reward.

use std::collections::{BTreeMap, BTreeSet};

use crate::beliefs::Transition;
use crate::metagraph::{Origin, Pattern, RewriteRule, RuleId, Term, ACTION, CATEGORY};

/// A fresh category and the conjunction that defines it.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractionLabel {
    pub symbol: String,
    pub conjunction: Vec<Term>,
}

impl AbstractionLabel {
    /// `(Is symbol)`
    pub fn fact(&self) -> Term {
        Term::fact(CATEGORY, &[&self.symbol])
    }

    /// `conjunction => conjunction (Is symbol)`
    pub fn label_rule(&self) -> RewriteRule {
        let mut rhs = self.conjunction.clone();
        rhs.push(self.fact());
        RewriteRule::new(RuleId(0), Pattern::new(self.conjunction.clone()), Pattern::new(rhs), Origin::Abstraction)
            .expect("ground conjunction")
    }

    /// `(Is symbol) => (Is symbol) (Action a)`
    pub fn policy_template(&self, action: &str) -> RewriteRule {
        let lhs = vec![self.fact()];
        let rhs = vec![self.fact(), Term::fact(ACTION, &[action])];
        RewriteRule::new(RuleId(0), Pattern::new(lhs), Pattern::new(rhs), Origin::Abstraction).expect("ground")
    }
}

/// `PatternA`, `PatternB`, .., `PatternZ`, `PatternAA`, ..
pub fn label_symbol(mut index: usize) -> String {
    let mut letters = Vec::new();
    loop {
        letters.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    letters.reverse();
    format!("Pattern{}", String::from_utf8(letters).expect("ascii"))
}

/// Settings for [`propose_abstraction`].
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractionParams<'a> {
    /// Labels of facts that count as features.
    pub features: &'a [String],
    /// Minimum number of records showing the conjunction.
    pub support: usize,
    /// Required ratio of the conjunction's success rate to the overall
    /// rate; must be strictly exceeded.
    pub lift: f64,
}

/// Mines 2- and 3-feature conjunctions whose records are followed by
/// positive return more often than records overall, by a factor above
/// `lift`. For each, returns the label and a policy rule on the label using
/// the action with the best mean return under the conjunction. Symbols are
/// numbered from `first_symbol`; conjunctions in `known` are skipped.
pub fn propose_abstraction<'a, I>(
    history: I,
    params: &AbstractionParams<'_>,
    known: &[AbstractionLabel],
    first_symbol: usize,
) -> Vec<(AbstractionLabel, RewriteRule, RewriteRule)>
where
    I: IntoIterator<Item = &'a Transition>,
{
    #[derive(Default)]
    struct Tally {
        n: usize,
        positive: usize,
        by_action: BTreeMap<String, (f64, usize)>,
    }
    let mut total = 0usize;
    let mut positive = 0usize;
    let mut tallies: BTreeMap<Vec<Term>, Tally> = BTreeMap::new();
    for tr in history {
        total += 1;
        let good = tr.ret > 0.0;
        positive += usize::from(good);
        let feats: Vec<Term> = tr
            .state
            .facts()
            .filter(|f| params.features.iter().any(|l| l == f.label()))
            .cloned()
            .collect();
        let mut seen: BTreeSet<Vec<Term>> = BTreeSet::new();
        for i in 0..feats.len() {
            for j in i + 1..feats.len() {
                seen.insert(vec![feats[i].clone(), feats[j].clone()]);
                for k in j + 1..feats.len() {
                    seen.insert(vec![feats[i].clone(), feats[j].clone(), feats[k].clone()]);
                }
            }
        }
        for conj in seen {
            let t = tallies.entry(conj).or_default();
            t.n += 1;
            t.positive += usize::from(good);
            let a = t.by_action.entry(tr.action.clone()).or_default();
            a.0 += tr.ret;
            a.1 += 1;
        }
    }
    if total == 0 || positive == 0 {
        return Vec::new();
    }
    let base = positive as f64 / total as f64;
    let mut out = Vec::new();
    for (conj, t) in tallies {
        if t.n < params.support || known.iter().any(|k| k.conjunction == conj) {
            continue;
        }
        let rate = t.positive as f64 / t.n as f64;
        if rate / base <= params.lift {
            continue;
        }
        let best = t
            .by_action
            .iter()
            .max_by(|x, y| (x.1 .0 / x.1 .1 as f64).total_cmp(&(y.1 .0 / y.1 .1 as f64)).then(y.0.cmp(x.0)))
            .map(|(a, _)| a.clone())
            .expect("conjunction seen with some action");
        let label = AbstractionLabel {
            symbol: label_symbol(first_symbol + out.len()),
            conjunction: conj,
        };
        let lr = label.label_rule();
        let pr = label.policy_template(&best);
        out.push((label, lr, pr));
    }
    out
}
