//! Causal rule induction: rules of the form `IF conditions AND action ⟹
//! effect` are created when an observation surprises the current rule set,
//! counted as they are confirmed or refuted, refined when they fail, and
//! used for breadth-first planning. Delayed effects are attributed to
//! earlier ingestions through temporal rules.

mod learner;
mod log;
mod rule;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub use learner::{Airis, AirisConfig, StepReport};
pub use log::EventLog;
pub use rule::{ingested_fact, Activity, CausalRule, Condition, TemporalCondition, MAX_POSITIVES};

use crate::beliefs::{OutcomeDistribution, OutcomePattern, Transition};
use crate::error::{Error, Result};
use crate::metagraph::{Term, WorldState, EVENT};

/// Default probability below which an observed fact counts as unexpected.
pub const DISCREPANCY_THRESHOLD: f64 = 0.1;
/// Minimum confidence for a rule to take part in planning.
pub const PLAN_CONFIDENCE: f64 = 0.5;

/// Observed facts whose marginal probability under `predicted` is below
/// `threshold`, or `None` when nothing was unexpected. An empty prediction
/// makes every observed fact unexpected.
pub fn detect_discrepancy(
    predicted: &OutcomeDistribution,
    observed: &OutcomePattern,
    threshold: f64,
) -> Option<Vec<Term>> {
    let diff: Vec<Term> = observed
        .term()
        .children()
        .iter()
        .filter(|f| {
            let marginal: f64 = predicted
                .iter()
                .filter(|(m, _)| m.term().children().contains(f))
                .map(|(_, p)| p)
                .sum();
            marginal < threshold
        })
        .cloned()
        .collect();
    (!diff.is_empty()).then_some(diff)
}

/// The observed change of one step: the prior state as seen through the
/// condition labels, and the facts added and removed as seen through the
/// effect labels, with immediate events counted as added.
#[derive(Clone, Debug, PartialEq)]
pub struct Delta {
    pub prior: WorldState,
    pub added: Vec<Term>,
    pub removed: Vec<Term>,
}

impl Delta {
    pub fn new(
        state: &WorldState,
        next: &WorldState,
        events: &[Term],
        conditions: &[String],
        effects: &[String],
    ) -> Self {
        let before = state.project(effects);
        let after = next.project(effects);
        let mut added = after.difference(&before);
        for e in events {
            if !added.contains(e) {
                added.push(e.clone());
            }
        }
        added.sort();
        Delta {
            prior: state.project(conditions),
            added,
            removed: before.difference(&after),
        }
    }

    pub fn from_transition(tr: &Transition, conditions: &[String], effects: &[String]) -> Self {
        Delta::new(&tr.state, &tr.next, &tr.events, conditions, effects)
    }
}

fn same_set(a: &[Term], b: &[Term]) -> bool {
    let a: BTreeSet<&Term> = a.iter().collect();
    let b: BTreeSet<&Term> = b.iter().collect();
    a == b
}

impl CausalRule {
    /// Whether the effect is exactly the observed change.
    pub fn explains(&self, delta: &Delta) -> bool {
        same_set(&self.effect_add, &delta.added) && same_set(&self.effect_remove, &delta.removed)
    }
}

/// A new rule whose conditions are the whole prior state and whose effect
/// is exactly the observed change, counted as one success.
pub fn induce_rule(id: u64, action: &str, delta: &Delta) -> CausalRule {
    CausalRule {
        id,
        conditions: delta.prior.facts().cloned().map(Condition::Fact).collect(),
        action: Some(action.to_string()),
        effect_add: delta.added.clone(),
        effect_remove: delta.removed.clone(),
        successes: 1,
        trials: 1,
        temporal: None,
        positives: vec![delta.prior.clone()],
    }
}

/// One trial of an applicable rule.
pub fn update_confidence(rule: &CausalRule, success: bool, state: &WorldState) -> CausalRule {
    let mut r = rule.clone();
    r.record(success, state);
    r
}

fn entropy2(pos: usize, neg: usize) -> f64 {
    let n = (pos + neg) as f64;
    [pos, neg]
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn numeric_facts(s: &WorldState) -> impl Iterator<Item = (&str, f64)> {
    s.facts()
        .filter(|f| f.children().len() == 1)
        .filter_map(|f| f.arg_f64(0).map(|v| (f.label(), v)))
}

/// Adds the condition that best separates the rule's positive instances from
/// a counterexample: the candidate excluding the counterexample with the
/// highest information gain, ties broken by the smaller printed condition.
/// Candidates are facts of the positives and, for single-number facts,
/// thresholds midway between observed values. For a temporal rule an
/// `(Activity x)` fact sets the activity predicate instead. Counts restart
/// from the positives that satisfy the new condition.
pub fn refine_rule(rule: &CausalRule, counter: &WorldState) -> Result<CausalRule> {
    let positives = &rule.positives;
    let total = entropy2(positives.len(), 1);
    let n = (positives.len() + 1) as f64;
    let mut candidates: BTreeSet<(String, usize)> = BTreeSet::new();
    let mut conds: Vec<Condition> = Vec::new();
    let mut push = |c: Condition| {
        if !conds.contains(&c) && !rule.conditions.contains(&c) {
            candidates.insert((c.to_string(), conds.len()));
            conds.push(c);
        }
    };
    for p in positives {
        for f in p.facts() {
            if !counter.contains(f) {
                push(Condition::Fact(f.clone()));
            }
        }
    }
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (label, v) in positives.iter().chain(std::iter::once(counter)).flat_map(numeric_facts) {
        values.entry(label).or_default().push(v);
    }
    for (label, mut vs) in values {
        vs.sort_by(f64::total_cmp);
        vs.dedup();
        for w in vs.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let (label, threshold) = (label.to_string(), threshold);
            for c in [
                Condition::Below { label: label.clone(), threshold },
                Condition::AtLeast { label: label.clone(), threshold },
            ] {
                if !c.holds(counter) {
                    push(c);
                }
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for (_, i) in &candidates {
        let c = &conds[*i];
        let kept = positives.iter().filter(|p| c.holds(p)).count();
        if kept == 0 {
            continue;
        }
        // the counterexample always falls on the excluded side
        let rest = positives.len() - kept;
        let gain = total - (kept as f64 / n) * entropy2(kept, 0) - ((rest + 1) as f64 / n) * entropy2(rest, 1);
        if best.is_none_or(|(g, _)| gain > g + 1e-12) {
            best = Some((gain, *i));
        }
    }
    let (_, i) = best.ok_or(Error::NoDiscriminator)?;
    let chosen = conds[i].clone();
    let mut refined = rule.clone();
    refined.positives.retain(|p| chosen.holds(p));
    refined.successes = refined.positives.len() as u32;
    refined.trials = refined.successes;
    match (&chosen, refined.temporal.as_mut()) {
        (Condition::Fact(f), Some(t)) if f.label() == "Activity" => {
            let a = f.children().first().and_then(|a| Activity::parse(a.label()));
            t.activity = Some(a.ok_or_else(|| Error::MalformedRule(f.to_string()))?);
        }
        _ => refined.conditions.push(chosen),
    }
    Ok(refined)
}

/// Temporal candidates explaining `effect` observed at `now`: for every
/// ingestion with lag `L` in `1..=max_lag`, delays `T` in `L−2..=L+2`
/// (at least 1) crossed with both activity predicates. Counts start at 0.
pub fn attribute_delayed(log: &EventLog, effect: &Term, now: u64, max_lag: u64, level: f64) -> Vec<CausalRule> {
    let mut out: Vec<CausalRule> = Vec::new();
    for (t_i, features) in log.ingestions_within(now, max_lag) {
        let lag = now - t_i;
        for delay in lag.saturating_sub(2).max(1)..=lag + 2 {
            for activity in [Activity::Moving, Activity::Still] {
                let rule = CausalRule {
                    id: 0,
                    conditions: Vec::new(),
                    action: None,
                    effect_add: vec![effect.clone()],
                    effect_remove: Vec::new(),
                    successes: 0,
                    trials: 0,
                    temporal: Some(TemporalCondition {
                        trigger: features.to_vec(),
                        delay: delay as u32,
                        activity: Some(activity),
                        level,
                    }),
                    positives: Vec::new(),
                };
                if !out.iter().any(|r| r.same_hypothesis(&rule)) {
                    out.push(rule);
                }
            }
        }
    }
    out
}

/// Breadth-first search over predicted transitions. For each action the
/// applicable rule with the highest confidence (then lowest id) among those
/// with confidence ≥ 0.5 gives the successor. Returns the shortest action
/// sequence reaching `goal` within `horizon` steps.
pub fn plan(
    rules: &[CausalRule],
    state: &WorldState,
    goal: &dyn Fn(&WorldState) -> bool,
    horizon: usize,
) -> Option<Vec<String>> {
    let usable: Vec<&CausalRule> = rules
        .iter()
        .filter(|r| r.temporal.is_none() && r.action.is_some() && r.confidence() >= PLAN_CONFIDENCE)
        .collect();
    let actions: BTreeSet<&str> = usable.iter().filter_map(|r| r.action.as_deref()).collect();
    let mut seen = BTreeSet::from([state.clone()]);
    let mut queue = VecDeque::from([(state.clone(), Vec::<String>::new())]);
    while let Some((s, path)) = queue.pop_front() {
        if goal(&s) {
            return Some(path);
        }
        if path.len() >= horizon {
            continue;
        }
        for &a in &actions {
            let best = usable
                .iter()
                .filter(|r| r.applies(&s, a))
                .max_by(|x, y| x.confidence().total_cmp(&y.confidence()).then(y.id.cmp(&x.id)));
            let Some(r) = best else { continue };
            let mut next = r.predict(&s);
            for e in &r.effect_add {
                if e.label() == EVENT {
                    next.remove(e);
                }
            }
            if seen.insert(next.clone()) {
                let mut p = path.clone();
                p.push(a.to_string());
                queue.push_back((next, p));
            }
        }
    }
    None
}
