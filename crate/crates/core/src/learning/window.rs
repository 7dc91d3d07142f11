//! The windowed prediction error as a function of the rule probabilities.
//!
//! Records are grouped by context. In each context the matching rules of a
//! channel, renormalized, give the predicted outcome distribution; the
//! record weights give the observed one. The objective is the
//! weight-averaged KL divergence over contexts, summed over channels.

use std::collections::BTreeMap;

use crate::beliefs::{OutcomePattern, Transition};
use crate::error::{Error, Result};
use crate::metagraph::{apply_rule, RewriteRule, RuleRole, Term, WorldState, ACTION, EVENT};
use crate::transport::Loss;

/// What a channel predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChannelKind {
    /// Actions, from the (projected, labelled) observation.
    Policy,
    /// Events, from the observation, the action and ingestion history.
    Model,
}

impl ChannelKind {
    pub fn role(self) -> RuleRole {
        match self {
            ChannelKind::Policy => RuleRole::Policy,
            ChannelKind::Model => RuleRole::Model,
        }
    }
}

/// Projects a rewritten context to the outcome a channel scores.
pub fn outcome_of(kind: ChannelKind, context: &WorldState, rewritten: &WorldState) -> OutcomePattern {
    match kind {
        ChannelKind::Policy => OutcomePattern::new(rewritten),
        ChannelKind::Model => {
            let mut events: Vec<Term> = rewritten
                .with_label(EVENT)
                .filter(|e| !context.contains(e))
                .cloned()
                .collect();
            if events.is_empty() {
                events.push(null_event());
            }
            OutcomePattern::new(&WorldState::from_facts(events).expect("ground events"))
        }
    }
}

/// `(Event None)`, the outcome of a step without events.
pub fn null_event() -> Term {
    Term::fact(EVENT, &["None"])
}

#[derive(Clone, Debug)]
struct Context {
    state: WorldState,
    weight: f64,
    counts: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug)]
struct Channel {
    kind: ChannelKind,
    epsilon: f64,
    contexts: Vec<Context>,
    /// Outcome table per context; indices are stable once assigned.
    outcomes: Vec<BTreeMap<OutcomePattern, usize>>,
    total: f64,
}

/// For each context of a channel, the index of the outcome the rule
/// produces there, if it matches.
pub type Column = Vec<Option<usize>>;

/// Per-channel columns of one rule.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleColumns(Vec<Option<Column>>);

/// The grouped window, ready for repeated evaluation under different rule
/// sets and probabilities.
#[derive(Clone, Debug)]
pub struct WindowModel {
    channels: Vec<Channel>,
    smoothing: f64,
}

/// A context view of one record for one channel, or `None` to skip it.
pub struct ChannelSpec<'a> {
    pub kind: ChannelKind,
    pub epsilon: f64,
    /// Whether record weights apply; otherwise every record counts once.
    pub weighted: bool,
    pub context: &'a dyn Fn(&Transition) -> Option<WorldState>,
    pub observed: &'a dyn Fn(&Transition, &WorldState) -> OutcomePattern,
}

/// The acted context as a policy outcome.
pub fn policy_observed(tr: &Transition, ctx: &WorldState) -> OutcomePattern {
    let mut s = ctx.clone();
    // actions are atoms
    let _ = s.set(Term::fact(ACTION, &[&tr.action]));
    OutcomePattern::new(&s)
}

/// The step's events, or the null event, as a model outcome.
pub fn model_observed(tr: &Transition, _ctx: &WorldState) -> OutcomePattern {
    let mut events: Vec<Term> = tr.events.clone();
    if events.is_empty() {
        events.push(null_event());
    }
    OutcomePattern::new(&WorldState::from_facts(events).expect("ground events"))
}

impl WindowModel {
    /// Groups weighted records into contexts per channel.
    pub fn build<'a, I>(records: I, specs: &[ChannelSpec<'_>], smoothing: f64) -> Self
    where
        I: IntoIterator<Item = (&'a Transition, f64)> + Clone,
    {
        let channels = specs
            .iter()
            .map(|spec| {
                let mut index: BTreeMap<WorldState, usize> = BTreeMap::new();
                let mut contexts: Vec<Context> = Vec::new();
                let mut outcomes: Vec<BTreeMap<OutcomePattern, usize>> = Vec::new();
                let mut total = 0.0;
                for (tr, w) in records.clone() {
                    let w = if spec.weighted { w } else { 1.0 };
                    let Some(ctx) = (spec.context)(tr) else { continue };
                    let m = (spec.observed)(tr, &ctx);
                    let ci = *index.entry(ctx.clone()).or_insert_with(|| {
                        contexts.push(Context {
                            state: ctx,
                            weight: 0.0,
                            counts: BTreeMap::new(),
                        });
                        outcomes.push(BTreeMap::new());
                        contexts.len() - 1
                    });
                    let table = &mut outcomes[ci];
                    let n = table.len();
                    let mi = *table.entry(m).or_insert(n);
                    *contexts[ci].counts.entry(mi).or_default() += w;
                    contexts[ci].weight += w;
                    total += w;
                }
                Channel {
                    kind: spec.kind,
                    epsilon: spec.epsilon,
                    contexts,
                    outcomes,
                    total,
                }
            })
            .collect();
        WindowModel { channels, smoothing }
    }

    pub fn n_contexts(&self) -> usize {
        self.channels.iter().map(|c| c.contexts.len()).sum()
    }

    /// Context states of a channel.
    pub fn contexts(&self, kind: ChannelKind) -> impl Iterator<Item = &WorldState> {
        self.channels
            .iter()
            .filter(move |c| c.kind == kind)
            .flat_map(|c| c.contexts.iter().map(|x| &x.state))
    }

    /// Where `rule` matches and what it produces, registering new outcomes.
    pub fn columns(&mut self, rule: &RewriteRule) -> RuleColumns {
        let role = rule.role();
        RuleColumns(
            self.channels
                .iter_mut()
                .map(|ch| {
                    if ch.kind.role() != role {
                        return None;
                    }
                    let col: Column = ch
                        .contexts
                        .iter()
                        .zip(ch.outcomes.iter_mut())
                        .map(|(ctx, table)| {
                            let out = apply_rule(rule, &ctx.state)?;
                            let m = outcome_of(ch.kind, &ctx.state, &out);
                            let n = table.len();
                            Some(*table.entry(m).or_insert(n))
                        })
                        .collect();
                    col.iter().any(Option::is_some).then_some(col)
                })
                .collect(),
        )
    }

    /// Loss view over a fixed list of rule columns.
    pub fn objective<'a>(&'a self, columns: &'a [RuleColumns]) -> WindowLoss<'a> {
        WindowLoss { model: self, columns }
    }

    /// Per context of each channel: the observed outcomes no rule produces.
    pub fn unproducible(&self, columns: &[&RuleColumns]) -> usize {
        let mut missing = 0;
        for (c, ch) in self.channels.iter().enumerate() {
            if ch.epsilon > 0.0 {
                continue;
            }
            for (x, ctx) in ch.contexts.iter().enumerate() {
                for (&m, &w) in &ctx.counts {
                    let produced = columns
                        .iter()
                        .any(|rc| rc.0[c].as_ref().is_some_and(|col| col[x] == Some(m)));
                    if w > 0.0 && !produced {
                        missing += 1;
                    }
                }
            }
        }
        missing
    }

    /// Largest renormalized probability a rule reaches in any context it
    /// matches, or `None` when it matches no context.
    pub fn max_share(&self, columns: &[RuleColumns], probs: &[f64], i: usize) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (c, _) in self.channels.iter().enumerate() {
            let Some(col) = columns[i].0[c].as_ref() else { continue };
            for (x, slot) in col.iter().enumerate() {
                if slot.is_none() {
                    continue;
                }
                let z: f64 = columns
                    .iter()
                    .zip(probs)
                    .filter(|(rc, _)| rc.0[c].as_ref().is_some_and(|col| col[x].is_some()))
                    .map(|(_, p)| p)
                    .sum();
                let share = if z > 0.0 { probs[i] / z } else { 0.0 };
                best = Some(best.map_or(share, |b: f64| b.max(share)));
            }
        }
        best
    }

    fn evaluate(&self, columns: &[RuleColumns], p: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>, f64)> {
        if columns.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: p.len(),
            });
        }
        let mut f = 0.0;
        let mut cross = 0.0;
        let mut grad = vec![0.0; if want_grad { p.len() } else { 0 }];
        for (c, ch) in self.channels.iter().enumerate() {
            if ch.total <= 0.0 {
                continue;
            }
            let members: Vec<(usize, &Column)> = columns
                .iter()
                .enumerate()
                .filter_map(|(i, rc)| rc.0[c].as_ref().map(|col| (i, col)))
                .collect();
            for (x, ctx) in ch.contexts.iter().enumerate() {
                let k_out = ch.outcomes[x].len();
                let mut mass = vec![0.0; k_out];
                let mut z = 0.0;
                let mut produced = vec![false; k_out];
                for &(i, col) in &members {
                    if let Some(m) = col[x] {
                        mass[m] += p[i];
                        z += p[i];
                        produced[m] = true;
                    }
                }
                // support: observed or produced outcomes
                let support: Vec<usize> = (0..k_out)
                    .filter(|m| produced[*m] || ctx.counts.get(m).is_some_and(|w| *w > 0.0))
                    .collect();
                let k = support.len() as f64;
                let denom = ctx.weight + self.smoothing * k;
                let eps = ch.epsilon;
                let scale = ctx.weight / ch.total;
                let mut sum_qp = 0.0;
                let mut ptilde = vec![0.0; k_out];
                let mut qv = vec![0.0; k_out];
                for &m in &support {
                    let q = (ctx.counts.get(&m).copied().unwrap_or(0.0) + self.smoothing) / denom;
                    let pm = if z > 0.0 { mass[m] / z } else { 0.0 };
                    let pt = (1.0 - eps) * pm + eps / k;
                    if q > 0.0 {
                        if pt <= 0.0 {
                            return Err(Error::InfiniteDivergence(
                                ch.outcomes[x]
                                    .iter()
                                    .find(|(_, &j)| j == m)
                                    .map(|(o, _)| o.key())
                                    .unwrap_or_default(),
                            ));
                        }
                        f += scale * q * (q.ln() - pt.ln());
                        cross -= scale * q * pt.ln();
                        sum_qp += q * pm / pt;
                    }
                    ptilde[m] = pt;
                    qv[m] = q;
                }
                if want_grad && z > 0.0 {
                    for &(i, col) in &members {
                        if let Some(m) = col[x] {
                            let ratio = if qv[m] > 0.0 { qv[m] / ptilde[m] } else { 0.0 };
                            grad[i] += -scale * (1.0 - eps) / z * (ratio - sum_qp);
                        }
                    }
                }
            }
        }
        Ok((f.max(0.0), grad, cross))
    }

    /// Weighted cross-entropy of observed against predicted, the epistemic
    /// surprise of the window.
    pub fn surprise(&self, columns: &[RuleColumns], p: &[f64]) -> Result<f64> {
        Ok(self.evaluate(columns, p, false)?.2)
    }
}

/// [`WindowModel`] with a fixed rule list, as a loss on the simplex.
pub struct WindowLoss<'a> {
    model: &'a WindowModel,
    columns: &'a [RuleColumns],
}

impl Loss for WindowLoss<'_> {
    fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.model.evaluate(self.columns, p, false)?.0)
    }

    fn grad_p(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.model.evaluate(self.columns, p, true)?.1)
    }
}
