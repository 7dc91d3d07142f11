use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    attribute_delayed, detect_discrepancy, ingested_fact, induce_rule, refine_rule, Activity, CausalRule, Delta,
    EventLog, DISCREPANCY_THRESHOLD,
};
use crate::beliefs::{OutcomeDistribution, OutcomePattern};
use crate::envs::StepResult;
use crate::error::{Error, Result};
use crate::metagraph::{Term, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AirisConfig {
    /// Labels of observation facts used as rule conditions; empty means all.
    pub condition_labels: Vec<String>,
    /// Labels of observation facts whose changes count as effects.
    pub effect_labels: Vec<String>,
    pub threshold: f64,
    /// Longest ingestion-to-effect lag considered.
    pub max_lag: u64,
    pub activity_level: f64,
    /// Rules with at least this many trials and confidence below
    /// `drop_confidence` are forgotten.
    pub drop_trials: u32,
    pub drop_confidence: f64,
    pub confirm_confidence: f64,
    pub confirm_trials: u32,
    pub max_rules: usize,
}

impl Default for AirisConfig {
    fn default() -> Self {
        AirisConfig {
            condition_labels: Vec::new(),
            effect_labels: Vec::new(),
            threshold: DISCREPANCY_THRESHOLD,
            max_lag: 16,
            activity_level: 0.5,
            drop_trials: 10,
            drop_confidence: 0.1,
            confirm_confidence: 0.8,
            confirm_trials: 10,
            max_rules: 2000,
        }
    }
}

/// What one observed step did to the rule store.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub discrepancy: Option<Vec<Term>>,
    pub induced: usize,
    pub refined: usize,
    pub candidates: usize,
    pub dropped: usize,
}

/// Causal rule store with its event log, fed one environment step at a time.
#[derive(Clone, Debug)]
pub struct Airis {
    cfg: AirisConfig,
    rules: Vec<CausalRule>,
    next_id: u64,
    log: EventLog,
    t: u64,
    /// Per event: (reward sum, occurrences).
    valence: BTreeMap<Term, (f64, u32)>,
    move_actions: Vec<String>,
}

impl Airis {
    pub fn new(cfg: AirisConfig, move_actions: &[&str]) -> Self {
        let log = EventLog::new(cfg.max_lag + 2);
        Airis {
            cfg,
            rules: Vec::new(),
            next_id: 0,
            log,
            t: 0,
            valence: BTreeMap::new(),
            move_actions: move_actions.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Rebuilds a learner from stored rules.
    pub fn restore(cfg: AirisConfig, move_actions: &[&str], rules: Vec<CausalRule>, next_id: u64) -> Self {
        let mut a = Airis::new(cfg, move_actions);
        a.next_id = next_id.max(rules.iter().map(|r| r.id + 1).max().unwrap_or(0));
        a.rules = rules;
        a
    }

    pub fn config(&self) -> &AirisConfig {
        &self.cfg
    }

    pub fn rules(&self) -> &[CausalRule] {
        &self.rules
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn condition_labels(&self, state: &WorldState) -> Vec<String> {
        if self.cfg.condition_labels.is_empty() {
            let mut all: Vec<String> = state.facts().map(|f| f.label().to_string()).collect();
            all.dedup();
            all
        } else {
            self.cfg.condition_labels.clone()
        }
    }

    /// Forgets pending ingestions; call when the environment resets.
    pub fn begin_episode(&mut self) {
        self.log = EventLog::new(self.cfg.max_lag + 2);
        self.t += self.cfg.max_lag + 2;
    }

    pub fn is_confirmed(&self, r: &CausalRule) -> bool {
        r.trials >= self.cfg.confirm_trials && r.confidence() >= self.cfg.confirm_confidence
    }

    /// Mean reward over the steps on which `event` happened.
    pub fn valence(&self, event: &Term) -> Option<f64> {
        self.valence.get(event).map(|(s, n)| s / *n as f64)
    }

    fn activity(&self, t_i: u64, now: u64) -> Activity {
        Activity::of(self.log.move_fraction(t_i, now), self.cfg.activity_level)
    }

    /// Temporal rules firing at `now`, with the features that triggered them.
    fn firing(&self, now: u64) -> Vec<(usize, Vec<Term>)> {
        let mut out = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            let Some(tc) = &r.temporal else { continue };
            for (t_i, feats) in self.log.ingestions_within(now, self.cfg.max_lag + 1) {
                if now - t_i == tc.fire_lag()
                    && tc.triggered_by(feats)
                    && tc.activity_holds(self.log.move_fraction(t_i, now))
                {
                    out.push((i, feats.to_vec()));
                }
            }
        }
        out
    }

    fn prediction(&self, prior: &WorldState, effect_prior: &WorldState, action: &str) -> OutcomeDistribution {
        let mut masses: BTreeMap<WorldState, f64> = BTreeMap::new();
        for r in self.rules.iter().filter(|r| r.temporal.is_none() && r.applies(prior, action)) {
            let c = r.confidence();
            if c > 0.0 {
                *masses.entry(r.predict(effect_prior)).or_default() += c;
            }
        }
        let total: f64 = masses.values().sum();
        if total <= 0.0 {
            return OutcomeDistribution::default();
        }
        let mut outcomes: Vec<(WorldState, f64)> = masses.into_iter().map(|(s, m)| (s, m / total)).collect();
        let mut events: BTreeMap<Term, f64> = BTreeMap::new();
        for (i, _) in self.firing(self.t) {
            let r = &self.rules[i];
            for e in &r.effect_add {
                let p = events.entry(e.clone()).or_default();
                *p = p.max(r.confidence());
            }
        }
        for (e, p) in events {
            outcomes = outcomes
                .into_iter()
                .flat_map(|(s, m)| {
                    let mut with = s.clone();
                    let _ = with.insert(e.clone());
                    [(with, m * p), (s, m * (1.0 - p))]
                })
                .filter(|(_, m)| *m > 0.0)
                .collect();
        }
        let mut merged: BTreeMap<OutcomePattern, f64> = BTreeMap::new();
        for (s, m) in outcomes {
            *merged.entry(OutcomePattern::new(&s)).or_default() += m;
        }
        OutcomeDistribution::from_masses(merged).unwrap_or_default()
    }

    fn push_rule(&mut self, mut r: CausalRule) -> bool {
        if self.rules.iter().any(|x| x.same_hypothesis(&r)) {
            return false;
        }
        r.id = self.next_id;
        self.next_id += 1;
        self.rules.push(r);
        true
    }

    /// Feeds one step: `prior` was observed, `action` taken, `result`
    /// returned.
    pub fn observe(&mut self, prior: &WorldState, action: &str, result: &StepResult) -> Result<StepReport> {
        self.t += 1;
        let now = self.t;
        let mut report = StepReport::default();
        self.log.record_action(now, action, self.move_actions.iter().any(|m| m == action));
        let pending = self.log.ingestions_within(now, self.cfg.max_lag).next().is_some();
        let ate = result.info.ingested.is_some();
        let (delayed, immediate): (Vec<Term>, Vec<Term>) =
            result.info.events.iter().cloned().partition(|_| pending && !ate);
        for e in &result.info.events {
            let v = self.valence.entry(e.clone()).or_default();
            v.0 += result.reward;
            v.1 += 1;
            if delayed.contains(e) {
                self.log.record_effect(now, e.clone());
            }
        }
        if let Some(feats) = &result.info.ingested {
            self.log.record_ingestion(now, feats.clone());
        }

        let labels = self.condition_labels(prior);
        let delta = Delta::new(prior, &result.obs, &immediate, &labels, &self.cfg.effect_labels);
        let effect_prior = prior.project(&self.cfg.effect_labels);
        let predicted = self.prediction(&delta.prior, &effect_prior, action);
        let mut observed = result.obs.project(&self.cfg.effect_labels);
        for e in &result.info.events {
            observed.insert(e.clone())?;
        }
        let observed = OutcomePattern::new(&observed);

        // immediate rules
        let mut refinements = Vec::new();
        for r in self.rules.iter_mut().filter(|r| r.temporal.is_none()) {
            if !r.applies(&delta.prior, action) {
                continue;
            }
            let ok = r.explains(&delta);
            let was_certain = r.successes == r.trials;
            if !ok && was_certain && r.positives.len() >= 2 {
                if let Ok(refined) = refine_rule(r, &delta.prior) {
                    refinements.push(refined);
                }
            }
            r.record(ok, &delta.prior);
        }
        // temporal rules
        let fired = self.firing(now);
        let mut hits = vec![None::<bool>; self.rules.len()];
        for (i, feats) in &fired {
            let t_i = now - self.rules[*i].temporal.as_ref().map_or(0, |t| t.fire_lag());
            let mut inst = WorldState::from_facts(feats.iter().cloned())?;
            inst.insert(Term::fact("Activity", &[self.activity(t_i, now).name()]))?;
            let r = &mut self.rules[*i];
            let ok = r.effect_add.iter().all(|e| result.info.events.contains(e));
            r.record(ok, &inst);
            hits[*i] = Some(ok);
        }
        for r in refinements {
            report.refined += usize::from(self.push_rule(r));
        }

        report.discrepancy = detect_discrepancy(&predicted, &observed, self.cfg.threshold);
        if let Some(diff) = &report.discrepancy {
            let unexplained_immediate = predicted.is_empty() || diff.iter().any(|f| !delayed.contains(f));
            if unexplained_immediate {
                report.induced += usize::from(self.push_rule(induce_rule(0, action, &delta)));
            }
            for e in diff.iter().filter(|f| delayed.contains(f)) {
                for mut cand in attribute_delayed(&self.log, e, now, self.cfg.max_lag, self.cfg.activity_level) {
                    let tc = cand.temporal.clone().expect("temporal candidate");
                    let t_i = now.saturating_sub(tc.fire_lag());
                    let fires = self
                        .log
                        .ingestions_within(now, self.cfg.max_lag + 1)
                        .any(|(t, f)| t == t_i && tc.triggered_by(f))
                        && tc.activity_holds(self.log.move_fraction(t_i, now));
                    if fires {
                        let mut inst = WorldState::from_facts(tc.trigger.iter().cloned())?;
                        inst.insert(Term::fact("Activity", &[self.activity(t_i, now).name()]))?;
                        cand.record(true, &inst);
                    }
                    report.candidates += usize::from(self.push_rule(cand));
                }
            }
        }

        let before = self.rules.len();
        let (dt, dc) = (self.cfg.drop_trials, self.cfg.drop_confidence);
        self.rules.retain(|r| !(r.trials >= dt && r.confidence() < dc));
        if self.rules.len() > self.cfg.max_rules {
            // forget the least trusted, oldest first
            let mut order: Vec<usize> = (0..self.rules.len()).collect();
            order.sort_by(|&a, &b| {
                let (ra, rb) = (&self.rules[a], &self.rules[b]);
                ra.confidence().total_cmp(&rb.confidence()).then(ra.id.cmp(&rb.id))
            });
            let excess: std::collections::BTreeSet<usize> =
                order[..self.rules.len() - self.cfg.max_rules].iter().copied().collect();
            let mut i = 0;
            self.rules.retain(|_| {
                i += 1;
                !excess.contains(&(i - 1))
            });
        }
        report.dropped = before - self.rules.len();
        self.log.prune(now);
        Ok(report)
    }

    /// `(Ingested ..)` facts for ingestions before the latest step, with
    /// their lag and the activity since, for world-model context.
    pub fn context_facts(&self) -> Vec<Term> {
        self.log
            .ingestions_within(self.t, self.cfg.max_lag + 1)
            .map(|(t_i, feats)| {
                ingested_fact(feats, self.t - t_i, Term::atom(self.activity(t_i, self.t).name()))
            })
            .collect()
    }

    /// A move action when a confirmed rule says that moving avoids a harmful
    /// or secures a beneficial delayed effect of something recently eaten.
    pub fn advise(&self) -> Option<String> {
        let next = self.t + 1;
        let mover = self.move_actions.first()?;
        for (t_i, feats) in self.log.ingestions_within(next, self.cfg.max_lag + 1) {
            for r in self.rules.iter().filter(|r| self.is_confirmed(r)) {
                let Some(tc) = &r.temporal else { continue };
                if !tc.triggered_by(feats) || next - t_i > tc.fire_lag() {
                    continue;
                }
                let value: f64 = r.effect_add.iter().filter_map(|e| self.valence(e)).sum();
                let wants_move = match tc.activity {
                    Some(Activity::Still) => value < 0.0,
                    Some(Activity::Moving) => value > 0.0,
                    None => false,
                };
                if wants_move {
                    return Some(mover.clone());
                }
            }
        }
        None
    }

    /// Rules trusted enough to join the rewrite-rule population.
    pub fn promising(&self, min_trials: u32, min_confidence: f64) -> impl Iterator<Item = &CausalRule> {
        self.rules
            .iter()
            .filter(move |r| r.trials >= min_trials && r.confidence() >= min_confidence)
    }

    /// `(causal-store (next-id n) (causal ..) ..)`
    pub fn to_term(&self) -> Term {
        let mut kids = vec![Term::fact("next-id", &[&self.next_id.to_string()])];
        kids.extend(self.rules.iter().map(CausalRule::to_term));
        Term::node("causal-store", kids)
    }

    pub fn from_term(cfg: AirisConfig, move_actions: &[&str], t: &Term) -> Result<Self> {
        if t.label() != "causal-store" {
            return Err(Error::MalformedRule(format!("expected (causal-store ..), got {t}")));
        }
        let mut next_id = 0;
        let mut rules = Vec::new();
        for k in t.children() {
            if k.label() == "next-id" {
                next_id = k.arg_f64(0).ok_or_else(|| Error::MalformedRule(k.to_string()))? as u64;
            } else {
                rules.push(CausalRule::from_term(k)?);
            }
        }
        Ok(Airis::restore(cfg, move_actions, rules, next_id))
    }
}
