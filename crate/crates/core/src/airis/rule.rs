use std::fmt;

use crate::error::{Error, Result};
use crate::metagraph::{Origin, Pattern, RewriteRule, RuleId, Term, WorldState, ACTION};

/// One precondition of a causal rule.
#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    /// The fact must be present.
    Fact(Term),
    /// Some `(label v)` with numeric `v < threshold` must be present.
    Below { label: String, threshold: f64 },
    /// Some `(label v)` with numeric `v ≥ threshold` must be present.
    AtLeast { label: String, threshold: f64 },
}

impl Condition {
    pub fn holds(&self, state: &WorldState) -> bool {
        match self {
            Condition::Fact(f) => state.contains(f),
            Condition::Below { label, threshold } => state
                .with_label(label)
                .any(|f| f.arg_f64(0).is_some_and(|v| v < *threshold)),
            Condition::AtLeast { label, threshold } => state
                .with_label(label)
                .any(|f| f.arg_f64(0).is_some_and(|v| v >= *threshold)),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Condition::Fact(f) => f.clone(),
            Condition::Below { label, threshold } => {
                Term::node("<", vec![Term::atom(label), Term::atom(&format!("{threshold:?}"))])
            }
            Condition::AtLeast { label, threshold } => {
                Term::node(">=", vec![Term::atom(label), Term::atom(&format!("{threshold:?}"))])
            }
        }
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        let numeric = |t: &Term| -> Result<(String, f64)> {
            let c = t.children();
            match (c.len(), t.arg_f64(1)) {
                (2, Some(v)) => Ok((c[0].label().to_string(), v)),
                _ => Err(Error::MalformedRule(format!("bad threshold condition {t}"))),
            }
        };
        Ok(match t.label() {
            "<" => {
                let (label, threshold) = numeric(t)?;
                Condition::Below { label, threshold }
            }
            ">=" => {
                let (label, threshold) = numeric(t)?;
                Condition::AtLeast { label, threshold }
            }
            _ => Condition::Fact(t.clone()),
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Activity {
    /// Move fraction at or above the level.
    Moving,
    /// Move fraction below the level.
    Still,
}

impl Activity {
    pub fn of(fraction: f64, level: f64) -> Activity {
        if fraction >= level {
            Activity::Moving
        } else {
            Activity::Still
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activity::Moving => "Moving",
            Activity::Still => "Still",
        }
    }

    pub fn parse(s: &str) -> Option<Activity> {
        match s {
            "Moving" => Some(Activity::Moving),
            "Still" => Some(Activity::Still),
            _ => None,
        }
    }
}

/// "Some time after ingesting an item with these features, given this
/// activity since then".
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalCondition {
    /// Feature facts the ingested item must carry.
    pub trigger: Vec<Term>,
    /// The rule fires once the time since ingestion exceeds this, i.e. at
    /// lag `delay + 1`.
    pub delay: u32,
    /// Required activity over the lag window; `None` accepts either.
    pub activity: Option<Activity>,
    /// Move-fraction level separating moving from still.
    pub level: f64,
}

impl TemporalCondition {
    pub fn fire_lag(&self) -> u64 {
        self.delay as u64 + 1
    }

    pub fn triggered_by(&self, features: &[Term]) -> bool {
        self.trigger.iter().all(|f| features.contains(f))
    }

    pub fn activity_holds(&self, fraction: f64) -> bool {
        self.activity
            .is_none_or(|a| Activity::of(fraction, self.level) == a)
    }
}

/// `IF conditions AND action ⟹ effect`, with success/trial counts.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalRule {
    pub id: u64,
    pub conditions: Vec<Condition>,
    pub action: Option<String>,
    pub effect_add: Vec<Term>,
    pub effect_remove: Vec<Term>,
    pub successes: u32,
    pub trials: u32,
    pub temporal: Option<TemporalCondition>,
    /// States in which the rule held, newest last, for refinement.
    pub positives: Vec<WorldState>,
}

/// Cap on stored positive instances.
pub const MAX_POSITIVES: usize = 8;

impl CausalRule {
    pub fn confidence(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// Preconditions and action hold (for non-temporal rules).
    pub fn applies(&self, state: &WorldState, action: &str) -> bool {
        self.action.as_deref().is_none_or(|a| a == action)
            && self.conditions.iter().all(|c| c.holds(state))
    }

    /// `state` with the effect applied.
    pub fn predict(&self, state: &WorldState) -> WorldState {
        let mut next = state.clone();
        for f in &self.effect_remove {
            next.remove(f);
        }
        for f in &self.effect_add {
            // effects are ground by construction
            let _ = next.insert(f.clone());
        }
        next
    }

    /// Whether `observed` shows the effect.
    pub fn effect_observed(&self, observed: &WorldState) -> bool {
        self.effect_add.iter().all(|f| observed.contains(f))
            && self.effect_remove.iter().all(|f| !observed.contains(f))
    }

    /// Counts one trial.
    pub fn record(&mut self, success: bool, state: &WorldState) {
        self.trials += 1;
        if success {
            self.successes += 1;
            if self.positives.len() == MAX_POSITIVES {
                self.positives.remove(0);
            }
            self.positives.push(state.clone());
        }
    }

    /// Same hypothesis, ignoring id, counts and stored instances.
    pub fn same_hypothesis(&self, other: &CausalRule) -> bool {
        self.conditions == other.conditions
            && self.action == other.action
            && self.effect_add == other.effect_add
            && self.effect_remove == other.effect_remove
            && self.temporal == other.temporal
    }

    /// The equivalent rewrite rule. Immediate rules match their conditions
    /// and `(Action a)`; temporal rules match an
    /// `(Ingested feature.. lag activity)` fact. Numeric thresholds have no
    /// rewrite form.
    pub fn lower(&self, id: RuleId) -> Result<RewriteRule> {
        let mut lhs = Vec::new();
        for c in &self.conditions {
            match c {
                Condition::Fact(f) => lhs.push(f.clone()),
                other => return Err(Error::NotLowerable(other.to_string())),
            }
        }
        if let Some(t) = &self.temporal {
            let act = t.activity.map_or_else(|| Term::var("act"), |a| Term::atom(a.name()));
            lhs.push(ingested_fact(&t.trigger, t.fire_lag(), act));
        }
        if let Some(a) = &self.action {
            lhs.push(Term::fact(ACTION, &[a]));
        }
        let mut rhs: Vec<Term> = lhs.iter().filter(|f| !self.effect_remove.contains(f)).cloned().collect();
        for f in &self.effect_add {
            if !rhs.contains(f) {
                rhs.push(f.clone());
            }
        }
        RewriteRule::new(id, Pattern::new(lhs), Pattern::new(rhs), Origin::Airis)
    }

    pub fn to_term(&self) -> Term {
        let list = |head: &str, ts: &[Term]| Term::node(head, ts.to_vec());
        let mut parts = vec![
            Term::atom(&format!("c{}", self.id)),
            Term::node("if", self.conditions.iter().map(Condition::to_term).collect()),
            Term::node("do", self.action.iter().map(|a| Term::atom(a)).collect()),
            list("add", &self.effect_add),
            list("del", &self.effect_remove),
        ];
        if let Some(t) = &self.temporal {
            parts.push(Term::node(
                "temporal",
                vec![
                    list("trigger", &t.trigger),
                    Term::fact("delay", &[&t.delay.to_string()]),
                    Term::fact("activity", &[t.activity.map_or("Any", Activity::name)]),
                    Term::fact("level", &[&format!("{:?}", t.level)]),
                ],
            ));
        }
        parts.push(Term::fact(
            "confidence",
            &[&self.successes.to_string(), &self.trials.to_string()],
        ));
        parts.push(Term::node(
            "positives",
            self.positives.iter().map(|s| s.to_term("s")).collect(),
        ));
        Term::node("causal", parts)
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        let bad = |why: &str| Error::MalformedRule(format!("{why}: {t}"));
        if t.label() != "causal" {
            return Err(bad("expected (causal ...)"));
        }
        let c = t.children();
        let id = c
            .first()
            .and_then(|x| x.label().strip_prefix('c'))
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("missing id"))?;
        let part = |name: &str| c.iter().find(|x| x.label() == name && !x.is_var());
        let kids = |name: &str| part(name).map(|x| x.children().to_vec()).unwrap_or_default();
        let num = |x: Option<&Term>, i: usize| x.and_then(|x| x.arg_f64(i));
        let conditions = kids("if").iter().map(Condition::from_term).collect::<Result<_>>()?;
        let action = kids("do").first().map(|a| a.label().to_string());
        let temporal = match part("temporal") {
            None => None,
            Some(tp) => {
                let f = |n: &str| tp.children().iter().find(|x| x.label() == n);
                let activity = f("activity")
                    .and_then(|a| a.children().first())
                    .map(|a| a.label())
                    .ok_or_else(|| bad("missing activity"))?;
                Some(TemporalCondition {
                    trigger: f("trigger").map(|x| x.children().to_vec()).unwrap_or_default(),
                    delay: num(f("delay"), 0).ok_or_else(|| bad("missing delay"))? as u32,
                    activity: Activity::parse(activity),
                    level: num(f("level"), 0).ok_or_else(|| bad("missing level"))?,
                })
            }
        };
        let conf = part("confidence");
        let positives = kids("positives")
            .iter()
            .map(|s| WorldState::from_facts(s.children().iter().cloned()))
            .collect::<Result<_>>()?;
        Ok(CausalRule {
            id,
            conditions,
            action,
            effect_add: kids("add"),
            effect_remove: kids("del"),
            successes: num(conf, 0).ok_or_else(|| bad("missing confidence"))? as u32,
            trials: num(conf, 1).ok_or_else(|| bad("missing confidence"))? as u32,
            temporal,
            positives,
        })
    }
}

impl fmt::Display for CausalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// `(Ingested v1 v2 .. lag activity)` where `vi` are the feature values.
pub fn ingested_fact(features: &[Term], lag: u64, activity: Term) -> Term {
    let mut kids: Vec<Term> = features
        .iter()
        .map(|f| f.children().first().cloned().unwrap_or_else(|| Term::atom(f.label())))
        .collect();
    kids.push(Term::atom(&lag.to_string()));
    kids.push(activity);
    Term::node("Ingested", kids)
}
