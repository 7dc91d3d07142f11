//! Rule probabilities and the outcome distributions compared by the error
//! signal.
//!
//! The logits ξ map to rule probabilities through a softmax. A state and a
//! probability vector induce a predicted distribution over outcome patterns
//! (what the rewritten state looks like through a [`Projection`]); a window
//! of experienced transitions induces the observed one. Their divergence is
//! the prediction error.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::metagraph::{apply_rule, generate, generate_chained, renormalized, RewriteRule, Term, WorldState};

/// Tolerance for simplex checks.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Per-rule logits ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleParams {
    pub logits: Vec<f64>,
}

impl RuleParams {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if let Some(x) = logits.iter().find(|x| !x.is_finite()) {
            return Err(Error::StepRejected(format!("non-finite logit {x}")));
        }
        Ok(RuleParams { logits })
    }

    pub fn uniform(n: usize) -> Self {
        RuleParams { logits: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }
}

/// A probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexVector {
    probs: Vec<f64>,
}

impl SimplexVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::UndefinedDistribution);
        }
        Ok(SimplexVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

pub fn rule_probs(params: &RuleParams) -> SimplexVector {
    SimplexVector {
        probs: softmax(&params.logits),
    }
}

/// Which facts of a state make up an outcome pattern. An empty label list
/// keeps every fact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub labels: Vec<String>,
}

impl Projection {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        Projection {
            labels: labels.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn all() -> Self {
        Projection { labels: Vec::new() }
    }

    pub fn apply(&self, state: &WorldState) -> WorldState {
        if self.labels.is_empty() {
            state.clone()
        } else {
            state.project(&self.labels)
        }
    }
}

/// A projected, ground outcome. The canonical key is `(m fact ...)` with
/// facts in state order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomePattern(Term);

impl OutcomePattern {
    pub fn new(projected: &WorldState) -> Self {
        OutcomePattern(projected.to_term("m"))
    }

    pub fn project(proj: &Projection, state: &WorldState) -> Self {
        Self::new(&proj.apply(state))
    }

    pub fn term(&self) -> &Term {
        &self.0
    }

    pub fn key(&self) -> String {
        self.0.to_string()
    }

    pub fn parse(key: &str) -> Result<Self> {
        let t = Term::parse(key)?;
        if t.label() != "m" || t.is_var() || !t.is_ground() {
            return Err(Error::Parse {
                pos: 0,
                msg: format!("not an outcome key: {key}"),
            });
        }
        Ok(OutcomePattern(t))
    }
}

/// Finite distribution over outcome patterns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutcomeDistribution {
    probs: BTreeMap<OutcomePattern, f64>,
}

impl OutcomeDistribution {
    /// Normalizes nonnegative masses. Fails on zero total mass.
    pub fn from_masses(masses: BTreeMap<OutcomePattern, f64>) -> Result<Self> {
        let total: f64 = masses.values().sum();
        if !(total > 0.0) || masses.values().any(|&w| !(w >= 0.0)) {
            return Err(Error::UndefinedDistribution);
        }
        Ok(OutcomeDistribution {
            probs: masses.into_iter().map(|(k, w)| (k, w / total)).collect(),
        })
    }

    pub fn point(m: OutcomePattern) -> Self {
        OutcomeDistribution {
            probs: BTreeMap::from([(m, 1.0)]),
        }
    }

    pub fn prob(&self, m: &OutcomePattern) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomePattern, f64)> {
        self.probs.iter().map(|(k, &v)| (k, v))
    }

    /// Outcomes with positive mass.
    pub fn support(&self) -> impl Iterator<Item = &OutcomePattern> {
        self.probs.iter().filter(|(_, &v)| v > 0.0).map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// `outcome_key,prob` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome_key,prob\n");
        for (k, p) in &self.probs {
            let _ = writeln!(out, "{},{:?}", k.key(), p);
        }
        out
    }

    pub fn from_csv(src: &str) -> Result<Self> {
        let mut probs = BTreeMap::new();
        for (i, line) in src.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let (k, p) = line.rsplit_once(',').ok_or(Error::Parse {
                pos: i,
                msg: "expected `outcome_key,prob`".into(),
            })?;
            let p: f64 = p.trim().parse().map_err(|_| Error::Parse {
                pos: i,
                msg: format!("bad probability `{p}`"),
            })?;
            probs.insert(OutcomePattern::parse(k)?, p);
        }
        Ok(OutcomeDistribution { probs })
    }
}

/// Exact predicted distribution: each matching rule contributes its
/// renormalized probability to the outcome its rewrite produces.
pub fn predicted_dist(
    rules: &[RewriteRule],
    probs: &[f64],
    state: &WorldState,
    proj: &Projection,
) -> Result<OutcomeDistribution> {
    if probs.len() != rules.len() {
        return Err(Error::DimensionMismatch {
            expected: rules.len(),
            got: probs.len(),
        });
    }
    let weighted = renormalized(rules, probs, state);
    if weighted.is_empty() {
        return Err(Error::NoApplicableRule);
    }
    let mut masses = BTreeMap::new();
    for (i, w) in weighted {
        if let Some(out) = apply_rule(&rules[i], state) {
            *masses.entry(OutcomePattern::project(proj, &out)).or_insert(0.0) += w;
        }
    }
    OutcomeDistribution::from_masses(masses)
}

/// Monte-Carlo predicted distribution from `n_samples` runs of the
/// generator, chained up to `depth` rewrites when `depth > 1`.
pub fn predicted_dist_sampled<R: Rng + ?Sized>(
    rules: &[RewriteRule],
    probs: &[f64],
    state: &WorldState,
    proj: &Projection,
    n_samples: usize,
    depth: usize,
    rng: &mut R,
) -> Result<OutcomeDistribution> {
    let mut masses = BTreeMap::new();
    for _ in 0..n_samples {
        let out = if depth > 1 {
            generate_chained(rules, probs, state, depth, rng)?.1
        } else {
            generate(rules, probs, state, rng)?.1
        };
        *masses.entry(OutcomePattern::project(proj, &out)).or_insert(0.0) += 1.0;
    }
    OutcomeDistribution::from_masses(masses)
}

/// Smoothed relative frequencies `(w + s) / (W + s·|support|)` over the
/// union of `support` and the counted outcomes.
pub fn smoothed(
    counts: &BTreeMap<OutcomePattern, f64>,
    support: &[OutcomePattern],
    smoothing: f64,
) -> Result<OutcomeDistribution> {
    let mut masses: BTreeMap<OutcomePattern, f64> =
        support.iter().map(|m| (m.clone(), smoothing)).collect();
    for (m, &w) in counts {
        *masses.entry(m.clone()).or_insert(smoothing) += w;
    }
    OutcomeDistribution::from_masses(masses)
}

/// Observed distribution of the window's outcomes (state plus taken action,
/// projected), one count per record.
pub fn observed_dist(
    history: &HistoryWindow,
    proj: &Projection,
    support: &[OutcomePattern],
    smoothing: f64,
) -> Result<OutcomeDistribution> {
    let mut counts = BTreeMap::new();
    for r in history.iter() {
        *counts.entry(r.outcome(proj)).or_insert(0.0) += 1.0;
    }
    smoothed(&counts, support, smoothing)
}

/// Σ q log(q/p) in nats. Terms with q = 0 vanish; q > 0 where p = 0 is an
/// [`Error::InfiniteDivergence`].
pub fn kl(q: &OutcomeDistribution, p: &OutcomeDistribution) -> Result<f64> {
    let mut acc = 0.0;
    for (m, qm) in q.iter() {
        if qm <= 0.0 {
            continue;
        }
        let pm = p.prob(m);
        if pm <= 0.0 {
            return Err(Error::InfiniteDivergence(m.key()));
        }
        acc += qm * (qm.ln() - pm.ln());
    }
    Ok(acc.max(0.0))
}

/// Cross-entropy of q against p: Σ q log(1/p).
pub fn surprise(q: &OutcomeDistribution, p: &OutcomeDistribution) -> Result<f64> {
    let mut acc = 0.0;
    for (m, qm) in q.iter() {
        if qm <= 0.0 {
            continue;
        }
        let pm = p.prob(m);
        if pm <= 0.0 {
            return Err(Error::InfiniteDivergence(m.key()));
        }
        acc -= qm * pm.ln();
    }
    Ok(acc)
}

pub fn entropy(q: &OutcomeDistribution) -> f64 {
    -q.iter().filter(|(_, x)| *x > 0.0).map(|(_, x)| x * x.ln()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    pub alpha_int: f64,
    pub alpha_ep: f64,
}

impl RewardWeights {
    pub fn new(alpha_int: f64, alpha_ep: f64) -> Result<Self> {
        if !(alpha_int >= 0.0 && alpha_ep >= 0.0) || alpha_int + alpha_ep == 0.0 {
            return Err(Error::Config(
                "reward weights must be nonnegative and not both zero".into(),
            ));
        }
        Ok(RewardWeights { alpha_int, alpha_ep })
    }

    /// `alpha_ep` decayed linearly to zero at `frac` of `total` iterations.
    pub fn decayed(&self, iter: usize, total: usize, frac: f64) -> RewardWeights {
        let end = (total as f64 * frac).max(1.0);
        let scale = (1.0 - iter as f64 / end).clamp(0.0, 1.0);
        RewardWeights {
            alpha_int: self.alpha_int,
            alpha_ep: self.alpha_ep * scale,
        }
    }
}

/// r_t = α_int·(−e_t) + α_ep·r_ep + env_reward
pub fn combined_reward(e_t: f64, r_ep: f64, env_reward: f64, w: RewardWeights) -> f64 {
    w.alpha_int * -e_t + w.alpha_ep * r_ep + env_reward
}

/// One experienced step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub t: u64,
    pub episode: u64,
    /// Observation before acting.
    pub state: WorldState,
    pub action: String,
    pub next: WorldState,
    pub reward: f64,
    /// `(Event _)` facts reported by the environment for this step.
    pub events: Vec<Term>,
    /// Context for world-model rules, when a model channel is active.
    pub context: Option<WorldState>,
    /// Discounted reward collected from this step to the end of its
    /// episode, as far as it has been observed.
    pub ret: f64,
}

impl Transition {
    /// The state with the taken action as an `(Action a)` fact.
    pub fn acted(&self) -> WorldState {
        let mut s = self.state.clone();
        // actions are plain atoms, always ground
        let _ = s.set(Term::fact(crate::metagraph::ACTION, &[&self.action]));
        s
    }

    pub fn outcome(&self, proj: &Projection) -> OutcomePattern {
        OutcomePattern::project(proj, &self.acted())
    }
}

/// Bounded FIFO of the most recent transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryWindow {
    capacity: usize,
    records: VecDeque<Transition>,
}

impl HistoryWindow {
    pub fn new(capacity: usize) -> Self {
        HistoryWindow {
            capacity: capacity.max(1),
            records: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends, evicting the oldest record when full. Timestamps must not
    /// go backwards.
    pub fn push(&mut self, rec: Transition) -> Result<()> {
        if let Some(last) = self.records.back() {
            if rec.t < last.t {
                return Err(Error::Config(format!(
                    "history timestamp {} after {}",
                    rec.t, last.t
                )));
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(rec);
        Ok(())
    }

    /// Adds `reward` received at the newest step to the returns of that
    /// step and the earlier steps of the same episode, discounted by
    /// `gamma` per step.
    pub fn credit(&mut self, reward: f64, gamma: f64) {
        let Some(last) = self.records.back() else {
            return;
        };
        let (ep, t) = (last.episode, last.t);
        for r in self.records.iter_mut().rev() {
            if r.episode != ep {
                break;
            }
            r.ret += reward * gamma.powi((t - r.t) as i32);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.records.iter()
    }

    pub fn last(&self) -> Option<&Transition> {
        self.records.back()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metagraph::Origin;

    fn m(s: &str) -> OutcomePattern {
        OutcomePattern::new(&WorldState::parse(s).unwrap())
    }

    fn dist(pairs: &[(&str, f64)]) -> OutcomeDistribution {
        OutcomeDistribution::from_masses(pairs.iter().map(|(k, v)| (m(k), *v)).collect()).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = rule_probs(&RuleParams::uniform(3));
        assert!(p.probs().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = rule_probs(&RuleParams::new(vec![0.0, 3f64.ln()]).unwrap());
        assert!((p.probs()[0] - 0.25).abs() < 1e-12 && (p.probs()[1] - 0.75).abs() < 1e-12);
        assert_eq!(rule_probs(&RuleParams::new(vec![42.0]).unwrap()).probs(), &[1.0]);
        let shifted = softmax(&[1000.0, 1000.0 + 3f64.ln()]);
        assert!((shifted[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn predicted_corridor() {
        let rules = vec![
            RewriteRule::parse(0, "(State ?s) => (State ?s) (Action Right)", Origin::Seed).unwrap(),
            RewriteRule::parse(1, "(State ?s) => (State ?s) (Action Left)", Origin::Seed).unwrap(),
        ];
        let s = WorldState::parse("(State 0)").unwrap();
        let d = predicted_dist(&rules, &[0.75, 0.25], &s, &Projection::all()).unwrap();
        assert_eq!(d.prob(&m("(State 0) (Action Right)")), 0.75);
        assert_eq!(d.prob(&m("(State 0) (Action Left)")), 0.25);
        let one = predicted_dist(&rules[..1], &[1.0], &s, &Projection::all()).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn kl_and_surprise_examples() {
        let a = dist(&[("A", 1.0), ("B", 0.0)]);
        let half = dist(&[("A", 0.5), ("B", 0.5)]);
        assert_eq!(kl(&half, &half).unwrap(), 0.0);
        assert!((kl(&a, &half).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(kl(&half, &a), Err(Error::InfiniteDivergence(_))));
        assert!((surprise(&half, &half).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((surprise(&a, &half).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(surprise(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rewards() {
        let w = RewardWeights::new(1.0, 0.0).unwrap();
        assert_eq!(combined_reward(0.5, 0.0, 0.0, w), -0.5);
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        assert!((combined_reward(0.0, 0.25, 1.0, w) - 1.25).abs() < 1e-12);
        assert!(RewardWeights::new(0.0, 0.0).is_err());
        assert_eq!(w.decayed(80, 100, 0.8).alpha_ep, 0.0);
        assert_eq!(w.decayed(40, 100, 0.8).alpha_ep, 0.5);
    }

    #[test]
    fn csv_round_trip() {
        let d = dist(&[("(State 0) (Action Right)", 0.75), ("(State 0) (Action Left)", 0.25)]);
        let csv = d.to_csv();
        assert!(csv.starts_with("outcome_key,prob\n"));
        assert_eq!(OutcomeDistribution::from_csv(&csv).unwrap(), d);
    }

    fn tr(t: u64, ep: u64, a: &str, r: f64) -> Transition {
        Transition {
            t,
            episode: ep,
            state: WorldState::parse("(State 0)").unwrap(),
            action: a.into(),
            next: WorldState::parse("(State 0)").unwrap(),
            reward: r,
            events: Vec::new(),
            context: None,
            ret: 0.0,
        }
    }

    #[test]
    fn window_counts_and_credit() {
        let mut h = HistoryWindow::new(3);
        for t in 0..4 {
            h.push(tr(t, t / 2, if t == 3 { "Left" } else { "Right" }, 0.0)).unwrap();
        }
        assert_eq!(h.len(), 3);
        assert!(h.push(tr(1, 1, "Right", 0.0)).is_err());
        let q = observed_dist(&h, &Projection::all(), &[], 0.0).unwrap();
        assert!((q.prob(&m("(State 0) (Action Right)")) - 2.0 / 3.0).abs() < 1e-12);
        h.credit(1.0, 0.5);
        let rets: Vec<f64> = h.iter().map(|r| r.ret).collect();
        assert_eq!(rets, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn smoothing_forces_uniform_on_empty_history() {
        let h = HistoryWindow::new(4);
        let support: Vec<_> = ["A", "B", "C", "D"].iter().map(|s| m(s)).collect();
        let q = observed_dist(&h, &Projection::all(), &support, 1.0).unwrap();
        assert!(q.iter().all(|(_, p)| (p - 0.25).abs() < 1e-15));
        assert_eq!(observed_dist(&h, &Projection::all(), &support, 0.0), Err(Error::UndefinedDistribution));
    }
}
