use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::airis::Airis;
use crate::beliefs::softmax;
use crate::envs::{episode_seed, EnvConfig, EpisodeStats, EpisodeSummary, Environment};
use crate::error::Result;
use crate::metagraph::{apply_rule, match_pattern, RewriteRule, RuleRole, WorldState, MAX_CHAIN_DEPTH};

/// Adds the categories of every matching label rule, until nothing changes.
pub fn closure(rules: &[RewriteRule], state: &WorldState) -> WorldState {
    let labels: Vec<&RewriteRule> = rules.iter().filter(|r| r.role() == RuleRole::Label).collect();
    let mut s = state.clone();
    for _ in 0..MAX_CHAIN_DEPTH {
        let mut changed = false;
        for r in &labels {
            if let Some(out) = apply_rule(r, &s) {
                let merged = s.union(&out);
                if merged != s {
                    s = merged;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    s
}

/// The observation as policy rules see it: restricted to `labels` (all
/// facts when empty), then closed under the label rules.
pub fn policy_context(rules: &[RewriteRule], labels: &[String], obs: &WorldState) -> WorldState {
    let projected = if labels.is_empty() { obs.clone() } else { obs.project(labels) };
    closure(rules, &projected)
}

/// Indices of matching policy rules with a ground action.
pub fn matching_policy(rules: &[RewriteRule], ctx: &WorldState) -> Vec<usize> {
    (0..rules.len())
        .filter(|&i| {
            let r = &rules[i];
            r.role() == RuleRole::Policy && r.action().is_some() && match_pattern(r.lhs(), ctx).is_some()
        })
        .collect()
}

/// Samples a matching policy rule by renormalized probability.
pub fn sample_action<R: Rng + ?Sized>(
    rules: &[RewriteRule],
    probs: &[f64],
    ctx: &WorldState,
    rng: &mut R,
) -> Option<(usize, String)> {
    let idx = matching_policy(rules, ctx);
    let z: f64 = idx.iter().map(|&i| probs[i]).sum();
    if idx.is_empty() || z <= 0.0 {
        return None;
    }
    let u: f64 = rng.gen::<f64>() * z;
    let mut acc = 0.0;
    let mut pick = *idx.last().expect("nonempty");
    for &i in &idx {
        acc += probs[i];
        if u < acc {
            pick = i;
            break;
        }
    }
    Some((pick, rules[pick].action().expect("policy rule").to_string()))
}

/// The action with the most probability mass among matching policy rules,
/// with the heaviest rule proposing it. Exact ties are broken at random.
pub fn greedy_action<R: Rng + ?Sized>(
    rules: &[RewriteRule],
    probs: &[f64],
    ctx: &WorldState,
    rng: &mut R,
) -> Option<(usize, String)> {
    let mut mass: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for i in matching_policy(rules, ctx) {
        let a = rules[i].action().expect("policy rule");
        let e = mass.entry(a).or_insert((0.0, i));
        e.0 += probs[i];
        if probs[i] > probs[e.1] {
            e.1 = i;
        }
    }
    let best = mass.values().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<(&str, usize)> = mass.iter().filter(|(_, v)| v.0 == best).map(|(a, v)| (*a, v.1)).collect();
    if ties.is_empty() {
        return None;
    }
    let (a, i) = ties[rng.gen_range(0..ties.len())];
    Some((i, a.to_string()))
}

/// A frozen rule population acting greedily, optionally with a causal
/// learner that can override the choice.
#[derive(Clone, Debug)]
pub struct Agent {
    pub rules: Vec<RewriteRule>,
    pub probs: Vec<f64>,
    pub condition_labels: Vec<String>,
    pub airis: Option<Airis>,
}

impl Agent {
    pub fn new(rules: Vec<RewriteRule>, logits: &[f64], condition_labels: Vec<String>, airis: Option<Airis>) -> Self {
        Agent {
            probs: softmax(logits),
            rules,
            condition_labels,
            airis,
        }
    }

    /// Greedy action, a causal override, or `fallback` when no rule
    /// matches.
    pub fn act<R: Rng + ?Sized>(&self, obs: &WorldState, fallback: &[&str], rng: &mut R) -> String {
        if let Some(a) = self.airis.as_ref().and_then(Airis::advise) {
            return a;
        }
        let ctx = policy_context(&self.rules, &self.condition_labels, obs);
        match greedy_action(&self.rules, &self.probs, &ctx, rng) {
            Some((_, a)) => a,
            None => fallback[rng.gen_range(0..fallback.len())].to_string(),
        }
    }
}

/// Runs `episodes` greedy episodes. A causal learner, if present, observes
/// each step so its advice tracks the episode; every episode starts from
/// the agent as given.
pub fn evaluate(agent: &Agent, env_cfg: &EnvConfig, episodes: usize, seed: u64) -> Result<EpisodeSummary> {
    let mut env = env_cfg.build()?;
    let actions = env.actions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut live = agent.clone();
        let mut obs = env.reset(episode_seed(seed, ep as u64));
        if let Some(a) = live.airis.as_mut() {
            a.begin_episode();
        }
        let mut stats = EpisodeStats::default();
        while !env.is_done() {
            let action = live.act(&obs, actions, &mut rng);
            let r = env.step(&action)?;
            if let Some(a) = live.airis.as_mut() {
                a.observe(&obs, &action, &r)?;
            }
            stats.reward += r.reward;
            stats.length += 1;
            for e in &r.info.events {
                if let Some(name) = e.children().first() {
                    *stats.events.entry(name.label().to_string()).or_insert(0) += 1;
                }
            }
            obs = r.obs;
        }
        stats.solved = env.solved();
        out.push(stats);
    }
    Ok(EpisodeSummary::from_episodes(&out))
}
