//! The stochastic generative operator: pick one applicable rule with
//! probability proportional to its weight among the rules that match, and
//! rewrite the state with it.

use rand::Rng;

use super::rule::{apply_rule, match_pattern, RewriteRule, RuleId};
use super::state::WorldState;
use crate::error::{Error, Result};

/// Default bound on chained rewrites.
pub const MAX_CHAIN_DEPTH: usize = 8;

/// Indices of rules whose lhs matches `state`.
pub fn matching(rules: &[RewriteRule], state: &WorldState) -> Vec<usize> {
    rules
        .iter()
        .enumerate()
        .filter(|(_, r)| match_pattern(r.lhs(), state).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Probabilities of the matching rules, renormalized to sum to one. Returns
/// `(index, probability)` pairs; empty when no matching rule has weight.
pub fn renormalized(rules: &[RewriteRule], probs: &[f64], state: &WorldState) -> Vec<(usize, f64)> {
    let idx = matching(rules, state);
    let total: f64 = idx.iter().map(|&i| probs[i]).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    idx.into_iter()
        .filter(|&i| probs[i] > 0.0)
        .map(|i| (i, probs[i] / total))
        .collect()
}

fn sample_index<R: Rng + ?Sized>(weighted: &[(usize, f64)], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(i, p) in weighted {
        acc += p;
        if u < acc {
            return i;
        }
    }
    weighted.last().map(|&(i, _)| i).unwrap_or(0)
}

/// One rewrite step.
pub fn generate<R: Rng + ?Sized>(
    rules: &[RewriteRule],
    probs: &[f64],
    state: &WorldState,
    rng: &mut R,
) -> Result<(RuleId, WorldState)> {
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
    let i = sample_index(&weighted, rng);
    let next = apply_rule(&rules[i], state).ok_or(Error::NoApplicableRule)?;
    Ok((rules[i].id, next))
}

/// Repeated rewriting: keeps sampling among rules whose application changes
/// the state, until none does or `max_depth` rewrites have happened.
pub fn generate_chained<R: Rng + ?Sized>(
    rules: &[RewriteRule],
    probs: &[f64],
    state: &WorldState,
    max_depth: usize,
    rng: &mut R,
) -> Result<(Vec<RuleId>, WorldState)> {
    let mut current = state.clone();
    let mut trace = Vec::new();
    for _ in 0..max_depth {
        let candidates: Vec<(usize, f64)> = renormalized(rules, probs, &current)
            .into_iter()
            .filter(|&(i, _)| apply_rule(&rules[i], &current).is_some_and(|s| s != current))
            .collect();
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        if total <= 0.0 {
            break;
        }
        let weighted: Vec<(usize, f64)> = candidates.iter().map(|&(i, p)| (i, p / total)).collect();
        let i = sample_index(&weighted, rng);
        current = apply_rule(&rules[i], &current).ok_or(Error::NoApplicableRule)?;
        trace.push(rules[i].id);
    }
    if trace.is_empty() {
        return Err(Error::NoApplicableRule);
    }
    Ok((trace, current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metagraph::rule::Origin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corridor_rules() -> Vec<RewriteRule> {
        vec![
            RewriteRule::parse(0, "(State ?s) => (State ?s) (Action Right)", Origin::Seed).unwrap(),
            RewriteRule::parse(1, "(State ?s) => (State ?s) (Action Left)", Origin::Seed).unwrap(),
        ]
    }

    #[test]
    fn fair_coin_frequency() {
        let rules = corridor_rules();
        let s = WorldState::parse("(State 0)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let rights = (0..n)
            .filter(|_| generate(&rules, &[0.5, 0.5], &s, &mut rng).unwrap().0 == RuleId(0))
            .count();
        let freq = rights as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn degenerate_distribution() {
        let rules = corridor_rules();
        let s = WorldState::parse("(State 0)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (id, out) = generate(&rules, &[1.0, 0.0], &s, &mut rng).unwrap();
            assert_eq!(id, RuleId(0));
            assert!(out.contains(&crate::metagraph::Term::fact("Action", &["Right"])));
        }
    }

    #[test]
    fn no_rule_matches() {
        let rules = vec![RewriteRule::parse(0, "(State 0) => (State 0) (Action Right)", Origin::Seed).unwrap()];
        let s = WorldState::parse("(State 1)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(generate(&rules, &[1.0], &s, &mut rng), Err(Error::NoApplicableRule));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let rules = corridor_rules();
        let s = WorldState::parse("(State 0)").unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| generate(&rules, &[0.3, 0.7], &s, &mut rng).unwrap().0)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn renormalized_mass_sums_to_one() {
        let mut rules = corridor_rules();
        rules.push(RewriteRule::parse(2, "(State 1) => (State 1) (Action Right)", Origin::Seed).unwrap());
        let s = WorldState::parse("(State 0)").unwrap();
        let w = renormalized(&rules, &[0.2, 0.3, 0.5], &s);
        assert_eq!(w.len(), 2);
        assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chaining_stops_at_fixed_point() {
        let rules = vec![
            RewriteRule::parse(0, "(A) => (B)", Origin::Seed).unwrap(),
            RewriteRule::parse(1, "(B) => (C)", Origin::Seed).unwrap(),
        ];
        let s = WorldState::parse("A").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (trace, out) = generate_chained(&rules, &[0.5, 0.5], &s, MAX_CHAIN_DEPTH, &mut rng).unwrap();
        assert_eq!(trace, vec![RuleId(0), RuleId(1)]);
        assert_eq!(out, WorldState::parse("C").unwrap());
    }
}
