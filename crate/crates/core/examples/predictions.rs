//! Predicted outcome distributions, their Monte-Carlo estimate, and the
//! divergences used as prediction error.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use actpc_chem::beliefs::{
    entropy, kl, predicted_dist, predicted_dist_sampled, smoothed, surprise, OutcomePattern, Projection,
};
use actpc_chem::metagraph::{Origin, RewriteRule, WorldState};

fn main() -> actpc_chem::Result<()> {
    let rules = vec![
        RewriteRule::parse(0, "(State ?s) => (State ?s) (Action Right)", Origin::Seed)?,
        RewriteRule::parse(1, "(State ?s) => (State ?s) (Action Left)", Origin::Seed)?,
    ];
    let probs = [0.7, 0.3];
    let state = WorldState::parse("(State 1)")?;
    let proj = Projection::all();

    let exact = predicted_dist(&rules, &probs, &state, &proj)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mc = predicted_dist_sampled(&rules, &probs, &state, &proj, 10_000, 1, &mut rng)?;
    println!("exact:\n{}", exact.to_csv());
    println!("10k samples:\n{}", mc.to_csv());

    // an agent that went Right 9 times and Left once, smoothed by one
    // pseudo-count per outcome
    let right = OutcomePattern::new(&WorldState::parse("(State 1) (Action Right)")?);
    let left = OutcomePattern::new(&WorldState::parse("(State 1) (Action Left)")?);
    let counts = BTreeMap::from([(right.clone(), 9.0), (left.clone(), 1.0)]);
    let observed = smoothed(&counts, &[right, left], 1.0)?;
    let d = kl(&observed, &exact)?;
    println!("kl(observed || predicted) = {d:.6}");
    println!("surprise = {:.6} = kl + entropy = {:.6}", surprise(&observed, &exact)?, d + entropy(&observed));
    Ok(())
}
