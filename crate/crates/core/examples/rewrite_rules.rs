//! Parse rules, match them against a state, rewrite, and sample from a
//! weighted population.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use actpc_chem::metagraph::{apply_rule, generate, match_pattern, rule_distance, Origin, RewriteRule, WorldState};

fn main() -> actpc_chem::Result<()> {
    let state = WorldState::parse("(State 0) (Color Red)")?;
    let rules = vec![
        RewriteRule::parse(0, "(State ?s) => (State ?s) (Action Right)", Origin::Seed)?,
        RewriteRule::parse(1, "(State ?s) => (State ?s) (Action Left)", Origin::Seed)?,
        RewriteRule::parse(2, "(State 0) (Color ?c) => (State 0) (Color ?c) (Action Right)", Origin::Seed)?,
    ];
    for r in &rules {
        let bindings = match_pattern(r.lhs(), &state);
        println!("{r}");
        println!("  bindings {bindings:?}");
        if let Some(next) = apply_rule(r, &state) {
            println!("  rewrites to {next}");
        }
    }

    println!("distances:");
    for a in &rules {
        let row: Vec<String> = rules.iter().map(|b| format!("{}", rule_distance(a, b))).collect();
        println!("  {}", row.join(" "));
    }

    let probs = [0.6, 0.1, 0.3];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = [0usize; 3];
    for _ in 0..1000 {
        let (id, _) = generate(&rules, &probs, &state, &mut rng)?;
        counts[id.0 as usize] += 1;
    }
    println!("1000 samples at p = {probs:?}: {counts:?}");
    Ok(())
}
