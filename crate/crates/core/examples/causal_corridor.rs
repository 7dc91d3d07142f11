//! Causal rules induced from a random walk in the corridor, then used to
//! plan a route to the goal.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use actpc_chem::airis::{plan, Airis, AirisConfig};
use actpc_chem::envs::{Corridor, CorridorConfig, Environment};
use actpc_chem::metagraph::WorldState;

fn main() -> actpc_chem::Result<()> {
    let mut env = Corridor::new(CorridorConfig {
        terminal: false,
        max_steps: 1000,
        ..Default::default()
    })?;
    let labels = vec!["State".to_string()];
    let mut airis = Airis::new(
        AirisConfig {
            condition_labels: labels.clone(),
            effect_labels: labels,
            ..Default::default()
        },
        &["Right", "Left"],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = env.reset(0);
    for _ in 0..100 {
        let a = *env.actions().choose(&mut rng).expect("actions");
        let r = env.step(a)?;
        airis.observe(&s, a, &r)?;
        s = r.obs;
    }
    for r in airis.rules() {
        println!("{r}");
    }
    let goal = |s: &WorldState| s.contains(&Corridor::state_fact(3));
    let start = WorldState::from_facts([Corridor::state_fact(0)])?;
    println!("plan from 0: {:?}", plan(airis.rules(), &start, &goal, 8));
    Ok(())
}
