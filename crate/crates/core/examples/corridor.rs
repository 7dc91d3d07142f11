//! Trains both updaters on the four-cell corridor and walks the greedy
//! policy from the left end.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use actpc_chem::envs::{CorridorConfig, EnvConfig, Environment};
use actpc_chem::learning::{Trainer, TrainerConfig, Updater};

fn main() -> actpc_chem::Result<()> {
    let env_cfg = EnvConfig::Corridor(CorridorConfig::default());
    for updater in [Updater::Naive, Updater::Natural] {
        let cfg = TrainerConfig {
            updater,
            iterations: 500,
            initial_rules: vec![
                "(State ?s) => (State ?s) (Action Right)".into(),
                "(State ?s) => (State ?s) (Action Left)".into(),
            ],
            ..TrainerConfig::default()
        };
        let trainer = Trainer::new(cfg, &env_cfg)?;
        let state = trainer.train()?;
        let last = state.metrics.last().expect("metrics");
        println!("{}: {} rules, final e_t {:.4}", updater.name(), state.rules.len(), last.e_t);
        for (r, p) in state.rules.iter().zip(state.probs()) {
            println!("  {p:.3} {r}");
        }

        let agent = actpc_chem::learning::Agent::new(state.rules.clone(), &state.params.logits, Vec::new(), None);
        let mut env = env_cfg.build()?;
        let mut obs = env.reset(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut path = Vec::new();
        while !env.is_done() && path.len() < 10 {
            let a = agent.act(&obs, env.actions(), &mut rng);
            obs = env.step(&a)?.obs;
            path.push(a);
        }
        println!("  greedy path: {}", path.join(" "));
    }
    Ok(())
}
