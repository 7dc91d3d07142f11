//! Natural-gradient training on the bug grid, evaluated greedily against a
//! uniform-random policy. Pass an iteration count to shorten the run.

use actpc_chem::envs::{random_policy_baseline, BugGridConfig, EnvConfig};
use actpc_chem::learning::{evaluate, Trainer, TrainerConfig, Updater};

fn main() -> actpc_chem::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    let env_cfg = EnvConfig::Buggrid(BugGridConfig::default());
    let cfg = TrainerConfig {
        updater: Updater::Natural,
        iterations,
        window: 256,
        smoothing: 2.0,
        reward_scale: 20.0,
        condition_labels: vec!["Facing".into(), "Scent".into()],
        ..TrainerConfig::default()
    };
    let trainer = Trainer::new(cfg, &env_cfg)?;
    let state = trainer.train()?;
    let agent = actpc_chem::learning::Agent::new(
        state.rules.clone(),
        &state.params.logits,
        vec!["Facing".into(), "Scent".into()],
        None,
    );
    let trained = evaluate(&agent, &env_cfg, 100, 7)?;
    let random = random_policy_baseline(&env_cfg, 100, 7)?;
    println!("{} rules after {iterations} iterations", state.rules.len());
    let mut top: Vec<_> = state.rules.iter().zip(state.probs()).collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (r, p) in top.iter().take(8) {
        println!("  {p:.3} {r}");
    }
    println!("greedy reward per episode {:.2}, random {:.2}", trained.mean_reward, random.mean_reward);
    Ok(())
}
