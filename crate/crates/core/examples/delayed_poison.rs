//! The feature world with a conditional item: eating it makes the bug sick
//! ten steps later unless it keeps moving. Trains the natural updater with
//! causal induction and lists the confirmed temporal rules.

use actpc_chem::envs::{random_policy_baseline, EnvConfig, FeatureWorldConfig};
use actpc_chem::learning::{evaluate, Trainer, TrainerConfig, Updater};

fn main() -> actpc_chem::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let env_cfg = EnvConfig::Featureworld(FeatureWorldConfig::default());
    let cfg = TrainerConfig {
        updater: Updater::NaturalAiris,
        iterations,
        condition_labels: ["Facing", "Hand", "Color", "Shape", "Texture"].map(String::from).to_vec(),
        ..TrainerConfig::default()
    };
    let trainer = Trainer::new(cfg, &env_cfg)?;
    let agent_labels = trainer.config().condition_labels.clone();
    let state = trainer.train()?;
    let airis = state.airis.as_ref().expect("causal learner");
    for r in airis.rules().iter().filter(|r| r.temporal.is_some() && airis.is_confirmed(r)) {
        println!("{r}  ({}/{})", r.successes, r.trials);
    }
    let agent = actpc_chem::learning::Agent::new(state.rules.clone(), &state.params.logits, agent_labels, state.airis.clone());
    let trained = evaluate(&agent, &env_cfg, 20, 3)?;
    let random = random_policy_baseline(&env_cfg, 20, 3)?;
    println!(
        "sick per episode: trained {:.2}, random {:.2}",
        trained.event_rate("Sick"),
        random.event_rate("Sick")
    );
    Ok(())
}
