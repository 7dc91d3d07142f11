//! Mining a feature conjunction that predicts reward and turning it into a
//! label rule plus a policy template.

use actpc_chem::beliefs::Transition;
use actpc_chem::learning::{propose_abstraction, AbstractionParams};
use actpc_chem::metagraph::{Term, WorldState};

fn record(t: u64, color: &str, shape: &str, reward: f64) -> Transition {
    let state = WorldState::from_facts([
        Term::fact("Color", &[color]),
        Term::fact("Shape", &[shape]),
        Term::fact("Hand", &["Full"]),
    ])
    .expect("ground");
    Transition {
        t,
        episode: 0,
        state: state.clone(),
        action: "Eat".into(),
        next: state,
        reward,
        events: Vec::new(),
        context: None,
        ret: reward,
    }
}

fn main() {
    let mut recs = Vec::new();
    let items = [("Red", "Round", 0.9), ("Red", "Square", 0.2), ("Green", "Round", 0.1), ("Green", "Square", 0.0)];
    let mut t = 0;
    for (color, shape, rate) in items {
        for i in 0..20 {
            t += 1;
            let reward = if (i as f64) < rate * 20.0 { 1.0 } else { 0.0 };
            recs.push(record(t, color, shape, reward));
        }
    }
    let features = vec!["Color".to_string(), "Shape".to_string()];
    let params = AbstractionParams {
        features: &features,
        support: 8,
        lift: 1.5,
    };
    for (label, label_rule, policy) in propose_abstraction(recs.iter(), &params, &[], 0) {
        println!("{}: {:?}", label.symbol, label.conjunction.iter().map(|f| f.to_string()).collect::<Vec<_>>());
        println!("  {label_rule}");
        println!("  {policy}");
    }
}
