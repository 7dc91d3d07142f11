//! A small seeded experiment through the harness: per-seed metrics CSVs,
//! a summary table, and a snapshot that reloads byte for byte.

use actpc_chem::harness::{run_experiment, ExperimentConfig, RunOptions, Snapshot};

fn main() -> actpc_chem::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "name": "corridor-demo",
            "env": { "type": "corridor" },
            "trainer": {
                "iterations": 300,
                "initial_rules": [
                    "(State ?s) => (State ?s) (Action Right)",
                    "(State ?s) => (State ?s) (Action Left)"
                ]
            },
            "seeds": [0, 1, 2],
            "updaters": ["natural"],
            "eval_episodes": 1
        }"#,
    )?;
    let out = std::env::temp_dir().join("actpc-demo");
    let report = run_experiment(
        &cfg,
        &RunOptions {
            out: Some(out.clone()),
            dump_geometry: true,
        },
    )?;
    println!("{}", actpc_chem::harness::summary_text(&report.summary));
    let snap_path = report.runs[0].dir.join("snapshot.sexp");
    let snap = Snapshot::load(&snap_path)?;
    println!("snapshot of seed 0 at iteration {}: {} rules", snap.iteration, snap.rules.len());
    println!("round trip identical: {}", snap.to_sexpr() == std::fs::read_to_string(&snap_path)?);
    println!("artifacts under {}", out.display());
    Ok(())
}
