//! Experiment configs, seeded runs, updater comparisons and snapshots.
//!
//! A run writes `<out>/<name>/<seed>/` holding `metrics_seed<seed>.csv`,
//! `snapshot.sexp` and the resolved `config.json`; the experiment root gets
//! `summary.csv` and `summary.txt`. Comparisons tag each file with the
//! updater name and write `comparison.csv` / `comparison.txt`.

mod config;
mod experiment;
mod snapshot;

pub use config::ExperimentConfig;
pub use experiment::{
    compare_updaters, eval_csv, evaluate_snapshot, iters_to_threshold, quantile, run_experiment, run_single,
    sibling_config, summarize, summary_csv, summary_text, EvalReport, ExperimentReport, RunOptions, RunResult,
    SummaryRow, EVAL_SALT,
};
pub use snapshot::{rng_digest, Snapshot};
