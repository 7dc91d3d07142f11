use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::snapshot::Snapshot;
use crate::envs::{EnvConfig, EpisodeSummary, Environment};
use crate::error::{Error, Result};
use crate::learning::{derive_seed, evaluate, metrics_csv, MetricsRow, Trainer, Updater};
use crate::transport::{matrix_csv, spectrum};

/// Seed salt separating evaluation episodes from training episodes.
pub const EVAL_SALT: u64 = 0xE7A1;

/// Outcome of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub updater: Updater,
    /// Iteration from which the windowed error stayed below the threshold.
    pub iters_to_threshold: Option<u64>,
    pub final_e_t: f64,
    pub eval: EpisodeSummary,
    pub dir: PathBuf,
}

/// Per-updater aggregate over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub updater: Updater,
    pub seeds: usize,
    pub reached: usize,
    pub median_iters: Option<f64>,
    pub iqr_iters: Option<f64>,
    pub median_final_e_t: f64,
    pub iqr_final_e_t: f64,
    pub success_rate: f64,
    pub mean_reward: f64,
    /// Sickness events per evaluation episode, for the feature world.
    pub sickness_rate: Option<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median_iqr(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

/// First iteration from which the windowed error stays below `threshold`
/// for the rest of the run.
pub fn iters_to_threshold(rows: &[MetricsRow], threshold: f64) -> Option<u64> {
    let tail = rows.iter().rev().take_while(|r| r.e_t < threshold).count();
    (tail > 0).then(|| rows[rows.len() - tail].iter)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Output options shared by `run` and `compare`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
    /// Also writes the final Laplacian, metric tensor and their spectra.
    pub dump_geometry: bool,
}

fn experiment_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| cfg.out.clone()).join(&cfg.name)
}

/// Trains one seed with one updater and writes its artifacts into `dir`.
/// `tag` distinguishes updaters sharing a seed directory.
pub fn run_single(cfg: &ExperimentConfig, seed: u64, updater: Updater, dir: &Path, tag: Option<&str>, dump_geometry: bool) -> Result<RunResult> {
    create_dir(dir)?;
    let run_cfg = cfg.for_run(seed, updater);
    let suffix = tag.map(|t| format!("_{t}")).unwrap_or_default();
    let trainer = Trainer::new(run_cfg.trainer.clone(), &run_cfg.env)?;
    let mut trainer = trainer;
    while (trainer.state.t as usize) < run_cfg.trainer.iterations {
        trainer.run_iteration()?;
    }
    write(&dir.join(format!("metrics_seed{seed}{suffix}.csv")), &metrics_csv(&trainer.state.metrics))?;
    write(&dir.join(format!("config{suffix}.json")), &(run_cfg.to_json() + "\n"))?;
    let snap = Snapshot::from_state(
        &trainer.state,
        run_cfg.env.name(),
        &run_cfg.hash(),
        &run_cfg.trainer.condition_labels,
    );
    snap.save(&dir.join(format!("snapshot{suffix}.sexp")))?;
    if dump_geometry {
        dump_geometry_files(&mut trainer, dir, &suffix)?;
    }
    let eval = evaluate(&trainer.agent(), &run_cfg.env, run_cfg.eval_episodes, derive_seed(seed, EVAL_SALT))?;
    Ok(RunResult {
        seed,
        updater,
        iters_to_threshold: iters_to_threshold(&trainer.state.metrics, cfg.threshold),
        final_e_t: trainer.state.metrics.last().map_or(f64::NAN, |r| r.e_t),
        eval,
        dir: dir.to_path_buf(),
    })
}

fn dump_geometry_files(trainer: &mut Trainer, dir: &Path, suffix: &str) -> Result<()> {
    let (l, g) = trainer.geometry()?;
    write(&dir.join(format!("laplacian{suffix}.csv")), &matrix_csv(&l))?;
    write(&dir.join(format!("metric{suffix}.csv")), &matrix_csv(&g))?;
    let mut spec = String::from("matrix,index,eigenvalue\n");
    for (name, m) in [("laplacian", &l), ("metric", &g)] {
        let (vals, _) = spectrum(m)?;
        for (i, v) in vals.iter().enumerate() {
            let _ = writeln!(spec, "{name},{i},{v:.12e}");
        }
    }
    write(&dir.join(format!("spectrum{suffix}.csv")), &spec)
}

pub fn summarize(cfg: &ExperimentConfig, updater: Updater, runs: &[RunResult]) -> SummaryRow {
    let reached: Vec<f64> = runs.iter().filter_map(|r| r.iters_to_threshold.map(|x| x as f64)).collect();
    let (mi, ii) = if reached.is_empty() {
        (None, None)
    } else {
        let (m, i) = median_iqr(reached.clone());
        (Some(m), Some(i))
    };
    let (me, ie) = median_iqr(runs.iter().map(|r| r.final_e_t).collect());
    let n = runs.len().max(1) as f64;
    SummaryRow {
        updater,
        seeds: runs.len(),
        reached: reached.len(),
        median_iters: mi,
        iqr_iters: ii,
        median_final_e_t: me,
        iqr_final_e_t: ie,
        success_rate: runs.iter().map(|r| r.eval.success_rate).sum::<f64>() / n,
        mean_reward: runs.iter().map(|r| r.eval.mean_reward).sum::<f64>() / n,
        sickness_rate: matches!(cfg.env, EnvConfig::Featureworld(_))
            .then(|| runs.iter().map(|r| r.eval.event_rate("Sick")).sum::<f64>() / n),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"))
}

fn table_cells(rows: &[SummaryRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let sick = rows.iter().any(|r| r.sickness_rate.is_some());
    let mut header = vec![
        "updater",
        "seeds",
        "reached",
        "median_iters",
        "iqr_iters",
        "median_final_e_t",
        "iqr_final_e_t",
        "success_rate",
        "mean_reward",
    ];
    if sick {
        header.push("sickness_rate");
    }
    let body = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.updater.name().to_string(),
                r.seeds.to_string(),
                r.reached.to_string(),
                opt(r.median_iters),
                opt(r.iqr_iters),
                format!("{:.6}", r.median_final_e_t),
                format!("{:.6}", r.iqr_final_e_t),
                format!("{:.3}", r.success_rate),
                format!("{:.3}", r.mean_reward),
            ];
            if sick {
                v.push(opt(r.sickness_rate));
            }
            v
        })
        .collect();
    (header, body)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let (header, body) = table_cells(rows);
    let mut out = header.join(",");
    out.push('\n');
    for r in body {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// The same table with space-aligned columns.
pub fn summary_text(rows: &[SummaryRow]) -> String {
    let (header, body) = table_cells(rows);
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.clone());
    out.push('\n');
    for r in &body {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Everything an experiment produced.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

fn run_updaters(cfg: &ExperimentConfig, updaters: &[Updater], opts: &RunOptions, file: &str) -> Result<ExperimentReport> {
    let root = experiment_dir(cfg, opts);
    create_dir(&root)?;
    let tagged = updaters.len() > 1;
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for &u in updaters {
        let mut mine = Vec::new();
        for seed in cfg.seed_list() {
            let dir = root.join(seed.to_string());
            let tag = tagged.then(|| u.name());
            mine.push(run_single(cfg, seed, u, &dir, tag, opts.dump_geometry)?);
        }
        summary.push(summarize(cfg, u, &mine));
        runs.extend(mine);
    }
    write(&root.join(format!("{file}.csv")), &summary_csv(&summary))?;
    write(&root.join(format!("{file}.txt")), &summary_text(&summary))?;
    Ok(ExperimentReport { dir: root, runs, summary })
}

/// Trains every configured seed with `trainer.updater`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    run_updaters(cfg, &[cfg.trainer.updater], opts, "summary")
}

/// Trains every seed under each listed updater and tabulates them side by
/// side.
pub fn compare_updaters(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    if cfg.updaters.len() < 2 {
        return Err(Error::Config(format!(
            "`updaters` must list at least two updaters to compare, got {}",
            cfg.updaters.len()
        )));
    }
    run_updaters(cfg, &cfg.updaters, opts, "comparison")
}

/// Result of evaluating a saved snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub summary: EpisodeSummary,
    /// Set when the snapshot was trained under a different configuration.
    pub hash_mismatch: bool,
}

/// The configuration saved next to a snapshot.
pub fn sibling_config(snapshot: &Path) -> PathBuf {
    let stem = snapshot.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    let suffix = stem.strip_prefix("snapshot").unwrap_or("");
    snapshot.with_file_name(format!("config{suffix}.json"))
}

/// Runs greedy episodes with a saved population.
pub fn evaluate_snapshot(snapshot: &Snapshot, cfg: &ExperimentConfig, episodes: usize, seed: u64) -> Result<EvalReport> {
    let env = cfg.env.build()?;
    let agent = snapshot.agent(&cfg.trainer.airis, env.move_actions())?;
    let summary = evaluate(&agent, &cfg.env, episodes, derive_seed(seed, EVAL_SALT))?;
    Ok(EvalReport {
        summary,
        hash_mismatch: snapshot.config_hash != cfg.hash(),
    })
}

pub fn eval_csv(s: &EpisodeSummary) -> String {
    let mut out = String::from("episodes,mean_reward,success_rate,mean_length\n");
    if s.episodes > 0 {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            s.episodes, s.mean_reward, s.success_rate, s.mean_length
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(es: &[f64]) -> Vec<MetricsRow> {
        es.iter()
            .enumerate()
            .map(|(i, &e_t)| MetricsRow {
                iter: i as u64 + 1,
                e_t,
                r_int: -e_t,
                r_ep: 0.0,
                r_env: 0.0,
                r_t: 0.0,
                n_rules: 2,
                updater: Updater::Natural,
            })
            .collect()
    }

    #[test]
    fn threshold_counts_from_the_last_crossing() {
        assert_eq!(iters_to_threshold(&rows(&[0.01, 0.2, 0.04, 0.03]), 0.05), Some(3));
        assert_eq!(iters_to_threshold(&rows(&[0.01, 0.02]), 0.05), Some(1));
        assert_eq!(iters_to_threshold(&rows(&[0.01, 0.2]), 0.05), None);
        assert_eq!(iters_to_threshold(&[], 0.05), None);
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.0), 1.0);
    }
}
