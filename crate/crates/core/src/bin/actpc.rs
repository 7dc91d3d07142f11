use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actpc_chem::harness::{
    compare_updaters, eval_csv, evaluate_snapshot, run_experiment, sibling_config, summary_text, ExperimentConfig,
    RunOptions, Snapshot,
};
use actpc_chem::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "actpc", about = "Train and evaluate rewrite-rule populations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Base seed; overrides the config and ACTPC_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the final Laplacian, metric tensor and spectra per run.
    #[arg(long, global = true)]
    dump_geometry: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train every configured seed.
    Run { config: PathBuf },
    /// Greedy episodes with a saved snapshot.
    Eval {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Defaults to the config saved next to the snapshot.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train every seed under each listed updater and compare.
    Compare { config: PathBuf },
}

fn seed_override(flag: Option<u64>) -> Result<Option<u64>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ACTPC_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("ACTPC_SEED must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    let seed = seed_override(cli.seed)?;
    let opts = RunOptions {
        out: cli.out.clone(),
        dump_geometry: cli.dump_geometry,
    };
    match cli.cmd {
        Cmd::Run { config } => {
            let report = run_experiment(&load(&config, seed)?, &opts)?;
            print!("{}", summary_text(&report.summary));
            println!("wrote {}", report.dir.display());
        }
        Cmd::Compare { config } => {
            let report = compare_updaters(&load(&config, seed)?, &opts)?;
            print!("{}", summary_text(&report.summary));
            println!("wrote {}", report.dir.display());
        }
        Cmd::Eval {
            snapshot,
            episodes,
            config,
        } => {
            let snap = Snapshot::load(&snapshot)?;
            let cfg_path = config.unwrap_or_else(|| sibling_config(&snapshot));
            let cfg = ExperimentConfig::load(&cfg_path)?;
            let report = evaluate_snapshot(&snap, &cfg, episodes, seed.unwrap_or(cfg.trainer.seed))?;
            if report.hash_mismatch {
                eprintln!(
                    "warning: snapshot was trained under a different configuration than {}",
                    cfg_path.display()
                );
            }
            print!("{}", eval_csv(&report.summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
