use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::learning::{TrainerConfig, Updater};

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

fn one() -> usize {
    1
}

fn default_episodes() -> usize {
    100
}

fn default_threshold() -> f64 {
    0.05
}

/// One JSON document describing an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Number of seeds when `seeds` is absent, counting up from
    /// `trainer.seed`.
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Updaters for `compare`; `run` uses `trainer.updater`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updaters: Vec<Updater>,
    /// Greedy evaluation episodes after training.
    #[serde(default = "default_episodes")]
    pub eval_episodes: usize,
    /// Windowed error below which a run counts as converged.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending key on failure.
    pub fn from_json(src: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(src);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name `{}` is not a usable directory name", self.name)));
        }
        if self.repeat == 0 {
            return Err(Error::Config("repeat must be ≥ 1".into()));
        }
        if matches!(&self.seeds, Some(s) if s.is_empty()) {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!("threshold must be positive, got {}", self.threshold)));
        }
        self.env.build()?;
        self.trainer.validate()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.repeat as u64).map(|i| self.trainer.seed + i).collect(),
        }
    }

    /// Replaces the seeds with `repeat` seeds counting up from `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.trainer.seed = seed;
        self.seeds = None;
    }

    /// The configuration of a single run.
    pub fn for_run(&self, seed: u64, updater: Updater) -> ExperimentConfig {
        let mut c = self.clone();
        c.trainer.seed = seed;
        c.trainer.updater = updater;
        c.seeds = Some(vec![seed]);
        c.repeat = 1;
        c.updaters = Vec::new();
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}
