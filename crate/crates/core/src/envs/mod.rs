//! Benchmark environments behind one reset/step interface.

mod buggrid;
mod corridor;
mod featureworld;
pub mod grid;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use buggrid::{BugGrid, BugGridConfig};
pub use corridor::{Corridor, CorridorConfig};
pub use featureworld::{FeatureWorld, FeatureWorldConfig, ItemClass, ItemKind};

use crate::error::Result;
use crate::metagraph::{Term, WorldState};

/// Side information about a step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    /// `(Event name)` facts that happened during the step.
    pub events: Vec<Term>,
    /// Features of an item eaten during the step.
    pub ingested: Option<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: WorldState,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub trait Environment {
    fn actions(&self) -> &'static [&'static str];
    /// Actions that count as moving for activity bookkeeping.
    fn move_actions(&self) -> &'static [&'static str];
    fn reset(&mut self, seed: u64) -> WorldState;
    fn observe(&self) -> WorldState;
    fn step(&mut self, action: &str) -> Result<StepResult>;
    fn is_done(&self) -> bool;
    /// Whether the current episode counts as a success so far.
    fn solved(&self) -> bool;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EnvConfig {
    Corridor(CorridorConfig),
    Buggrid(BugGridConfig),
    Featureworld(FeatureWorldConfig),
}

impl EnvConfig {
    pub fn build(&self) -> Result<Env> {
        Ok(match self {
            EnvConfig::Corridor(c) => Env::Corridor(Corridor::new(c.clone())?),
            EnvConfig::Buggrid(c) => Env::Buggrid(BugGrid::new(c.clone())?),
            EnvConfig::Featureworld(c) => Env::Featureworld(FeatureWorld::new(c.clone())?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Corridor(_) => "corridor",
            EnvConfig::Buggrid(_) => "buggrid",
            EnvConfig::Featureworld(_) => "featureworld",
        }
    }
}

/// Any of the built-in environments.
#[derive(Clone, Debug)]
pub enum Env {
    Corridor(Corridor),
    Buggrid(BugGrid),
    Featureworld(FeatureWorld),
}

macro_rules! delegate {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            Env::Corridor($e) => $body,
            Env::Buggrid($e) => $body,
            Env::Featureworld($e) => $body,
        }
    };
}

impl Environment for Env {
    fn actions(&self) -> &'static [&'static str] {
        delegate!(self, e => e.actions())
    }
    fn move_actions(&self) -> &'static [&'static str] {
        delegate!(self, e => e.move_actions())
    }
    fn reset(&mut self, seed: u64) -> WorldState {
        delegate!(self, e => e.reset(seed))
    }
    fn observe(&self) -> WorldState {
        delegate!(self, e => e.observe())
    }
    fn step(&mut self, action: &str) -> Result<StepResult> {
        delegate!(self, e => e.step(action))
    }
    fn is_done(&self) -> bool {
        delegate!(self, e => e.is_done())
    }
    fn solved(&self) -> bool {
        delegate!(self, e => e.solved())
    }
}

/// Seed for episode `episode` of a run seeded with `seed`.
pub fn episode_seed(seed: u64, episode: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ episode.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Outcome of one episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub reward: f64,
    pub length: u32,
    pub solved: bool,
    /// Occurrences of each `(Event name)`, keyed by name.
    pub events: BTreeMap<String, u32>,
}

/// Runs one episode to completion with `policy` choosing actions.
pub fn run_episode<E, P>(env: &mut E, seed: u64, mut policy: P) -> Result<EpisodeStats>
where
    E: Environment + ?Sized,
    P: FnMut(&WorldState, &StepInfo) -> Result<String>,
{
    let mut obs = env.reset(seed);
    let mut info = StepInfo::default();
    let mut stats = EpisodeStats::default();
    while !env.is_done() {
        let action = policy(&obs, &info)?;
        let r = env.step(&action)?;
        stats.reward += r.reward;
        stats.length += 1;
        for e in &r.info.events {
            if let Some(name) = e.children().first() {
                *stats.events.entry(name.label().to_string()).or_insert(0) += 1;
            }
        }
        obs = r.obs;
        info = r.info;
    }
    stats.solved = env.solved();
    Ok(stats)
}

/// Averages over episodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub success_rate: f64,
    pub mean_length: f64,
    /// Mean occurrences per episode of each event.
    pub event_rates: BTreeMap<String, f64>,
}

impl EpisodeSummary {
    pub fn from_episodes(eps: &[EpisodeStats]) -> Self {
        let n = eps.len();
        if n == 0 {
            return EpisodeSummary::default();
        }
        let nf = n as f64;
        let mut event_rates = BTreeMap::new();
        for e in eps {
            for (k, v) in &e.events {
                *event_rates.entry(k.clone()).or_insert(0.0) += *v as f64 / nf;
            }
        }
        EpisodeSummary {
            episodes: n,
            mean_reward: eps.iter().map(|e| e.reward).sum::<f64>() / nf,
            success_rate: eps.iter().filter(|e| e.solved).count() as f64 / nf,
            mean_length: eps.iter().map(|e| e.length as f64).sum::<f64>() / nf,
            event_rates,
        }
    }

    pub fn event_rate(&self, name: &str) -> f64 {
        self.event_rates.get(name).copied().unwrap_or(0.0)
    }
}

/// Uniform-random actions for `episodes` episodes.
pub fn random_policy_baseline(cfg: &EnvConfig, episodes: usize, seed: u64) -> Result<EpisodeSummary> {
    let mut env = cfg.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = env.actions();
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let s = run_episode(&mut env, episode_seed(seed, ep as u64), |_, _| {
            Ok(actions.choose(&mut rng).expect("actions").to_string())
        })?;
        out.push(s);
    }
    Ok(EpisodeSummary::from_episodes(&out))
}
