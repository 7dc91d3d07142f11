use serde::{Deserialize, Serialize};

use crate::airis::AirisConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Updater {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "natural")]
    Natural,
    #[serde(rename = "natural+airis")]
    NaturalAiris,
}

impl Updater {
    pub fn name(self) -> &'static str {
        match self {
            Updater::Naive => "naive",
            Updater::Natural => "natural",
            Updater::NaturalAiris => "natural+airis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Updater::Naive),
            "natural" => Ok(Updater::Natural),
            "natural+airis" => Ok(Updater::NaturalAiris),
            other => Err(Error::Config(format!("unknown updater `{other}`"))),
        }
    }

    pub fn uses_airis(self) -> bool {
        self == Updater::NaturalAiris
    }
}

/// How the natural updater takes its step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Forward Euler along the natural gradient.
    Euler,
    /// Proximal step under the transport metric. Costs a finite-difference
    /// Hessian per step, so suits small populations only.
    Jko,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbstractionConfig {
    /// Run the miner every this many updates.
    pub every: usize,
    pub features: Vec<String>,
    pub support: usize,
    pub lift: f64,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        AbstractionConfig {
            every: 50,
            features: vec!["Color".into(), "Shape".into(), "Texture".into()],
            support: 8,
            lift: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub updater: Updater,
    pub iterations: usize,
    /// Step size.
    pub h: f64,
    /// Natural-gradient ridge; `None` scales with the metric's trace.
    pub ridge: Option<f64>,
    /// Rule graph neighbours.
    pub k: usize,
    /// Rule graph length scale; `None` uses the median rule distance.
    pub sigma: Option<f64>,
    pub smoothing: f64,
    /// History window length W.
    pub window: usize,
    pub alpha_int: f64,
    pub alpha_ep: f64,
    /// Fraction of training after which α_ep has decayed to zero.
    pub ep_decay: f64,
    /// Edits sampled per rule by local search.
    pub budget: usize,
    /// Edits trialed per update by the natural updater.
    pub explore_edits: usize,
    pub prune_floor: f64,
    pub prune_patience: usize,
    pub seed: u64,
    /// Discount for crediting environment reward to earlier steps.
    pub gamma: f64,
    /// Records count `max(min_weight, base_weight + reward_scale·advantage)`
    /// times, the advantage being the discounted return less the mean return
    /// of records with the same observation.
    pub base_weight: f64,
    pub reward_scale: f64,
    pub min_weight: f64,
    pub update_every: usize,
    /// Largest logit change per natural step.
    pub trust: f64,
    /// Step-size halvings before a step is given up.
    pub backtrack: usize,
    pub max_rules: usize,
    /// Observation labels policy rules may condition on; empty allows all.
    pub condition_labels: Vec<String>,
    /// Seed population as `lhs => rhs` strings; empty starts from one
    /// unconditional rule per action.
    pub initial_rules: Vec<String>,
    pub scheme: Scheme,
    /// Uniform mixing weight in the predicted event distribution.
    pub model_epsilon: f64,
    pub abstraction: Option<AbstractionConfig>,
    pub airis: AirisConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            updater: Updater::Natural,
            iterations: 500,
            h: 1.0,
            ridge: None,
            k: 4,
            sigma: None,
            smoothing: 0.5,
            window: 64,
            alpha_int: 1.0,
            alpha_ep: 0.1,
            ep_decay: 0.8,
            budget: 2,
            explore_edits: 2,
            prune_floor: 1e-3,
            prune_patience: 20,
            seed: 0,
            gamma: 0.9,
            base_weight: 0.0,
            reward_scale: 50.0,
            min_weight: 0.05,
            update_every: 1,
            trust: 2.0,
            backtrack: 12,
            max_rules: 64,
            condition_labels: Vec::new(),
            initial_rules: Vec::new(),
            scheme: Scheme::Euler,
            model_epsilon: 1e-3,
            abstraction: None,
            airis: AirisConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("trust", self.trust),
            ("gamma", self.gamma),
            ("min_weight", self.min_weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("trainer.{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("smoothing", self.smoothing),
            ("alpha_int", self.alpha_int),
            ("alpha_ep", self.alpha_ep),
            ("prune_floor", self.prune_floor),
            ("reward_scale", self.reward_scale),
            ("model_epsilon", self.model_epsilon),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("trainer.{name} must be ≥ 0, got {v}")));
            }
        }
        if self.alpha_int == 0.0 && self.alpha_ep == 0.0 {
            return Err(Error::Config("trainer.alpha_int and alpha_ep cannot both be 0".into()));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0) {
                return Err(Error::Config(format!("trainer.ridge must be ≥ 0, got {r}")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::Config(format!("trainer.sigma must be positive, got {s}")));
            }
        }
        if self.window == 0 || self.update_every == 0 || self.k == 0 || self.max_rules < 2 {
            return Err(Error::Config(
                "trainer.window, update_every and k must be ≥ 1 and max_rules ≥ 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.ep_decay) || self.model_epsilon >= 1.0 {
            return Err(Error::Config("trainer.ep_decay must lie in [0,1] and model_epsilon below 1".into()));
        }
        Ok(())
    }
}
