use std::path::Path;

use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::airis::Airis;
use crate::error::{Error, Result};
use crate::learning::{Agent, TrainerState};
use crate::metagraph::{Origin, RewriteRule, RuleId, Term};

const FORMAT: u32 = 1;

/// A trained population on disk, as one s-expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub env: String,
    pub config_hash: String,
    pub iteration: u64,
    pub episode: u64,
    pub rng_digest: String,
    pub condition_labels: Vec<String>,
    pub rules: Vec<RewriteRule>,
    pub logits: Vec<f64>,
    /// The causal store, when the run learned one.
    pub causal: Option<Term>,
}

/// Hex SHA-256 over the generator's seed, stream and word position.
pub fn rng_digest(rng: &ChaCha8Rng) -> String {
    let mut h = Sha256::new();
    h.update(rng.get_seed());
    h.update(rng.get_stream().to_le_bytes());
    h.update(rng.get_word_pos().to_le_bytes());
    hex::encode(h.finalize())
}

fn section<'a>(root: &'a Term, name: &str) -> Result<&'a Term> {
    root.children()
        .iter()
        .find(|c| c.label() == name)
        .ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("snapshot has no `{name}` section"),
        })
}

fn atom<'a>(root: &'a Term, name: &str) -> Result<&'a str> {
    section(root, name)?
        .children()
        .first()
        .map(Term::label)
        .ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("snapshot section `{name}` is empty"),
        })
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        pos: 0,
        msg: format!("bad {what} `{s}`"),
    })
}

impl Snapshot {
    pub fn from_state(state: &TrainerState, env: &str, config_hash: &str, condition_labels: &[String]) -> Self {
        Snapshot {
            env: env.to_string(),
            config_hash: config_hash.to_string(),
            iteration: state.t,
            episode: state.episode,
            rng_digest: rng_digest(&state.rng),
            condition_labels: condition_labels.to_vec(),
            rules: state.rules.clone(),
            logits: state.params.logits.clone(),
            causal: state.airis.as_ref().map(Airis::to_term),
        }
    }

    pub fn to_sexpr(&self) -> String {
        let mut out = String::from("(snapshot\n");
        out.push_str(&format!("  (format {FORMAT})\n"));
        out.push_str(&format!("  (env {})\n", self.env));
        out.push_str(&format!("  (config-hash {})\n", self.config_hash));
        out.push_str(&format!("  (iteration {})\n", self.iteration));
        out.push_str(&format!("  (episode {})\n", self.episode));
        out.push_str(&format!("  (rng-digest {})\n", self.rng_digest));
        out.push_str("  (condition-labels");
        for l in &self.condition_labels {
            out.push(' ');
            out.push_str(l);
        }
        out.push_str(")\n  (rules");
        for (r, x) in self.rules.iter().zip(&self.logits) {
            out.push_str(&format!("\n    (rule {} {} {:?} {})", r.id.0, r.origin.as_str(), x, r.to_term()));
        }
        out.push_str(")\n");
        if let Some(c) = &self.causal {
            out.push_str(&format!("  {c}\n"));
        }
        out.push_str(")\n");
        out
    }

    pub fn from_sexpr(src: &str) -> Result<Self> {
        let root = Term::parse(src)?;
        if root.label() != "snapshot" {
            return Err(Error::Parse {
                pos: 0,
                msg: "not a snapshot".into(),
            });
        }
        let format: u32 = number(atom(&root, "format")?, "format")?;
        if format != FORMAT {
            return Err(Error::Parse {
                pos: 0,
                msg: format!("unsupported snapshot format {format}"),
            });
        }
        let mut rules = Vec::new();
        let mut logits = Vec::new();
        for r in section(&root, "rules")?.children() {
            let bad = || Error::MalformedRule(r.to_string());
            let [id, origin, logit, body] = r.children() else { return Err(bad()) };
            if r.label() != "rule" {
                return Err(bad());
            }
            let id: u64 = number(id.label(), "rule id")?;
            let origin = Origin::parse(origin.label())?;
            rules.push(RewriteRule::from_term(RuleId(id), origin, body)?);
            logits.push(number(logit.label(), "logit")?);
        }
        Ok(Snapshot {
            env: atom(&root, "env")?.to_string(),
            config_hash: atom(&root, "config-hash")?.to_string(),
            iteration: number(atom(&root, "iteration")?, "iteration")?,
            episode: number(atom(&root, "episode")?, "episode")?,
            rng_digest: atom(&root, "rng-digest")?.to_string(),
            condition_labels: section(&root, "condition-labels")?
                .children()
                .iter()
                .map(|t| t.label().to_string())
                .collect(),
            rules,
            logits,
            causal: root.children().iter().find(|c| c.label() == "causal-store").cloned(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_sexpr()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_sexpr(&src)
    }

    /// The greedy agent this snapshot describes. The causal store needs the
    /// learner settings and the environment's move actions to come back.
    pub fn agent(&self, airis: &crate::airis::AirisConfig, move_actions: &[&str]) -> Result<Agent> {
        let learner = match &self.causal {
            Some(t) => Some(Airis::from_term(airis.clone(), move_actions, t)?),
            None => None,
        };
        Ok(Agent::new(
            self.rules.clone(),
            &self.logits,
            self.condition_labels.clone(),
            learner,
        ))
    }
}
