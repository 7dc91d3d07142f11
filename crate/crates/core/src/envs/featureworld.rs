use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{free_cell, nearest, shuffled_cells, Cell, Heading, Pose};
use super::{Environment, StepInfo, StepResult};
use crate::error::{Error, Result};
use crate::metagraph::{Term, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Food,
    Poison,
    /// Harmless or harmful depending on what the eater does afterwards.
    Conditional,
    Neutral,
}

/// A feature conjunction and the class it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemClass {
    pub color: String,
    pub shape: String,
    pub texture: String,
    pub kind: ItemKind,
}

impl ItemClass {
    fn new(color: &str, shape: &str, texture: &str, kind: ItemKind) -> Self {
        ItemClass {
            color: color.into(),
            shape: shape.into(),
            texture: texture.into(),
            kind,
        }
    }

    /// `(Color c) (Shape s) (Texture t)`
    pub fn features(&self) -> Vec<Term> {
        vec![
            Term::fact("Color", &[&self.color]),
            Term::fact("Shape", &[&self.shape]),
            Term::fact("Texture", &[&self.texture]),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureWorldConfig {
    pub size: u32,
    pub items: u32,
    /// Steps from eating a conditional item to its effect.
    pub delay: u32,
    /// Move fraction below which a conditional item makes the bug sick.
    pub activity_level: f64,
    pub max_steps: u32,
    /// Spawnable items; each spawn picks one uniformly.
    pub classes: Vec<ItemClass>,
}

impl Default for FeatureWorldConfig {
    fn default() -> Self {
        FeatureWorldConfig {
            size: 8,
            items: 12,
            delay: 10,
            activity_level: 0.5,
            max_steps: 500,
            classes: vec![
                ItemClass::new("Red", "Round", "Smooth", ItemKind::Food),
                ItemClass::new("Green", "Square", "Rough", ItemKind::Poison),
                ItemClass::new("Red", "Round", "Rough", ItemKind::Conditional),
                ItemClass::new("Green", "Round", "Smooth", ItemKind::Neutral),
            ],
        }
    }
}

/// Grid of feature-bearing items that can be grabbed and eaten.
///
/// Observation: `(Pos x y) (Heading h) (Facing Item|Empty|Wall)
/// (Scent ..)` for the nearest item, `(Hand Empty|Full)`, and while holding,
/// the held item's `(Color c) (Shape s) (Texture t)`. Eating food gives +1,
/// poison −1. A conditional item gives nothing at once; exactly `delay`
/// steps later it gives −1 (`(Event Sick)`) if fewer than
/// `activity_level` of the actions since eating were Forward or Backward,
/// +1 (`(Event Benefit)`) otherwise.
#[derive(Clone, Debug)]
pub struct FeatureWorld {
    cfg: FeatureWorldConfig,
    pose: Pose,
    items: BTreeMap<Cell, usize>,
    held: Option<usize>,
    /// (time eaten, class) of conditional items awaiting their effect.
    pending: Vec<(u32, usize)>,
    /// Recent actions as move / not-move, newest last.
    moves: VecDeque<bool>,
    rng: ChaCha8Rng,
    steps: u32,
    done: bool,
    total: f64,
}

impl FeatureWorld {
    pub fn new(cfg: FeatureWorldConfig) -> Result<Self> {
        if cfg.classes.is_empty() || cfg.delay == 0 || !(0.0..=1.0).contains(&cfg.activity_level) {
            return Err(Error::Config(
                "feature world needs classes, delay ≥ 1 and activity_level in [0,1]".into(),
            ));
        }
        if cfg.size < 2 || cfg.items + 1 > cfg.size * cfg.size || cfg.max_steps == 0 {
            return Err(Error::Config("feature world too small for its items".into()));
        }
        let size = cfg.size as i32;
        Ok(FeatureWorld {
            cfg,
            pose: Pose {
                size,
                pos: (0, 0),
                heading: Heading::North,
            },
            items: BTreeMap::new(),
            held: None,
            pending: Vec::new(),
            moves: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            steps: 0,
            done: false,
            total: 0.0,
        })
    }

    pub fn config(&self) -> &FeatureWorldConfig {
        &self.cfg
    }

    pub fn item_count(&self) -> usize {
        self.items.len() + usize::from(self.held.is_some())
    }

    fn spawn(&mut self) {
        let class = self.rng.gen_range(0..self.cfg.classes.len());
        if let Some(c) = free_cell(self.pose.size, &self.items, self.pose.pos, &mut self.rng) {
            self.items.insert(c, class);
        }
    }

    /// Places a given item in front of the bug, for scripted tests.
    pub fn place_ahead(&mut self, class: usize) -> bool {
        let c = self.pose.ahead();
        if !self.pose.in_bounds(c) {
            self.pose.heading = self.pose.heading.left().left();
        }
        let c = self.pose.ahead();
        self.items.insert(c, class).is_none()
    }
}

impl Environment for FeatureWorld {
    fn actions(&self) -> &'static [&'static str] {
        &["Forward", "Backward", "TurnLeft", "TurnRight", "Grab", "Eat", "Wait"]
    }

    fn move_actions(&self) -> &'static [&'static str] {
        &["Forward", "Backward"]
    }

    fn reset(&mut self, seed: u64) -> WorldState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = shuffled_cells(self.pose.size, &mut self.rng);
        self.pose.pos = cells[0];
        self.pose.heading = Heading::random(&mut self.rng);
        self.items.clear();
        for &c in &cells[1..1 + self.cfg.items as usize] {
            let class = self.rng.gen_range(0..self.cfg.classes.len());
            self.items.insert(c, class);
        }
        self.held = None;
        self.pending.clear();
        self.moves.clear();
        self.steps = 0;
        self.done = false;
        self.total = 0.0;
        self.observe()
    }

    fn observe(&self) -> WorldState {
        let (x, y) = self.pose.pos;
        let ahead = self.pose.ahead();
        let facing = if !self.pose.in_bounds(ahead) {
            "Wall"
        } else if self.items.contains_key(&ahead) {
            "Item"
        } else {
            "Empty"
        };
        let scent = nearest(self.pose.pos, self.items.keys()).map_or("None", |c| self.pose.direction_to(c));
        let mut facts = vec![
            Term::fact("Pos", &[&x.to_string(), &y.to_string()]),
            Term::fact("Heading", &[self.pose.heading.name()]),
            Term::fact("Facing", &[facing]),
            Term::fact("Scent", &[scent]),
            Term::fact("Hand", &[if self.held.is_some() { "Full" } else { "Empty" }]),
        ];
        if let Some(h) = self.held {
            facts.extend(self.cfg.classes[h].features());
        }
        WorldState::from_facts(facts).expect("ground")
    }

    fn step(&mut self, action: &str) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        self.steps += 1;
        let t = self.steps;
        let mut reward = 0.0;
        let mut info = StepInfo::default();
        if !self.pose.locomote(action) {
            match action {
                "Grab" => {
                    let c = self.pose.ahead();
                    let picked = self.items.remove(&c);
                    if picked.is_some() || self.held.is_some() {
                        // whatever was held is discarded and replaced elsewhere
                        if self.held.take().is_some() {
                            self.spawn();
                        }
                        self.held = picked;
                    }
                }
                "Eat" => {
                    if let Some(h) = self.held.take() {
                        let class = &self.cfg.classes[h];
                        info.ingested = Some(class.features());
                        match class.kind {
                            ItemKind::Food => {
                                reward = 1.0;
                                info.events.push(Term::fact("Event", &["Nourished"]));
                            }
                            ItemKind::Poison => {
                                reward = -1.0;
                                info.events.push(Term::fact("Event", &["Poisoned"]));
                            }
                            ItemKind::Conditional => self.pending.push((t, h)),
                            ItemKind::Neutral => {}
                        }
                        self.spawn();
                    }
                }
                "Wait" => {}
                other => return Err(Error::IllegalAction(other.to_string())),
            }
        }
        self.moves.push_back(self.move_actions().contains(&action));
        let n = self.cfg.delay;
        while self.moves.len() > n as usize {
            self.moves.pop_front();
        }
        let mut still_pending = Vec::new();
        for (t0, h) in std::mem::take(&mut self.pending) {
            if t - t0 == n {
                let frac = self.moves.iter().filter(|m| **m).count() as f64 / n as f64;
                if frac < self.cfg.activity_level {
                    reward -= 1.0;
                    info.events.push(Term::fact("Event", &["Sick"]));
                } else {
                    reward += 1.0;
                    info.events.push(Term::fact("Event", &["Benefit"]));
                }
            } else {
                still_pending.push((t0, h));
            }
        }
        self.pending = still_pending;
        self.total += reward;
        self.done = t >= self.cfg.max_steps;
        Ok(StepResult {
            obs: self.observe(),
            reward,
            done: self.done,
            info,
        })
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn solved(&self) -> bool {
        self.total > 0.0
    }
}
