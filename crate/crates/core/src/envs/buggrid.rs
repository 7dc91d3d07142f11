use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{free_cell, nearest, shuffled_cells, Cell, Heading, Pose};
use super::{Environment, StepInfo, StepResult};
use crate::error::{Error, Result};
use crate::metagraph::{Term, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BugGridConfig {
    pub size: u32,
    pub food: u32,
    pub poison: u32,
    /// Grabbed items reappear on a random free cell.
    pub respawn: bool,
    pub max_steps: u32,
}

impl Default for BugGridConfig {
    fn default() -> Self {
        BugGridConfig {
            size: 8,
            food: 8,
            poison: 4,
            respawn: true,
            max_steps: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Item {
    Food,
    Poison,
}

impl Item {
    fn name(self) -> &'static str {
        match self {
            Item::Food => "Food",
            Item::Poison => "Poison",
        }
    }
}

/// A bug with a grabber on a bounded grid of food and poison.
///
/// Observation: `(Pos x y) (Heading h) (Facing Food|Poison|Empty|Wall)
/// (Scent Ahead|Left|Right|Behind|None)`, the last giving the egocentric
/// direction of the nearest food. The bug can walk over items; Grab
/// consumes the item in the cell ahead for +1 (food) or −1 (poison).
#[derive(Clone, Debug)]
pub struct BugGrid {
    cfg: BugGridConfig,
    pose: Pose,
    items: BTreeMap<Cell, Item>,
    rng: ChaCha8Rng,
    steps: u32,
    done: bool,
    total: f64,
}

impl BugGrid {
    pub fn new(cfg: BugGridConfig) -> Result<Self> {
        if cfg.size < 2 || cfg.food + cfg.poison + 1 > cfg.size * cfg.size || cfg.max_steps == 0 {
            return Err(Error::Config("bug grid too small for its items".into()));
        }
        let size = cfg.size as i32;
        Ok(BugGrid {
            cfg,
            pose: Pose {
                size,
                pos: (0, 0),
                heading: Heading::North,
            },
            items: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            steps: 0,
            done: false,
            total: 0.0,
        })
    }

    pub fn item_count(&self) -> (usize, usize) {
        let food = self.items.values().filter(|i| **i == Item::Food).count();
        (food, self.items.len() - food)
    }

    fn facing(&self) -> &'static str {
        let c = self.pose.ahead();
        if !self.pose.in_bounds(c) {
            "Wall"
        } else {
            self.items.get(&c).map_or("Empty", |i| i.name())
        }
    }
}

impl Environment for BugGrid {
    fn actions(&self) -> &'static [&'static str] {
        &["Forward", "Backward", "TurnLeft", "TurnRight", "Grab"]
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
        let (f, p) = (self.cfg.food as usize, self.cfg.poison as usize);
        for &c in &cells[1..1 + f] {
            self.items.insert(c, Item::Food);
        }
        for &c in &cells[1 + f..1 + f + p] {
            self.items.insert(c, Item::Poison);
        }
        self.steps = 0;
        self.done = false;
        self.total = 0.0;
        self.observe()
    }

    fn observe(&self) -> WorldState {
        let (x, y) = self.pose.pos;
        let food: Vec<Cell> = self
            .items
            .iter()
            .filter(|(_, i)| **i == Item::Food)
            .map(|(c, _)| *c)
            .collect();
        let scent = nearest(self.pose.pos, &food).map_or("None", |c| self.pose.direction_to(c));
        WorldState::from_facts([
            Term::fact("Pos", &[&x.to_string(), &y.to_string()]),
            Term::fact("Heading", &[self.pose.heading.name()]),
            Term::fact("Facing", &[self.facing()]),
            Term::fact("Scent", &[scent]),
        ])
        .expect("ground")
    }

    fn step(&mut self, action: &str) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let mut reward = 0.0;
        let mut info = StepInfo::default();
        if !self.pose.locomote(action) {
            if action != "Grab" {
                return Err(Error::IllegalAction(action.to_string()));
            }
            let c = self.pose.ahead();
            if let Some(item) = self.items.remove(&c) {
                reward = if item == Item::Food { 1.0 } else { -1.0 };
                info.events.push(Term::fact("Event", &[item.name()]));
                if self.cfg.respawn {
                    if let Some(cell) = free_cell(self.pose.size, &self.items, self.pose.pos, &mut self.rng) {
                        self.items.insert(cell, item);
                    }
                }
            }
        }
        self.steps += 1;
        self.total += reward;
        self.done = self.steps >= self.cfg.max_steps;
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
