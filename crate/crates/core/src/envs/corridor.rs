use serde::{Deserialize, Serialize};

use super::{Environment, StepInfo, StepResult};
use crate::error::{Error, Result};
use crate::metagraph::{Term, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorConfig {
    /// Number of cells; the goal is the last one.
    pub cells: u32,
    pub max_steps: u32,
    /// When false, reaching the goal does not end the episode and Right at
    /// the goal stays put.
    pub terminal: bool,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        CorridorConfig {
            cells: 4,
            max_steps: 20,
            terminal: true,
        }
    }
}

/// One-dimensional corridor: start at 0, +1 on reaching the last cell.
#[derive(Clone, Debug)]
pub struct Corridor {
    cfg: CorridorConfig,
    state: u32,
    steps: u32,
    done: bool,
    reached: bool,
}

impl Corridor {
    pub fn new(cfg: CorridorConfig) -> Result<Self> {
        if cfg.cells < 2 || cfg.max_steps == 0 {
            return Err(Error::Config("corridor needs ≥2 cells and max_steps ≥ 1".into()));
        }
        Ok(Corridor {
            cfg,
            state: 0,
            steps: 0,
            done: false,
            reached: false,
        })
    }

    pub fn goal(&self) -> u32 {
        self.cfg.cells - 1
    }

    pub fn position(&self) -> u32 {
        self.state
    }

    /// Places the agent, for table-driven tests.
    pub fn set_position(&mut self, s: u32) {
        self.state = s.min(self.goal());
        self.done = false;
    }

    pub fn state_fact(s: u32) -> Term {
        Term::fact("State", &[&s.to_string()])
    }
}

impl Environment for Corridor {
    fn actions(&self) -> &'static [&'static str] {
        &["Right", "Left"]
    }

    fn move_actions(&self) -> &'static [&'static str] {
        &["Right", "Left"]
    }

    fn reset(&mut self, _seed: u64) -> WorldState {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        self.reached = false;
        self.observe()
    }

    fn observe(&self) -> WorldState {
        WorldState::from_facts([Corridor::state_fact(self.state)]).expect("ground")
    }

    fn step(&mut self, action: &str) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let before = self.state;
        match action {
            "Right" => self.state = (self.state + 1).min(self.goal()),
            "Left" => self.state = self.state.saturating_sub(1),
            other => return Err(Error::IllegalAction(other.to_string())),
        }
        self.steps += 1;
        let mut info = StepInfo::default();
        let mut reward = 0.0;
        if self.state == self.goal() && before != self.goal() {
            reward = 1.0;
            self.reached = true;
            info.events.push(Term::fact("Event", &["Goal"]));
        }
        self.done = (self.cfg.terminal && self.reached) || self.steps >= self.cfg.max_steps;
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
        self.reached
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_table() {
        let mut c = Corridor::new(CorridorConfig::default()).unwrap();
        assert_eq!(c.reset(0).to_string(), "(State 0)");
        let r = c.step("Left").unwrap();
        assert_eq!((r.obs.to_string().as_str(), r.reward, r.done), ("(State 0)", 0.0, false));
        c.set_position(2);
        let r = c.step("Right").unwrap();
        assert_eq!((r.obs.to_string().as_str(), r.reward, r.done), ("(State 3)", 1.0, true));
        assert_eq!(c.step("Right"), Err(Error::EpisodeDone));
    }

    #[test]
    fn episode_cap() {
        let mut c = Corridor::new(CorridorConfig::default()).unwrap();
        c.reset(0);
        for _ in 0..19 {
            assert!(!c.step("Left").unwrap().done);
        }
        assert!(c.step("Left").unwrap().done);
    }
}
