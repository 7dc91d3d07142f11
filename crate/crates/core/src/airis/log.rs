use std::collections::VecDeque;

use crate::metagraph::Term;

/// Timestamped actions, ingestions and effect events, kept for a bounded
/// number of steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    retention: u64,
    actions: VecDeque<(u64, String, bool)>,
    ingestions: VecDeque<(u64, Vec<Term>)>,
    effects: VecDeque<(u64, Term)>,
    last_t: u64,
}

impl EventLog {
    pub fn new(retention: u64) -> Self {
        EventLog {
            retention: retention.max(1),
            ..Default::default()
        }
    }

    fn stamp(&mut self, t: u64) {
        debug_assert!(t >= self.last_t, "event log time went backwards");
        self.last_t = self.last_t.max(t);
    }

    pub fn record_action(&mut self, t: u64, action: &str, is_move: bool) {
        self.stamp(t);
        self.actions.push_back((t, action.to_string(), is_move));
    }

    pub fn record_ingestion(&mut self, t: u64, features: Vec<Term>) {
        self.stamp(t);
        self.ingestions.push_back((t, features));
    }

    pub fn record_effect(&mut self, t: u64, event: Term) {
        self.stamp(t);
        self.effects.push_back((t, event));
    }

    /// Drops records older than the retention horizon relative to `now`.
    pub fn prune(&mut self, now: u64) {
        let cutoff = now.saturating_sub(self.retention);
        while self.actions.front().is_some_and(|a| a.0 < cutoff) {
            self.actions.pop_front();
        }
        while self.ingestions.front().is_some_and(|a| a.0 < cutoff) {
            self.ingestions.pop_front();
        }
        while self.effects.front().is_some_and(|a| a.0 < cutoff) {
            self.effects.pop_front();
        }
    }

    /// Fraction of move actions among those taken in `(from, to]`.
    pub fn move_fraction(&self, from: u64, to: u64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let moves = self
            .actions
            .iter()
            .filter(|(t, _, m)| *t > from && *t <= to && *m)
            .count();
        moves as f64 / (to - from) as f64
    }

    /// Ingestions `(time, features)` with lag `1..=max_lag` before `now`.
    pub fn ingestions_within(&self, now: u64, max_lag: u64) -> impl Iterator<Item = (u64, &[Term])> {
        self.ingestions
            .iter()
            .filter(move |(t, _)| *t < now && now - *t <= max_lag)
            .map(|(t, f)| (*t, f.as_slice()))
    }

    pub fn effects_at(&self, t: u64) -> impl Iterator<Item = &Term> {
        self.effects.iter().filter(move |(x, _)| *x == t).map(|(_, e)| e)
    }

    pub fn actions(&self) -> impl Iterator<Item = (u64, &str, bool)> {
        self.actions.iter().map(|(t, a, m)| (*t, a.as_str(), *m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_retention() {
        let mut log = EventLog::new(5);
        log.record_ingestion(1, vec![Term::fact("Color", &["Red"])]);
        for t in 1..=6 {
            log.record_action(t, if t % 2 == 0 { "Forward" } else { "Wait" }, t % 2 == 0);
        }
        assert_eq!(log.move_fraction(1, 5), 0.5);
        assert_eq!(log.move_fraction(2, 4), 0.5);
        assert_eq!(log.ingestions_within(6, 5).count(), 1);
        assert_eq!(log.ingestions_within(7, 5).count(), 0);
        log.prune(10);
        assert_eq!(log.actions().count(), 2);
        assert_eq!(log.ingestions_within(6, 10).count(), 0);
    }
}
