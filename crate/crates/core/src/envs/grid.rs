//! Pose and sensing shared by the two grid worlds.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

pub type Cell = (i32, i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Heading {
    North,
    West,
    South,
    East,
}

impl Heading {
    const ALL: [Heading; 4] = [Heading::North, Heading::West, Heading::South, Heading::East];

    fn index(self) -> usize {
        self as usize
    }

    pub fn delta(self) -> Cell {
        match self {
            Heading::North => (0, 1),
            Heading::West => (-1, 0),
            Heading::South => (0, -1),
            Heading::East => (1, 0),
        }
    }

    pub fn left(self) -> Heading {
        Heading::ALL[(self.index() + 1) % 4]
    }

    pub fn right(self) -> Heading {
        Heading::ALL[(self.index() + 3) % 4]
    }

    pub fn name(self) -> &'static str {
        match self {
            Heading::North => "N",
            Heading::West => "W",
            Heading::South => "S",
            Heading::East => "E",
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Heading {
        Heading::ALL[rng.gen_range(0..4)]
    }
}

/// Position and heading on a bounded square grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub size: i32,
    pub pos: Cell,
    pub heading: Heading,
}

impl Pose {
    pub fn in_bounds(&self, c: Cell) -> bool {
        (0..self.size).contains(&c.0) && (0..self.size).contains(&c.1)
    }

    pub fn ahead(&self) -> Cell {
        let d = self.heading.delta();
        (self.pos.0 + d.0, self.pos.1 + d.1)
    }

    pub fn behind(&self) -> Cell {
        let d = self.heading.delta();
        (self.pos.0 - d.0, self.pos.1 - d.1)
    }

    /// Applies a locomotion action; returns false if the action is not one.
    /// Moves into walls are no-ops.
    pub fn locomote(&mut self, action: &str) -> bool {
        match action {
            "Forward" => {
                let c = self.ahead();
                if self.in_bounds(c) {
                    self.pos = c;
                }
            }
            "Backward" => {
                let c = self.behind();
                if self.in_bounds(c) {
                    self.pos = c;
                }
            }
            "TurnLeft" => self.heading = self.heading.left(),
            "TurnRight" => self.heading = self.heading.right(),
            _ => return false,
        }
        true
    }

    /// Egocentric direction of `target`: whichever of ahead, left, right,
    /// behind has the largest projection, ties in that order.
    pub fn direction_to(&self, target: Cell) -> &'static str {
        let (dx, dy) = (target.0 - self.pos.0, target.1 - self.pos.1);
        let dirs = [
            ("Ahead", self.heading),
            ("Left", self.heading.left()),
            ("Right", self.heading.right()),
            ("Behind", self.heading.left().left()),
        ];
        let mut best = ("Ahead", i32::MIN);
        for (name, h) in dirs {
            let d = h.delta();
            let v = d.0 * dx + d.1 * dy;
            if v > best.1 {
                best = (name, v);
            }
        }
        best.0
    }
}

/// Nearest cell (Manhattan, then coordinate order) among `cells`.
pub fn nearest<'a, I: IntoIterator<Item = &'a Cell>>(from: Cell, cells: I) -> Option<Cell> {
    cells
        .into_iter()
        .min_by_key(|c| ((c.0 - from.0).abs() + (c.1 - from.1).abs(), **c))
        .copied()
}

/// A uniformly chosen free cell, if any.
pub fn free_cell<T, R: Rng + ?Sized>(
    size: i32,
    occupied: &BTreeMap<Cell, T>,
    avoid: Cell,
    rng: &mut R,
) -> Option<Cell> {
    let free: Vec<Cell> = (0..size)
        .flat_map(|x| (0..size).map(move |y| (x, y)))
        .filter(|c| *c != avoid && !occupied.contains_key(c))
        .collect();
    free.choose(rng).copied()
}

/// Shuffled cells of the grid.
pub fn shuffled_cells<R: Rng + ?Sized>(size: i32, rng: &mut R) -> Vec<Cell> {
    let mut cells: Vec<Cell> = (0..size).flat_map(|x| (0..size).map(move |y| (x, y))).collect();
    cells.shuffle(rng);
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_and_direction() {
        let p = Pose {
            size: 5,
            pos: (2, 2),
            heading: Heading::North,
        };
        assert_eq!(p.heading.left(), Heading::West);
        assert_eq!(p.heading.right(), Heading::East);
        assert_eq!(p.direction_to((2, 4)), "Ahead");
        assert_eq!(p.direction_to((0, 2)), "Left");
        assert_eq!(p.direction_to((4, 3)), "Right");
        assert_eq!(p.direction_to((2, 0)), "Behind");
    }

    #[test]
    fn walls_block() {
        let mut p = Pose {
            size: 3,
            pos: (0, 0),
            heading: Heading::South,
        };
        p.locomote("Forward");
        assert_eq!(p.pos, (0, 0));
        p.locomote("Backward");
        assert_eq!(p.pos, (0, 1));
    }
}
