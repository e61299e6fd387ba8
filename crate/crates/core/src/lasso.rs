//! Ultimately periodic paths given as a finite prefix and a repeated cycle.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::rational::Rational;

/// One position of a path: the current state and the profile played there.
/// The successor is the state of the next step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Step {
    pub state: usize,
    pub profile: Profile,
}

impl Step {
    pub fn new(state: usize, profile: Profile) -> Self {
        Step { state, profile }
    }
}

/// `prefix · cycle^ω`. The last prefix step leads into `cycle[0]`, the last
/// cycle step wraps around to `cycle[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LassoPath {
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
}

impl LassoPath {
    pub fn new(prefix: Vec<Step>, cycle: Vec<Step>) -> Self {
        LassoPath { prefix, cycle }
    }

    pub fn start(&self) -> usize {
        self.prefix.first().unwrap_or(&self.cycle[0]).state
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    pub fn cycle_states(&self) -> BTreeSet<usize> {
        self.cycle.iter().map(|s| s.state).collect()
    }

    /// Checks that the path starts at the initial state and that every
    /// consecutive pair, including the junction and the wrap-around, follows
    /// the transition function under its witness profile.
    pub fn validate(&self, game: &Game) -> Result<()> {
        let arena = game.arena();
        if self.cycle.is_empty() {
            return Err(Error::InvalidPath("cycle must be nonempty".into()));
        }
        if self.start() != arena.initial() {
            return Err(Error::InvalidPath(format!(
                "path starts at `{}` instead of the initial state",
                arena.state_name(self.start())
            )));
        }
        let steps: Vec<&Step> = self.steps().collect();
        for (i, step) in steps.iter().enumerate() {
            if step.state >= arena.num_states() || !arena.is_profile(step.state, &step.profile) {
                return Err(Error::InvalidPath(format!("malformed step {i}")));
            }
            let next = if i + 1 < steps.len() {
                steps[i + 1].state
            } else {
                self.cycle[0].state
            };
            if arena.successor(step.state, &step.profile) != next {
                return Err(Error::InvalidPath(format!(
                    "step {i}: {} from `{}` does not lead to `{}`",
                    arena.describe_profile(step.state, &step.profile),
                    arena.state_name(step.state),
                    arena.state_name(next)
                )));
            }
        }
        Ok(())
    }

    /// Shifts the representation by one step: the first cycle step moves into
    /// the prefix and the cycle is rotated. Denotes the same infinite path.
    pub fn unroll_once(&self) -> LassoPath {
        let mut prefix = self.prefix.clone();
        prefix.push(self.cycle[0].clone());
        let mut cycle = self.cycle.clone();
        cycle.rotate_left(1);
        LassoPath { prefix, cycle }
    }
}

/// Mean payoff of `player` along `path`: the average weight over the cycle.
pub fn mean_payoff(path: &LassoPath, game: &Game, player: usize) -> Rational {
    let total: i64 = path.cycle.iter().map(|s| game.weight(player, s.state)).sum();
    Rational::new(total.into(), (path.cycle.len() as i64).into())
}

pub fn payoffs(path: &LassoPath, game: &Game) -> Vec<Rational> {
    (0..game.num_players()).map(|p| mean_payoff(path, game, p)).collect()
}
