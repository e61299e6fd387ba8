//! Equilibrium design for multi-player mean-payoff concurrent games with
//! GR(1) objectives: subsidy schemes, punishment values, cycle-flow linear
//! programs and brute-force reference implementations.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fixtures;
pub mod game;
pub mod gr1;
pub mod graph;
pub mod lasso;
pub mod lp;
pub mod mpg;
pub mod oracle;
pub mod random;
pub mod rational;
pub mod scheme;
pub mod selftest;
pub mod solver;

pub use error::{Error, Result};
pub use game::{Arena, ArenaBuilder, Game, Profile};
pub use gr1::{BoolCombo, Gr1Formula, StateSet};
pub use lasso::{LassoPath, Step};
pub use rational::Rational;
pub use scheme::SubsidyScheme;
