//! Hand-built games shared by tests, examples and the CLI self-test.

use std::sync::Arc;

use crate::game::{ArenaBuilder, Game};

/// One player. From the transient initial state `s0` the player moves to
/// `a` (labelled `p`, weight 0) or `b` (weight 1); both loop forever.
pub fn g1() -> Game {
    let arena = ArenaBuilder::new(&["1"], &["s0", "a", "b"], &[vec![2], vec![1], vec![1]])
        .action_names(0, 0, &["go_a", "go_b"])
        .action_names(1, 0, &["stay"])
        .action_names(2, 0, &["stay"])
        .label(1, "p")
        .transition(0, &[0], 1)
        .transition(0, &[1], 2)
        .build();
    Game::new(Arc::new(arena), vec![vec![0, 0, 1]]).expect("fixture is well formed")
}

/// Like [`g1`] but with two interchangeable `p`-states `a` and `c`.
pub fn symmetric() -> Game {
    let arena = ArenaBuilder::new(&["1"], &["s0", "a", "b", "c"], &[vec![3], vec![1], vec![1], vec![1]])
        .action_names(0, 0, &["go_a", "go_b", "go_c"])
        .label(1, "p")
        .label(3, "p")
        .transition(0, &[0], 1)
        .transition(0, &[1], 2)
        .transition(0, &[2], 3)
        .build();
    Game::new(Arc::new(arena), vec![vec![0, 0, 1, 0]]).expect("fixture is well formed")
}

/// Two players with two actions each on two states; matching actions keep
/// the state, differing actions swap it.
pub fn two_by_two() -> Game {
    let mut builder = ArenaBuilder::new(&["1", "2"], &["u", "v"], &[vec![2, 2], vec![2, 2]]);
    for s in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let target = if a == b { s } else { 1 - s };
                builder = builder.transition(s, &[a, b], target);
            }
        }
    }
    let arena = builder.label(0, "p").build();
    Game::new(Arc::new(arena), vec![vec![1, 0], vec![0, 1]]).expect("fixture is well formed")
}
