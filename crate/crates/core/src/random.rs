//! Seeded generators for small random instances.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::game::{ArenaBuilder, Game};
use crate::gr1::{BoolCombo, Gr1Formula};
use crate::lp::{Constraint, Family, Relation};
use crate::mpg::{Owner, TurnBasedMpg};

/// Size limits for [`random_game`].
#[derive(Debug, Clone)]
pub struct GameShape {
    pub max_states: usize,
    pub max_players: usize,
    pub max_actions: usize,
    pub min_weight: i64,
    pub max_weight: i64,
    pub propositions: Vec<String>,
}

impl Default for GameShape {
    fn default() -> Self {
        GameShape {
            max_states: 4,
            max_players: 2,
            max_actions: 2,
            min_weight: -2,
            max_weight: 2,
            propositions: vec!["p".into(), "q".into()],
        }
    }
}

pub fn random_game(rng: &mut impl Rng, shape: &GameShape) -> Game {
    let states = rng.gen_range(1..=shape.max_states);
    let players = rng.gen_range(1..=shape.max_players);
    let state_names: Vec<String> = (0..states).map(|s| format!("s{s}")).collect();
    let player_names: Vec<String> = (1..=players).map(|p| p.to_string()).collect();
    let counts: Vec<Vec<usize>> = (0..states)
        .map(|_| (0..players).map(|_| rng.gen_range(1..=shape.max_actions)).collect())
        .collect();
    let snames: Vec<&str> = state_names.iter().map(|s| s.as_str()).collect();
    let pnames: Vec<&str> = player_names.iter().map(|s| s.as_str()).collect();
    let props: Vec<&str> = shape.propositions.iter().map(|s| s.as_str()).collect();
    let mut builder = ArenaBuilder::new(&pnames, &snames, &counts).propositions(&props);
    for (s, row) in counts.iter().enumerate() {
        let mut profile = vec![0; players];
        loop {
            builder = builder.transition(s, &profile, rng.gen_range(0..states));
            // advance the mixed-radix counter
            let mut k = players;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                profile[k] += 1;
                if profile[k] < row[k] {
                    break;
                }
                profile[k] = 0;
            }
            if profile.iter().all(|&a| a == 0) {
                break;
            }
        }
        for prop in &shape.propositions {
            if rng.gen_bool(0.5) {
                builder = builder.label(s, prop);
            }
        }
    }
    let weights = (0..players)
        .map(|_| {
            (0..states)
                .map(|_| rng.gen_range(shape.min_weight..=shape.max_weight))
                .collect()
        })
        .collect();
    Game::new(Arc::new(builder.build()), weights).expect("generated game is well formed")
}

fn random_combo(rng: &mut impl Rng, props: &[String]) -> BoolCombo {
    let atom = |rng: &mut _| BoolCombo::Prop(props.choose(rng).expect("propositions").clone());
    match rng.gen_range(0..6) {
        0 | 1 => atom(rng),
        2 => BoolCombo::Not(Box::new(atom(rng))),
        3 => BoolCombo::And(Box::new(atom(rng)), Box::new(BoolCombo::Not(Box::new(atom(rng))))),
        4 => BoolCombo::Or(Box::new(atom(rng)), Box::new(atom(rng))),
        _ => BoolCombo::True,
    }
}

/// Up to one antecedent and two consequents over `props`.
pub fn random_formula(rng: &mut impl Rng, props: &[String]) -> Gr1Formula {
    let m = rng.gen_range(0..=1);
    let n = rng.gen_range(0..=2);
    Gr1Formula::new(
        (0..m).map(|_| random_combo(rng, props)).collect(),
        (0..n).map(|_| random_combo(rng, props)).collect(),
    )
}

/// A turn-based game with at most `max_nodes` nodes, out-degree at most 2.
pub fn random_mpg(rng: &mut impl Rng, max_nodes: usize, min_weight: i64, max_weight: i64) -> TurnBasedMpg {
    let n = rng.gen_range(1..=max_nodes);
    let owner = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Owner::Max } else { Owner::Min })
        .collect();
    let weight = (0..n).map(|_| rng.gen_range(min_weight..=max_weight)).collect();
    let succ = (0..n)
        .map(|_| {
            let mut targets: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n)).collect();
            targets.sort_unstable();
            targets.dedup();
            targets
        })
        .collect();
    TurnBasedMpg::new(owner, weight, succ).expect("generated game is well formed")
}

/// Random rows over `vars` nonnegative variables with small coefficients.
pub fn random_lp(rng: &mut impl Rng, vars: usize, rows: usize) -> Vec<Constraint> {
    (0..rows)
        .map(|_| {
            let coeffs = (0..vars).map(|_| BigInt::from(rng.gen_range(-2..=2))).collect();
            let relation = if rng.gen_bool(0.3) { Relation::Eq } else { Relation::Ge };
            Constraint::new(Family::Support, coeffs, relation, rng.gen_range(-2..=2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_games_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = random_game(&mut rng, &GameShape::default());
            let again = Game::parse(&g.to_json()).unwrap();
            assert_eq!(again.to_json(), g.to_json());
            let f = random_formula(&mut rng, &GameShape::default().propositions);
            assert_eq!(Gr1Formula::parse(&f.to_string()).unwrap(), f);
        }
    }
}
