use std::sync::Arc;

use eqdesign_core::fixtures;
use eqdesign_core::mpg::{
    build_punishment_game, is_z_secure, merge_profile, one_player_values, prune, punishment_table, solve_mpg,
    MpgConfig, Owner, TurnBasedMpg,
};
use eqdesign_core::oracle::{brute_force_mpg, brute_force_punishment, enumerate_lassos, OracleConfig};
use eqdesign_core::random::{random_game, random_mpg, GameShape};
use eqdesign_core::rational::int;
use eqdesign_core::scheme::apply_subsidy;
use eqdesign_core::{ArenaBuilder, Game, Rational, SubsidyScheme};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg() -> MpgConfig {
    MpgConfig::default()
}

fn shifted(g: &TurnBasedMpg, c: i64) -> TurnBasedMpg {
    let n = g.len();
    TurnBasedMpg::new(
        (0..n).map(|v| g.owner(v)).collect(),
        (0..n).map(|v| g.weight(v) + c).collect(),
        (0..n).map(|v| g.successors(v).to_vec()).collect(),
    )
    .unwrap()
}

#[test]
fn small_examples() {
    let forced = TurnBasedMpg::new(vec![Owner::Max], vec![5], vec![vec![0]]).unwrap();
    assert_eq!(solve_mpg(&forced, &cfg()).unwrap().values, vec![int(5)]);
    // max node choosing between a weight-0 and a weight-1 self-loop
    let choice = TurnBasedMpg::new(
        vec![Owner::Max, Owner::Max, Owner::Max],
        vec![0, 0, 1],
        vec![vec![1, 2], vec![1], vec![2]],
    )
    .unwrap();
    assert_eq!(solve_mpg(&choice, &cfg()).unwrap().values[0], int(1));
}

#[test]
fn punishment_game_shapes() {
    let g = fixtures::two_by_two();
    let pg = build_punishment_game(&g, 0);
    assert_eq!(pg.mpg.len(), 2 + 4);
    let one = build_punishment_game(&fixtures::g1(), 0);
    assert!(one.response_nodes.iter().all(|(_, coalition)| coalition.is_empty()));
}

#[test]
fn g1_punishment_and_pruning() {
    let g = fixtures::g1();
    let table = punishment_table(&g, &cfg()).unwrap();
    assert_eq!(table.values(0), &[int(1), int(0), int(1)]);
    let oracle = brute_force_punishment(&g, 0, &OracleConfig::default()).unwrap();
    assert_eq!(table.values(0), oracle.as_slice());

    let pg = prune(&g, &table, &[int(1)]);
    assert!(!pg.is_empty());
    // every pair is secure at the maximum, nothing is cut
    assert_eq!(pg.edges().len(), 4);
    assert!(prune(&g, &table, &[int(0)]).is_empty());
}

#[test]
fn constant_weights() {
    let arena = ArenaBuilder::new(&["1", "2"], &["u", "v"], &[vec![2, 2], vec![2, 2]])
        .transition(0, &[1, 0], 1)
        .transition(1, &[0, 1], 0)
        .build();
    let g = Game::new(Arc::new(arena), vec![vec![3, 3], vec![-1, -1]]).unwrap();
    let table = punishment_table(&g, &cfg()).unwrap();
    assert_eq!(table.values(0), &[int(3), int(3)]);
    assert_eq!(table.values(1), &[int(-1), int(-1)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn solver_matches_positional_brute_force(seed in any::<u64>()) {
        let g = random_mpg(&mut rng(seed), 6, -2, 2);
        let exact = solve_mpg(&g, &cfg()).unwrap();
        let brute = brute_force_mpg(&g, &OracleConfig::default()).unwrap();
        prop_assert_eq!(&exact.values, &brute);
        for v in &exact.values {
            prop_assert!(*v.denom() <= num_bigint::BigInt::from(g.len()));
        }
    }

    #[test]
    fn values_shift_with_weights(seed in any::<u64>(), c in -3i64..=3) {
        let g = random_mpg(&mut rng(seed), 6, -2, 2);
        let base = solve_mpg(&g, &cfg()).unwrap().values;
        let moved = solve_mpg(&shifted(&g, c), &cfg()).unwrap().values;
        for (a, b) in base.iter().zip(&moved) {
            prop_assert_eq!(a + int(c), b.clone());
        }
    }

    #[test]
    fn coalition_strategy_caps_the_punished_player(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), &GameShape::default());
        let table = punishment_table(&g, &cfg()).unwrap();
        let arena = g.arena();
        for p in 0..g.num_players() {
            let succ: Vec<Vec<usize>> = (0..g.num_states())
                .map(|s| {
                    let coalition = table.coalition_action(p, s);
                    (0..arena.num_actions(s, p))
                        .map(|a| arena.successor(s, &merge_profile(coalition, p, a)))
                        .collect()
                })
                .collect();
            let best = one_player_values(&succ, g.weights(p), true);
            prop_assert_eq!(best.as_slice(), table.values(p));
            let brute = brute_force_punishment(&g, p, &OracleConfig::default()).unwrap();
            prop_assert_eq!(brute.as_slice(), table.values(p));
        }
    }

    #[test]
    fn subsidies_never_lower_punishment(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GameShape::default());
        let cells = (0..g.num_cells()).map(|_| r.gen_range(0..=2)).collect();
        let sub = apply_subsidy(&g, &SubsidyScheme::from_cells(g.num_states(), cells));
        let before = punishment_table(&g, &cfg()).unwrap();
        let after = punishment_table(&sub, &cfg()).unwrap();
        for p in 0..g.num_players() {
            let lo = int(*sub.weights(p).iter().min().unwrap());
            let hi = int(*sub.weights(p).iter().max().unwrap());
            for s in 0..g.num_states() {
                prop_assert!(after.value(p, s) >= before.value(p, s));
                prop_assert!(*after.value(p, s) >= lo && *after.value(p, s) <= hi);
            }
        }
    }

    #[test]
    fn security_and_pruning_are_monotone(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), &GameShape::default());
        let table = punishment_table(&g, &cfg()).unwrap();
        let grid = table.grid();
        let arena = g.arena();
        for z in &grid {
            for z2 in &grid {
                if !z.iter().zip(z2).all(|(a, b)| a <= b) {
                    continue;
                }
                for s in 0..g.num_states() {
                    for profile in arena.profiles(s) {
                        if is_z_secure(&g, &table, s, &profile, z) {
                            prop_assert!(is_z_secure(&g, &table, s, &profile, z2));
                        }
                    }
                }
                let small = prune(&g, &table, z);
                let large = prune(&g, &table, z2);
                for e in small.edges() {
                    prop_assert!(large.retains(e.src, e.profile_index));
                }
            }
        }
        // at the top of the grid every pair is secure
        let top: Vec<Rational> = (0..g.num_players()).map(|p| table.max_value(p).clone()).collect();
        let full = prune(&g, &table, &top);
        for s in 0..g.num_states() {
            for profile in arena.profiles(s) {
                prop_assert!(is_z_secure(&g, &table, s, &profile, &top));
            }
        }
        for path in enumerate_lassos(&g, &OracleConfig::default()).unwrap() {
            prop_assert!(full.contains(&path));
        }
    }

    #[test]
    fn lassos_inside_pruned_games_are_secure(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), &GameShape::default());
        let table = punishment_table(&g, &cfg()).unwrap();
        let lassos = enumerate_lassos(&g, &OracleConfig::default()).unwrap();
        for z in table.grid() {
            let pg = prune(&g, &table, &z);
            for path in lassos.iter().filter(|l| pg.contains(l)) {
                for step in path.steps() {
                    prop_assert!(is_z_secure(&g, &table, step.state, &step.profile, &z));
                }
            }
        }
    }
}

#[test]
fn work_cap_is_enforced() {
    let g = TurnBasedMpg::new(vec![Owner::Max, Owner::Min], vec![1000, -1000], vec![vec![1], vec![0]]).unwrap();
    let err = solve_mpg(&g, &MpgConfig { work_cap: 10 }).unwrap_err();
    assert!(err.is_resource_limit());
}
