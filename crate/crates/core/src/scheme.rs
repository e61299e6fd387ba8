//! Subsidy schemes: cost, application, enumeration and counting.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::game::Game;

/// Default cap on the number of schemes a single enumeration may produce.
pub const DEFAULT_SCHEME_CAP: u64 = 10_000_000;

/// Natural-number subsidy per (player, state) cell.
///
/// Cells are laid out player-major: cell `player * num_states + state`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsidyScheme {
    num_states: usize,
    cells: Vec<u64>,
}

impl SubsidyScheme {
    pub fn zero(num_players: usize, num_states: usize) -> Self {
        SubsidyScheme {
            num_states,
            cells: vec![0; num_players * num_states],
        }
    }

    pub fn for_game(game: &Game) -> Self {
        Self::zero(game.num_players(), game.num_states())
    }

    pub fn from_cells(num_states: usize, cells: Vec<u64>) -> Self {
        assert!(num_states > 0 && cells.len().is_multiple_of(num_states));
        SubsidyScheme { num_states, cells }
    }

    pub fn get(&self, player: usize, state: usize) -> u64 {
        self.cells[player * self.num_states + state]
    }

    pub fn set(&mut self, player: usize, state: usize, value: u64) {
        self.cells[player * self.num_states + state] = value;
    }

    pub fn with(mut self, player: usize, state: usize, value: u64) -> Self {
        self.set(player, state, value);
        self
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    /// Subsidies of one player, indexed by state.
    pub fn player_row(&self, player: usize) -> &[u64] {
        &self.cells[player * self.num_states..(player + 1) * self.num_states]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Total of all subsidies.
    pub fn cost(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }
}

/// The game `(G, κ)`: weights raised pointwise by the subsidies.
pub fn apply_subsidy(game: &Game, scheme: &SubsidyScheme) -> Game {
    assert_eq!(scheme.cells.len(), game.num_cells());
    let weights = (0..game.num_players())
        .map(|p| {
            (0..game.num_states())
                .map(|s| {
                    let bonus = i64::try_from(scheme.get(p, s)).expect("subsidy fits in i64");
                    game.weight(p, s)
                        .checked_add(bonus)
                        .expect("subsidised weight overflow")
                })
                .collect()
        })
        .collect();
    Game::new(game.shared_arena(), weights).expect("shape preserved")
}

/// Number of schemes over `m` cells with cost at most `budget`:
/// `((β+1)/m) · C(β+m, β+1)`.
pub fn count_schemes(m: usize, budget: u64) -> BigUint {
    assert!(m >= 1, "a game has at least one (player, state) cell");
    let b = BigUint::from(budget);
    let numer = (&b + BigUint::one()) * binomial(budget + m as u64, budget + 1);
    let m = BigUint::from(m);
    debug_assert!((&numer % &m).is_zero());
    numer / m
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Streams every scheme with cost at most `budget` exactly once, in
/// non-decreasing cost order and, within one cost, lexicographically
/// descending over the cell order (earlier cells receive subsidy first).
pub fn enumerate_schemes(game: &Game, budget: u64, cap: u64) -> Result<SchemeIter> {
    let total = count_schemes(game.num_cells(), budget);
    if total > BigUint::from(cap) {
        return Err(Error::ResourceLimit(format!(
            "{total} subsidy schemes with budget {budget} exceed the cap of {cap}"
        )));
    }
    Ok(SchemeIter::new(game.num_states(), game.num_cells(), 0, budget))
}

/// Schemes of cost exactly `cost`, in the same order.
pub fn enumerate_schemes_of_cost(game: &Game, cost: u64, cap: u64) -> Result<SchemeIter> {
    let m = game.num_cells();
    let exact = binomial(cost + m as u64 - 1, cost);
    if exact > BigUint::from(cap) {
        return Err(Error::ResourceLimit(format!(
            "{exact} subsidy schemes of cost {cost} exceed the cap of {cap}"
        )));
    }
    Ok(SchemeIter::new(game.num_states(), m, cost, cost))
}

/// Iterator over weak compositions, grouped by increasing total.
#[derive(Debug, Clone)]
pub struct SchemeIter {
    num_states: usize,
    current: Option<Vec<u64>>,
    cost: u64,
    max_cost: u64,
}

impl SchemeIter {
    fn new(num_states: usize, cells: usize, min_cost: u64, max_cost: u64) -> Self {
        let current = (min_cost <= max_cost).then(|| first_composition(cells, min_cost));
        SchemeIter {
            num_states,
            current,
            cost: min_cost,
            max_cost,
        }
    }
}

fn first_composition(cells: usize, cost: u64) -> Vec<u64> {
    let mut v = vec![0; cells];
    v[0] = cost;
    v
}

/// Successor in descending lexicographic order among compositions with the
/// same total, or `None` after the last one.
fn next_composition(v: &mut [u64]) -> bool {
    let m = v.len();
    if m < 2 {
        return false;
    }
    let Some(k) = (0..m - 1).rev().find(|&i| v[i] > 0) else {
        return false;
    };
    let rest: u64 = v[k + 1..].iter().sum();
    v[k] -= 1;
    for x in v[k + 1..].iter_mut() {
        *x = 0;
    }
    v[k + 1] = rest + 1;
    true
}

impl Iterator for SchemeIter {
    type Item = SubsidyScheme;

    fn next(&mut self) -> Option<SubsidyScheme> {
        let current = self.current.as_mut()?;
        let out = SubsidyScheme::from_cells(self.num_states, current.clone());
        if !next_composition(current) {
            if self.cost < self.max_cost {
                self.cost += 1;
                *current = first_composition(current.len(), self.cost);
            } else {
                self.current = None;
            }
        }
        Some(out)
    }
}

/// `count_schemes` as a `u64`, saturating.
pub fn count_schemes_u64(m: usize, budget: u64) -> u64 {
    count_schemes(m, budget).to_u64().unwrap_or(u64::MAX)
}
