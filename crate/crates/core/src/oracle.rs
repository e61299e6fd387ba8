//! Brute-force reference implementations for small instances. Nothing here
//! is used by the solver; these exist to cross-check it.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::gr1::{Gr1Formula, StateSet};
use crate::lasso::{mean_payoff, LassoPath, Step};
use crate::lp::{Constraint, PathMode};
use crate::mpg::{Owner, PrunedGame, TurnBasedMpg};
use crate::rational::Rational;
use crate::scheme::{apply_subsidy, SubsidyScheme};

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub max_prefix: usize,
    pub max_cycle: usize,
    pub max_states: usize,
    /// Bound on positional strategy pairs examined per solve.
    pub max_strategy_pairs: u64,
    /// Length bound for closed walks; `None` picks one from the game and
    /// formula size.
    pub max_walk: Option<usize>,
    pub max_schemes: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_prefix: 8,
            max_cycle: 8,
            max_states: 8,
            max_strategy_pairs: 5_000_000,
            max_walk: None,
            max_schemes: 100_000,
        }
    }
}

impl OracleConfig {
    /// Closed walks up to this length are searched.
    pub fn walk_length(&self, game: &Game, formula: &Gr1Formula) -> usize {
        self.max_walk.unwrap_or_else(|| {
            let sets = formula.antecedents.len() + formula.consequents.len();
            2 * game.num_states() * (sets + 2)
        })
    }
}

fn limit(what: &str, cap: impl std::fmt::Display) -> Error {
    Error::ResourceLimit(format!("oracle: {what} exceed the cap of {cap}"))
}

/// Every lasso from the initial state whose prefix and cycle are simple and
/// disjoint, with one lasso per choice of witness profiles.
pub fn enumerate_lassos(game: &Game, cfg: &OracleConfig) -> Result<Vec<LassoPath>> {
    if game.num_states() > cfg.max_states {
        return Err(limit("states", cfg.max_states));
    }
    let arena = game.arena();
    let mut out = Vec::new();
    let mut path: Vec<Step> = Vec::new();

    fn extend(game: &Game, cfg: &OracleConfig, state: usize, path: &mut Vec<Step>, out: &mut Vec<LassoPath>) {
        let arena = game.arena();
        for profile in arena.profiles(state) {
            let next = arena.successor(state, &profile);
            path.push(Step::new(state, profile));
            if let Some(j) = path.iter().position(|s| s.state == next) {
                if j <= cfg.max_prefix && path.len() - j <= cfg.max_cycle {
                    out.push(LassoPath::new(path[..j].to_vec(), path[j..].to_vec()));
                }
            } else if path.len() < cfg.max_prefix + cfg.max_cycle {
                extend(game, cfg, next, path, out);
            }
            path.pop();
        }
    }

    extend(game, cfg, arena.initial(), &mut path, &mut out);
    Ok(out)
}

/// Mean of the cycle eventually reached from `start` under a successor map.
fn forced_cycle_mean(next: &[usize], weight: &[i64], start: usize) -> Rational {
    let mut order = vec![usize::MAX; next.len()];
    let mut v = start;
    let mut k = 0;
    while order[v] == usize::MAX {
        order[v] = k;
        k += 1;
        v = next[v];
    }
    let mut sum = weight[v];
    let mut len = 1;
    let mut u = next[v];
    while u != v {
        sum += weight[u];
        len += 1;
        u = next[u];
    }
    Rational::new(sum.into(), (len as i64).into())
}

/// All positional choices: one index below `counts[k]` for every `k`.
fn product(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

fn count_product(counts: &[usize]) -> u64 {
    counts.iter().fold(1u64, |acc, &c| acc.saturating_mul(c as u64))
}

/// Values of a turn-based game by trying every pair of positional
/// strategies: `min` over Min strategies of `max` over Max strategies.
pub fn brute_force_mpg(g: &TurnBasedMpg, cfg: &OracleConfig) -> Result<Vec<Rational>> {
    let n = g.len();
    let nodes_of = |o: Owner| -> Vec<usize> { (0..n).filter(|&v| g.owner(v) == o).collect() };
    let max_nodes = nodes_of(Owner::Max);
    let min_nodes = nodes_of(Owner::Min);
    let max_counts: Vec<usize> = max_nodes.iter().map(|&v| g.successors(v).len()).collect();
    let min_counts: Vec<usize> = min_nodes.iter().map(|&v| g.successors(v).len()).collect();
    if count_product(&max_counts).saturating_mul(count_product(&min_counts)) > cfg.max_strategy_pairs {
        return Err(limit("positional strategy pairs", cfg.max_strategy_pairs));
    }
    let weight: Vec<i64> = (0..n).map(|v| g.weight(v)).collect();
    let max_strategies = product(&max_counts);
    let mut values: Vec<Option<Rational>> = vec![None; n];
    for sigma in product(&min_counts) {
        let mut best: Vec<Option<Rational>> = vec![None; n];
        for tau in &max_strategies {
            let mut next = vec![0; n];
            for (k, &v) in min_nodes.iter().enumerate() {
                next[v] = g.successors(v)[sigma[k]];
            }
            for (k, &v) in max_nodes.iter().enumerate() {
                next[v] = g.successors(v)[tau[k]];
            }
            for (v, b) in best.iter_mut().enumerate() {
                let mean = forced_cycle_mean(&next, &weight, v);
                if b.as_ref().is_none_or(|x| mean > *x) {
                    *b = Some(mean);
                }
            }
        }
        for (v, b) in best.into_iter().enumerate() {
            let b = b.expect("at least one strategy");
            if values[v].as_ref().is_none_or(|x| b < *x) {
                values[v] = Some(b);
            }
        }
    }
    Ok(values.into_iter().map(|v| v.expect("at least one strategy")).collect())
}

/// `pun_i(s)` straight from the concurrent game: the coalition fixes a
/// partial profile per state, the punished player an action per state.
pub fn brute_force_punishment(game: &Game, player: usize, cfg: &OracleConfig) -> Result<Vec<Rational>> {
    let arena = game.arena();
    let n = game.num_states();
    let others: Vec<usize> = (0..game.num_players()).filter(|&p| p != player).collect();
    let coalition_options: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|s| {
            let counts: Vec<usize> = others.iter().map(|&p| arena.num_actions(s, p)).collect();
            product(&counts)
        })
        .collect();
    let coalition_counts: Vec<usize> = coalition_options.iter().map(|o| o.len()).collect();
    let own_counts: Vec<usize> = (0..n).map(|s| arena.num_actions(s, player)).collect();
    if count_product(&coalition_counts).saturating_mul(count_product(&own_counts)) > cfg.max_strategy_pairs {
        return Err(limit("positional strategy pairs", cfg.max_strategy_pairs));
    }
    let weight = game.weights(player);
    let own_strategies = product(&own_counts);
    let mut values: Vec<Option<Rational>> = vec![None; n];
    for sigma in product(&coalition_counts) {
        let mut best: Vec<Option<Rational>> = vec![None; n];
        for tau in &own_strategies {
            let next: Vec<usize> = (0..n)
                .map(|s| {
                    let partial = &coalition_options[s][sigma[s]];
                    let mut profile: Profile = Vec::with_capacity(game.num_players());
                    let mut rest = partial.iter();
                    for p in 0..game.num_players() {
                        profile.push(if p == player {
                            tau[s]
                        } else {
                            *rest.next().expect("coalition action")
                        });
                    }
                    arena.successor(s, &profile)
                })
                .collect();
            for (s, b) in best.iter_mut().enumerate() {
                let mean = forced_cycle_mean(&next, weight, s);
                if b.as_ref().is_none_or(|x| mean > *x) {
                    *b = Some(mean);
                }
            }
        }
        for (s, b) in best.into_iter().enumerate() {
            let b = b.expect("at least one strategy");
            if values[s].as_ref().is_none_or(|x| b < *x) {
                values[s] = Some(b);
            }
        }
    }
    Ok(values.into_iter().map(|v| v.expect("at least one strategy")).collect())
}

/// Punishment values of every player, indexed `[player][state]`.
pub fn brute_force_table(game: &Game, cfg: &OracleConfig) -> Result<Vec<Vec<Rational>>> {
    (0..game.num_players())
        .map(|p| brute_force_punishment(game, p, cfg))
        .collect()
}

/// Every vector drawn from the distinct punishment values of each player.
fn threshold_grid(table: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut out = vec![Vec::new()];
    for row in table {
        let values: BTreeSet<Rational> = row.iter().cloned().collect();
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Rational>| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// No unilateral deviation from `profile` at `state` reaches a state whose
/// punishment value exceeds the deviator's threshold.
fn secure(game: &Game, table: &[Vec<Rational>], state: usize, profile: &[usize], z: &[Rational]) -> bool {
    let arena = game.arena();
    (0..game.num_players()).all(|i| {
        (0..arena.num_actions(state, i)).all(|a| {
            let mut deviation = profile.to_vec();
            deviation[i] = a;
            table[i][arena.successor(state, &deviation)] <= z[i]
        })
    })
}

/// Lassos produced by some Nash equilibrium: along the path, every
/// unilateral deviation reaches a state where the deviator can be held to
/// at most what the path pays them.
pub fn brute_force_ne_lassos(game: &Game, cfg: &OracleConfig) -> Result<Vec<LassoPath>> {
    let table = brute_force_table(game, cfg)?;
    let lassos = enumerate_lassos(game, cfg)?;
    Ok(lassos
        .into_iter()
        .filter(|path| {
            let pay: Vec<Rational> = (0..game.num_players()).map(|i| mean_payoff(path, game, i)).collect();
            path.steps()
                .all(|step| secure(game, &table, step.state, &step.profile, &pay))
        })
        .collect())
}

/// Cycle state sets of closed walks of length at most `max_len` that use
/// only `allowed` edges, start at a state reachable from the initial state,
/// and pay every player at least `z`.
pub fn achievable_cycle_sets(
    game: &Game,
    allowed: &dyn Fn(usize, usize) -> bool,
    z: &[Rational],
    max_len: usize,
) -> BTreeSet<StateSet> {
    let arena = game.arena();
    let n = game.num_states();
    let players = game.num_players();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut targets: Vec<usize> = (0..arena.num_profiles(s))
                .filter(|&pi| allowed(s, pi))
                .map(|pi| arena.successor_by_index(s, pi))
                .collect();
            targets.sort_unstable();
            targets.dedup();
            targets
        })
        .collect();

    let mut reachable = vec![false; n];
    let initial = arena.initial();
    reachable[initial] = true;
    let mut queue = VecDeque::from([initial]);
    while let Some(s) = queue.pop_front() {
        for &t in &succ[s] {
            if !reachable[t] {
                reachable[t] = true;
                queue.push_back(t);
            }
        }
    }

    let meets = |sums: &[i64], len: usize| {
        (0..players).all(|i| BigInt::from(sums[i]) * z[i].denom() >= BigInt::from(len as i64) * z[i].numer())
    };

    let mut found: BTreeSet<u64> = BTreeSet::new();
    // Walks are rotated to start at their smallest state.
    for start in (0..n).filter(|&s| reachable[s]) {
        let mut layer: HashMap<(usize, u64), Vec<Vec<i64>>> = HashMap::new();
        layer.insert((start, 0), vec![vec![0; players]]);
        for len in 1..=max_len {
            let mut next: HashMap<(usize, u64), Vec<Vec<i64>>> = HashMap::new();
            for ((u, mask), sums) in &layer {
                let mask = mask | (1u64 << u);
                for &w in &succ[*u] {
                    if w < start {
                        continue;
                    }
                    for s in sums {
                        let added: Vec<i64> = (0..players).map(|i| s[i] + game.weight(i, *u)).collect();
                        if w == start && meets(&added, len) {
                            found.insert(mask);
                        }
                        insert_pareto(next.entry((w, mask)).or_default(), added);
                    }
                }
            }
            layer = next;
        }
    }
    found
        .into_iter()
        .map(|mask| (0..n).filter(|&s| mask >> s & 1 == 1).collect())
        .collect()
}

fn insert_pareto(front: &mut Vec<Vec<i64>>, v: Vec<i64>) {
    if front.iter().any(|f| f.iter().zip(&v).all(|(a, b)| a >= b)) {
        return;
    }
    front.retain(|f| !f.iter().zip(&v).all(|(a, b)| a <= b));
    front.push(v);
}

/// Exhaustive search for a lasso inside `pg` meeting its thresholds and
/// `mode`.
pub fn brute_force_path_exists(pg: &PrunedGame<'_>, mode: &PathMode, max_len: usize) -> bool {
    if pg.is_empty() {
        return false;
    }
    let allowed = |s: usize, pi: usize| pg.retains(s, pi);
    achievable_cycle_sets(pg.game(), &allowed, pg.z(), max_len)
        .iter()
        .any(|cycle| mode.holds(cycle))
}

/// Cycle sets of equilibrium lassos of `game`, over every grid vector.
pub fn equilibrium_cycle_sets(game: &Game, max_len: usize, cfg: &OracleConfig) -> Result<BTreeSet<StateSet>> {
    let table = brute_force_table(game, cfg)?;
    let arena = game.arena();
    let mut out = BTreeSet::new();
    for z in threshold_grid(&table) {
        let allowed = |s: usize, pi: usize| secure(game, &table, s, &arena.decode_profile(s, pi), &z);
        out.extend(achievable_cycle_sets(game, &allowed, &z, max_len));
    }
    Ok(out)
}

/// Every scheme with cost at most `budget`, in no particular order.
fn all_schemes(game: &Game, budget: u64, cap: u64) -> Result<Vec<SubsidyScheme>> {
    fn fill(cells: usize, budget: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if prefix.len() == cells {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=budget {
            prefix.push(v);
            fill(cells, budget - v, prefix, out);
            prefix.pop();
        }
    }
    let mut cells = Vec::new();
    fill(game.num_cells(), budget, &mut Vec::new(), &mut cells);
    if cells.len() as u64 > cap {
        return Err(limit("subsidy schemes", cap));
    }
    Ok(cells
        .into_iter()
        .map(|c| SubsidyScheme::from_cells(game.num_states(), c))
        .collect())
}

pub fn brute_force_weak(game: &Game, formula: &Gr1Formula, budget: u64, cfg: &OracleConfig) -> Result<bool> {
    let max_len = cfg.walk_length(game, formula);
    for scheme in all_schemes(game, budget, cfg.max_schemes)? {
        let sub = apply_subsidy(game, &scheme);
        let cycles = equilibrium_cycle_sets(&sub, max_len, cfg)?;
        if cycles.iter().any(|c| formula.holds_on_cycle(&sub, c)) {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn brute_force_strong(game: &Game, formula: &Gr1Formula, budget: u64, cfg: &OracleConfig) -> Result<bool> {
    let max_len = cfg.walk_length(game, formula);
    for scheme in all_schemes(game, budget, cfg.max_schemes)? {
        let sub = apply_subsidy(game, &scheme);
        let cycles = equilibrium_cycle_sets(&sub, max_len, cfg)?;
        if !cycles.is_empty() && cycles.iter().all(|c| formula.holds_on_cycle(&sub, c)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Some equilibrium exists without subsidies.
pub fn brute_force_ne_exists(game: &Game, cfg: &OracleConfig) -> Result<bool> {
    brute_force_weak(game, &Gr1Formula::top(), 0, cfg)
}

/// Feasibility of `rows` over `x ≥ 0` by trying every vertex candidate: each
/// choice of `num_vars` constraints (rows or bounds) made tight.
pub fn brute_force_feasible(num_vars: usize, rows: &[&Constraint]) -> bool {
    let total = rows.len() + num_vars;
    let row_of = |k: usize| -> (Vec<Rational>, Rational) {
        if k < rows.len() {
            (
                rows[k]
                    .coeffs
                    .iter()
                    .map(|c| Rational::from_integer(c.clone()))
                    .collect(),
                Rational::from_integer(rows[k].rhs.clone()),
            )
        } else {
            let mut unit = vec![Rational::zero(); num_vars];
            unit[k - rows.len()] = Rational::one();
            (unit, Rational::zero())
        }
    };
    let satisfies = |x: &[Rational]| x.iter().all(|v| !v.is_negative()) && rows.iter().all(|r| r.is_satisfied(x));
    if num_vars == 0 {
        return satisfies(&[]);
    }
    let mut chosen: Vec<usize> = (0..num_vars).collect();
    if num_vars > total {
        return false;
    }
    loop {
        let (a, b): (Vec<Vec<Rational>>, Vec<Rational>) = chosen.iter().map(|&k| row_of(k)).unzip();
        if let Some(x) = solve_square(a, b) {
            if satisfies(&x) {
                return true;
            }
        }
        // next combination
        let mut i = num_vars;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if chosen[i] < total - num_vars + i {
                break;
            }
        }
        chosen[i] += 1;
        for j in i + 1..num_vars {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

/// Gaussian elimination; `None` when the matrix is singular.
fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = &a[r][col] / &a[col][col];
                for c in col..n {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
                let delta = &factor * &b[col];
                b[r] -= delta;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}
