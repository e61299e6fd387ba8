//! Two-player zero-sum mean-payoff games, punishment values and pruning.
//!
//! Punishment values are computed on a turn-based game in which the
//! coalition of all other players commits to a partial profile first and the
//! punished player answers. Values come from finite-horizon value iteration;
//! strategies extracted at geometric checkpoints are certified exactly by
//! solving the two induced one-player games, which allows stopping long
//! before the worst-case horizon.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::graph::{is_nontrivial, strongly_connected_components};
use crate::lasso::LassoPath;
use crate::rational::{from_i128, Rational};

/// Default cap on `n³ · W` for a single value iteration run.
pub const DEFAULT_MPG_WORK_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    /// Maximises the mean payoff.
    Max,
    /// Minimises the mean payoff.
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnBasedMpg {
    owner: Vec<Owner>,
    weight: Vec<i64>,
    succ: Vec<Vec<usize>>,
}

impl TurnBasedMpg {
    pub fn new(owner: Vec<Owner>, weight: Vec<i64>, succ: Vec<Vec<usize>>) -> Result<Self> {
        let n = owner.len();
        if weight.len() != n || succ.len() != n {
            return Err(Error::InvalidGame("node vectors differ in length".into()));
        }
        for (v, out) in succ.iter().enumerate() {
            if out.is_empty() {
                return Err(Error::InvalidGame(format!("node {v} has no successor")));
            }
            if out.iter().any(|&u| u >= n) {
                return Err(Error::InvalidGame(format!("node {v} has an undefined successor")));
            }
        }
        Ok(TurnBasedMpg { owner, weight, succ })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, v: usize) -> Owner {
        self.owner[v]
    }

    pub fn weight(&self, v: usize) -> i64 {
        self.weight[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    fn max_abs_weight(&self) -> i64 {
        self.weight.iter().map(|w| w.abs()).max().unwrap_or(0)
    }

    fn with_choice(&self, v: usize, choice: usize) -> TurnBasedMpg {
        let mut g = self.clone();
        g.succ[v] = vec![self.succ[v][choice]];
        g
    }
}

/// Exact values and positional optimal strategies for both sides.
/// `strategy[v]` indexes into the successors of `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpgSolution {
    pub values: Vec<Rational>,
    pub strategy: Vec<usize>,
}

impl MpgSolution {
    pub fn successor(&self, g: &TurnBasedMpg, v: usize) -> usize {
        g.succ[v][self.strategy[v]]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MpgConfig {
    pub work_cap: u64,
}

impl Default for MpgConfig {
    fn default() -> Self {
        MpgConfig {
            work_cap: DEFAULT_MPG_WORK_CAP,
        }
    }
}

/// Solves a turn-based mean-payoff game exactly.
///
/// Value iteration runs up to `k = 4·n³·W` steps, after which the value of
/// each node is the unique rational with denominator at most `n` within
/// `2nW/k` of `ν_k / k`.
pub fn solve_mpg(g: &TurnBasedMpg, cfg: &MpgConfig) -> Result<MpgSolution> {
    let n = g.len();
    let w = g.max_abs_weight();
    if w == 0 {
        return Ok(MpgSolution {
            values: vec![Rational::from_integer(0.into()); n],
            strategy: vec![0; n],
        });
    }
    let work = (n as u128).pow(3) * w as u128;
    if work > cfg.work_cap as u128 {
        return Err(Error::ResourceLimit(format!(
            "value iteration on {n} nodes with weight bound {w} exceeds the work cap {}",
            cfg.work_cap
        )));
    }
    let horizon = 4 * work as u64;

    let mut prev = vec![0i128; n];
    let mut cur = vec![0i128; n];
    let mut checkpoint = n as u64;
    for k in 1..=horizon {
        bellman_step(g, &prev, &mut cur);
        std::mem::swap(&mut prev, &mut cur);
        if k == checkpoint && k < horizon {
            let strategy = greedy_strategy(g, &prev);
            if let Some(values) = certify(g, &strategy) {
                return Ok(MpgSolution { values, strategy });
            }
            checkpoint *= 2;
        }
    }

    let values = round_values(&prev, horizon, n, w);
    let strategy = greedy_strategy(g, &prev);
    if let Some(certified) = certify(g, &strategy) {
        debug_assert_eq!(certified, values);
        return Ok(MpgSolution { values, strategy });
    }
    let strategy = recover_strategy(g, &values, cfg)?;
    Ok(MpgSolution { values, strategy })
}

fn bellman_step(g: &TurnBasedMpg, prev: &[i128], cur: &mut [i128]) {
    for v in 0..g.len() {
        let it = g.succ[v].iter().map(|&u| prev[u]);
        let best = match g.owner[v] {
            Owner::Max => it.max(),
            Owner::Min => it.min(),
        };
        cur[v] = g.weight[v] as i128 + best.expect("every node has a successor");
    }
}

fn greedy_strategy(g: &TurnBasedMpg, nu: &[i128]) -> Vec<usize> {
    (0..g.len())
        .map(|v| {
            let mut best = 0;
            for (i, &u) in g.succ[v].iter().enumerate() {
                let better = match g.owner[v] {
                    Owner::Max => nu[u] > nu[g.succ[v][best]],
                    Owner::Min => nu[u] < nu[g.succ[v][best]],
                };
                if better {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Unique rational `p/q` with `q ≤ n` and `|p/q − ν/k| ≤ 2nW/k`.
fn round_values(nu: &[i128], k: u64, n: usize, w: i64) -> Vec<Rational> {
    let k = k as i128;
    let slack = 2 * n as i128 * w as i128;
    nu.iter()
        .map(|&total| {
            (1..=n as i128)
                .find_map(|q| {
                    let p = (2 * total * q + k).div_euclid(2 * k);
                    ((p * k - total * q).abs() <= slack * q).then(|| from_i128(p, q))
                })
                .expect("value iteration bound guarantees a candidate")
        })
        .collect()
}

/// If fixing the strategy of each side yields the same one-player values,
/// both strategies are optimal and those values are the game values.
fn certify(g: &TurnBasedMpg, strategy: &[usize]) -> Option<Vec<Rational>> {
    let restrict = |side: Owner| -> Vec<Vec<usize>> {
        (0..g.len())
            .map(|v| {
                if g.owner[v] == side {
                    vec![g.succ[v][strategy[v]]]
                } else {
                    g.succ[v].clone()
                }
            })
            .collect()
    };
    let upper = one_player_values(&restrict(Owner::Min), &g.weight, true);
    let lower = one_player_values(&restrict(Owner::Max), &g.weight, false);
    (upper == lower).then_some(upper)
}

/// Fixes choices node by node while the game values stay unchanged; done
/// separately for each side starting from the full game.
fn recover_strategy(g: &TurnBasedMpg, values: &[Rational], cfg: &MpgConfig) -> Result<Vec<usize>> {
    let mut strategy = vec![0; g.len()];
    for side in [Owner::Max, Owner::Min] {
        let mut current = g.clone();
        for v in 0..g.len() {
            if g.owner[v] != side || g.succ[v].len() == 1 {
                continue;
            }
            let mut fixed = false;
            for choice in 0..g.succ[v].len() {
                let candidate = current.with_choice(v, choice);
                if solve_mpg(&candidate, cfg)?.values == values {
                    current = candidate;
                    strategy[v] = choice;
                    fixed = true;
                    break;
                }
            }
            assert!(fixed, "some positional choice preserves the game values");
        }
    }
    Ok(strategy)
}

/// Values of a one-player mean-payoff game on a graph with node weights:
/// the best cycle mean reachable from each node.
pub fn one_player_values(succ: &[Vec<usize>], weight: &[i64], maximize: bool) -> Vec<Rational> {
    let n = succ.len();
    let sign: i64 = if maximize { 1 } else { -1 };
    let signed: Vec<i64> = weight.iter().map(|w| sign * w).collect();
    let comps = strongly_connected_components(succ);
    let mut comp_of = vec![0; n];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    let mut best: Vec<Option<Rational>> = vec![None; comps.len()];
    for (ci, comp) in comps.iter().enumerate() {
        let mut b = is_nontrivial(comp, succ).then(|| max_cycle_mean(comp, succ, &signed, &comp_of));
        for &v in comp {
            for &u in &succ[v] {
                if comp_of[u] != ci {
                    if let Some(other) = &best[comp_of[u]] {
                        if b.as_ref().is_none_or(|x| other > x) {
                            b = Some(other.clone());
                        }
                    }
                }
            }
        }
        best[ci] = b;
    }
    (0..n)
        .map(|v| {
            let value = best[comp_of[v]].clone().expect("every node reaches a cycle");
            if maximize {
                value
            } else {
                -value
            }
        })
        .collect()
}

/// Karp's maximum cycle mean inside one strongly connected component.
fn max_cycle_mean(comp: &[usize], succ: &[Vec<usize>], weight: &[i64], comp_of: &[usize]) -> Rational {
    let m = comp.len();
    let ci = comp_of[comp[0]];
    let local = |v: usize| comp.binary_search(&v).expect("member of component");
    let mut table: Vec<Vec<Option<i128>>> = vec![vec![None; m]; m + 1];
    table[0][0] = Some(0);
    for k in 1..=m {
        for u in 0..m {
            let Some(du) = table[k - 1][u] else { continue };
            let v0 = comp[u];
            for &v in &succ[v0] {
                if comp_of[v] != ci {
                    continue;
                }
                let candidate = du + weight[v0] as i128;
                let slot = &mut table[k][local(v)];
                if slot.is_none_or(|x| candidate > x) {
                    *slot = Some(candidate);
                }
            }
        }
    }
    let mut result: Option<Rational> = None;
    for v in 0..m {
        let Some(dm) = table[m][v] else { continue };
        let worst = (0..m)
            .filter_map(|k| table[k][v].map(|dk| from_i128(dm - dk, (m - k) as i128)))
            .min()
            .expect("D_0 or an earlier layer reaches v");
        if result.as_ref().is_none_or(|r| worst > *r) {
            result = Some(worst);
        }
    }
    result.expect("a nontrivial component has a closed walk of length m")
}

/// Turn-based game punishing one player. Nodes `0..num_states` are state
/// nodes where the coalition commits to a partial profile; the remaining
/// nodes are `(state, coalition profile)` pairs where the punished player
/// answers. Both kinds carry the punished player's weight at the state.
#[derive(Debug, Clone)]
pub struct PunishmentGame {
    pub player: usize,
    pub mpg: TurnBasedMpg,
    /// `(state, coalition partial profile)` per response node, in node order
    /// after the state nodes.
    pub response_nodes: Vec<(usize, Vec<usize>)>,
}

/// Full profile from a coalition partial profile and `player`'s action.
pub fn merge_profile(coalition: &[usize], player: usize, action: usize) -> Profile {
    let mut profile = Vec::with_capacity(coalition.len() + 1);
    profile.extend_from_slice(&coalition[..player]);
    profile.push(action);
    profile.extend_from_slice(&coalition[player..]);
    profile
}

fn coalition_profiles(game: &Game, state: usize, player: usize) -> Vec<Vec<usize>> {
    let arena = game.arena();
    let others: Vec<usize> = (0..game.num_players()).filter(|&p| p != player).collect();
    let mut out = vec![Vec::new()];
    for &p in &others {
        let k = arena.num_actions(state, p);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    out
}

pub fn build_punishment_game(game: &Game, player: usize) -> PunishmentGame {
    let arena = game.arena();
    let states = game.num_states();
    let mut owner = vec![Owner::Min; states];
    let mut weight: Vec<i64> = game.weights(player).to_vec();
    let mut succ = vec![Vec::new(); states];
    let mut response_nodes = Vec::new();
    for s in 0..states {
        for coalition in coalition_profiles(game, s, player) {
            let node = states + response_nodes.len();
            succ[s].push(node);
            owner.push(Owner::Max);
            weight.push(game.weight(player, s));
            succ.push(
                (0..arena.num_actions(s, player))
                    .map(|a| arena.successor(s, &merge_profile(&coalition, player, a)))
                    .collect(),
            );
            response_nodes.push((s, coalition));
        }
    }
    PunishmentGame {
        player,
        mpg: TurnBasedMpg::new(owner, weight, succ).expect("punishment game is well formed"),
        response_nodes,
    }
}

/// Punishment values of one player and the coalition's memoryless strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerPunishment {
    pub values: Vec<Rational>,
    pub coalition: Vec<Vec<usize>>,
    pub num_nodes: usize,
}

pub fn player_punishment(game: &Game, player: usize, cfg: &MpgConfig) -> Result<PlayerPunishment> {
    let pg = build_punishment_game(game, player);
    let solution = solve_mpg(&pg.mpg, cfg)?;
    let states = game.num_states();
    let coalition = (0..states)
        .map(|s| {
            let node = solution.successor(&pg.mpg, s);
            pg.response_nodes[node - states].1.clone()
        })
        .collect();
    Ok(PlayerPunishment {
        values: solution.values[..states].to_vec(),
        coalition,
        num_nodes: pg.mpg.len(),
    })
}

/// `pun_i(s)` for every player and state, with coalition strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PunishmentTable {
    rows: Vec<PlayerPunishment>,
}

impl PunishmentTable {
    pub fn from_rows(rows: Vec<PlayerPunishment>) -> Self {
        PunishmentTable { rows }
    }

    pub fn num_players(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, player: usize, state: usize) -> &Rational {
        &self.rows[player].values[state]
    }

    pub fn values(&self, player: usize) -> &[Rational] {
        &self.rows[player].values
    }

    /// Partial profile (actions of all other players, in player order) the
    /// coalition plays at `state` to punish `player`.
    pub fn coalition_action(&self, player: usize, state: usize) -> &[usize] {
        &self.rows[player].coalition[state]
    }

    pub fn num_nodes(&self, player: usize) -> usize {
        self.rows[player].num_nodes
    }

    pub fn max_value(&self, player: usize) -> &Rational {
        self.rows[player].values.iter().max().expect("at least one state")
    }

    /// Distinct punishment values of `player`, ascending.
    pub fn grid_values(&self, player: usize) -> Vec<Rational> {
        let mut v = self.rows[player].values.clone();
        v.sort();
        v.dedup();
        v
    }

    /// Size of the grid `{pun_i(s) : s}^N`.
    pub fn grid_size(&self) -> u128 {
        (0..self.num_players())
            .map(|p| self.grid_values(p).len() as u128)
            .product()
    }

    /// Every `z` in the grid, lexicographic over players with ascending
    /// values.
    pub fn grid(&self) -> Vec<Vec<Rational>> {
        let axes: Vec<Vec<Rational>> = (0..self.num_players()).map(|p| self.grid_values(p)).collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Rational>| {
                    axis.iter().map(move |x| {
                        let mut next = prefix.clone();
                        next.push(x.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }
}

pub fn punishment_table(game: &Game, cfg: &MpgConfig) -> Result<PunishmentTable> {
    let rows = (0..game.num_players())
        .map(|p| player_punishment(game, p, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(PunishmentTable { rows })
}

/// Every unilateral deviation of `player` from `profile` at `state` lands in
/// a state whose punishment value is at most `bound`.
pub fn is_secure_for(
    game: &Game,
    table: &PunishmentTable,
    state: usize,
    profile: &[usize],
    player: usize,
    bound: &Rational,
) -> bool {
    let arena = game.arena();
    let mut deviation = profile.to_vec();
    (0..arena.num_actions(state, player)).all(|a| {
        deviation[player] = a;
        table.value(player, arena.successor(state, &deviation)) <= bound
    })
}

/// `(state, profile)` is `z_i`-secure for every player `i`.
pub fn is_z_secure(game: &Game, table: &PunishmentTable, state: usize, profile: &[usize], z: &[Rational]) -> bool {
    (0..game.num_players()).all(|p| is_secure_for(game, table, state, profile, p, &z[p]))
}

/// An edge of a pruned game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedEdge {
    pub src: usize,
    pub profile_index: usize,
    pub dst: usize,
}

/// `(G, κ)[z]`: the z-secure transitions, closed under removal of blocked
/// states and restricted to what is reachable from the initial state.
#[derive(Debug, Clone)]
pub struct PrunedGame<'a> {
    game: &'a Game,
    z: Vec<Rational>,
    states: Vec<bool>,
    transitions: Vec<Vec<bool>>,
}

impl<'a> PrunedGame<'a> {
    /// Every transition reachable from the initial state retained, with thresholds `z` for the flow programs.
    pub fn unrestricted(game: &'a Game, z: Vec<Rational>) -> Self {
        let arena = game.arena();
        let mut states = vec![true; game.num_states()];
        let mut transitions: Vec<Vec<bool>> = (0..game.num_states())
            .map(|s| vec![true; arena.num_profiles(s)])
            .collect();
        restrict_to_reachable(game, &mut states, &mut transitions);
        PrunedGame {
            game,
            z,
            states,
            transitions,
        }
    }

    pub fn game(&self) -> &'a Game {
        self.game
    }

    pub fn z(&self) -> &[Rational] {
        &self.z
    }

    /// No path survives: the initial state was removed.
    pub fn is_empty(&self) -> bool {
        !self.states[self.game.arena().initial()]
    }

    pub fn retains_state(&self, state: usize) -> bool {
        self.states[state]
    }

    pub fn retains(&self, state: usize, profile_index: usize) -> bool {
        self.transitions[state][profile_index]
    }

    pub fn retained_states(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&s| self.states[s]).collect()
    }

    /// Retained transitions in (state, profile) order.
    pub fn edges(&self) -> Vec<PrunedEdge> {
        let arena = self.game.arena();
        let mut out = Vec::new();
        for (s, row) in self.transitions.iter().enumerate() {
            for (pi, &kept) in row.iter().enumerate() {
                if kept {
                    out.push(PrunedEdge {
                        src: s,
                        profile_index: pi,
                        dst: arena.successor_by_index(s, pi),
                    });
                }
            }
        }
        out
    }

    /// Every step of the lasso uses a retained transition.
    pub fn contains(&self, path: &LassoPath) -> bool {
        let arena = self.game.arena();
        path.steps()
            .all(|step| self.transitions[step.state][arena.encode_profile(step.state, &step.profile)])
    }
}

/// Drops every state the retained transitions cannot reach from the
/// initial state.
fn restrict_to_reachable(game: &Game, states: &mut [bool], transitions: &mut [Vec<bool>]) {
    let arena = game.arena();
    let n = game.num_states();
    let mut reached = vec![false; n];
    let initial = arena.initial();
    if states[initial] {
        reached[initial] = true;
        let mut queue = VecDeque::from([initial]);
        while let Some(s) = queue.pop_front() {
            for (pi, &kept) in transitions[s].iter().enumerate() {
                let t = arena.successor_by_index(s, pi);
                if kept && !reached[t] {
                    reached[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    for s in 0..n {
        if !reached[s] {
            states[s] = false;
            transitions[s].iter_mut().for_each(|t| *t = false);
        }
    }
}

pub fn prune<'a>(game: &'a Game, table: &PunishmentTable, z: &[Rational]) -> PrunedGame<'a> {
    let arena = game.arena();
    let n = game.num_states();
    let mut transitions: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            arena
                .profiles(s)
                .map(|profile| is_z_secure(game, table, s, &profile, z))
                .collect()
        })
        .collect();
    let mut states = vec![true; n];

    loop {
        let mut changed = false;
        for s in 0..n {
            if !states[s] {
                continue;
            }
            for pi in 0..transitions[s].len() {
                if transitions[s][pi] && !states[arena.successor_by_index(s, pi)] {
                    transitions[s][pi] = false;
                }
            }
            if !transitions[s].iter().any(|&t| t) {
                states[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    restrict_to_reachable(game, &mut states, &mut transitions);
    PrunedGame {
        game,
        z: z.to_vec(),
        states,
        transitions,
    }
}
