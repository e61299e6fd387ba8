//! Arenas, mean-payoff games and their JSON document format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Action profile: one action index per player, indexing `Arena::actions`.
pub type Profile = Vec<usize>;

/// The dynamic structure of a concurrent game.
///
/// Players, states and actions are addressed by their position in
/// declaration order. For every state the transition table is dense over the
/// mixed-radix encoding of action profiles, with player 0 the most
/// significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arena {
    players: Vec<String>,
    states: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    alphabet: BTreeSet<String>,
    declared_alphabet: Option<Vec<String>>,
    initial: usize,
    actions: Vec<Vec<Vec<String>>>,
    transitions: Vec<Vec<usize>>,
}

impl Arena {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn player_name(&self, player: usize) -> &str {
        &self.players[player]
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.states[state]
    }

    pub fn player_index(&self, name: &str) -> Option<usize> {
        self.players.iter().position(|p| p == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn labels(&self, state: usize) -> &BTreeSet<String> {
        &self.labels[state]
    }

    /// Atomic propositions formulas may refer to.
    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn actions(&self, state: usize, player: usize) -> &[String] {
        &self.actions[state][player]
    }

    pub fn num_actions(&self, state: usize, player: usize) -> usize {
        self.actions[state][player].len()
    }

    pub fn num_profiles(&self, state: usize) -> usize {
        self.transitions[state].len()
    }

    pub fn encode_profile(&self, state: usize, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.num_players());
        profile
            .iter()
            .enumerate()
            .fold(0, |acc, (player, &a)| acc * self.num_actions(state, player) + a)
    }

    pub fn decode_profile(&self, state: usize, mut index: usize) -> Profile {
        let mut profile = vec![0; self.num_players()];
        for player in (0..self.num_players()).rev() {
            let k = self.num_actions(state, player);
            profile[player] = index % k;
            index /= k;
        }
        profile
    }

    /// All action profiles at `state`, in encoding order.
    pub fn profiles(&self, state: usize) -> impl Iterator<Item = Profile> + '_ {
        (0..self.num_profiles(state)).map(move |i| self.decode_profile(state, i))
    }

    pub fn successor(&self, state: usize, profile: &[usize]) -> usize {
        self.transitions[state][self.encode_profile(state, profile)]
    }

    pub fn successor_by_index(&self, state: usize, profile_index: usize) -> usize {
        self.transitions[state][profile_index]
    }

    /// Whether `profile` is a well-formed action profile at `state`.
    pub fn is_profile(&self, state: usize, profile: &[usize]) -> bool {
        profile.len() == self.num_players()
            && profile
                .iter()
                .enumerate()
                .all(|(player, &a)| a < self.num_actions(state, player))
    }

    pub fn describe_profile(&self, state: usize, profile: &[usize]) -> String {
        let parts: Vec<String> = profile
            .iter()
            .enumerate()
            .map(|(player, &a)| format!("{}={}", self.players[player], self.actions[state][player][a]))
            .collect();
        format!("({})", parts.join(", "))
    }
}

/// A multi-player mean-payoff game: an arena plus integer state weights per
/// player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    arena: Arc<Arena>,
    weights: Vec<Vec<i64>>,
}

impl Game {
    pub fn new(arena: Arc<Arena>, weights: Vec<Vec<i64>>) -> Result<Self> {
        if weights.len() != arena.num_players() || weights.iter().any(|w| w.len() != arena.num_states()) {
            return Err(Error::InvalidGame(
                "weights must be defined for every (player, state) pair".into(),
            ));
        }
        Ok(Game { arena, weights })
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn shared_arena(&self) -> Arc<Arena> {
        Arc::clone(&self.arena)
    }

    pub fn weight(&self, player: usize, state: usize) -> i64 {
        self.weights[player][state]
    }

    pub fn weights(&self, player: usize) -> &[i64] {
        &self.weights[player]
    }

    pub fn num_players(&self) -> usize {
        self.arena.num_players()
    }

    pub fn num_states(&self) -> usize {
        self.arena.num_states()
    }

    /// Number of (player, state) cells a subsidy scheme ranges over.
    pub fn num_cells(&self) -> usize {
        self.num_players() * self.num_states()
    }

    pub fn max_abs_weight(&self) -> i64 {
        self.weights.iter().flatten().map(|w| w.abs()).max().unwrap_or(0)
    }

    /// Parses and validates a game document.
    pub fn parse(text: &str) -> Result<Game> {
        let doc: GameDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Game::from_document(&doc)
    }

    /// Canonical serialization: keys sorted, lists in declaration order.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_document(None)).expect("game documents always serialize");
        text.push('\n');
        text
    }

    pub fn to_document(&self, spec: Option<String>) -> GameDocument {
        let arena = &self.arena;
        let states = (0..arena.num_states())
            .map(|s| StateDocument {
                id: arena.states[s].clone(),
                label: arena.labels[s].iter().cloned().collect(),
                weights: (0..arena.num_players())
                    .map(|p| (arena.players[p].clone(), self.weights[p][s]))
                    .collect(),
            })
            .collect();
        let actions = (0..arena.num_states())
            .map(|s| {
                let per_player = (0..arena.num_players())
                    .map(|p| (arena.players[p].clone(), arena.actions[s][p].clone()))
                    .collect();
                (arena.states[s].clone(), per_player)
            })
            .collect();
        let mut transitions = Vec::new();
        for s in 0..arena.num_states() {
            for (index, profile) in arena.profiles(s).enumerate() {
                transitions.push(TransitionDocument {
                    from: arena.states[s].clone(),
                    profile: profile
                        .iter()
                        .enumerate()
                        .map(|(p, &a)| (arena.players[p].clone(), arena.actions[s][p][a].clone()))
                        .collect(),
                    to: arena.states[arena.transitions[s][index]].clone(),
                });
            }
        }
        GameDocument {
            actions,
            initial: arena.states[arena.initial].clone(),
            players: arena.players.clone(),
            propositions: arena.declared_alphabet.clone(),
            spec,
            states,
            transitions,
        }
    }

    pub fn from_document(doc: &GameDocument) -> Result<Game> {
        let invalid = |msg: String| Err(Error::InvalidGame(msg));

        if doc.players.is_empty() {
            return invalid("at least one player is required".into());
        }
        if doc.states.is_empty() {
            return invalid("at least one state is required".into());
        }
        let players = index_names(&doc.players, "player")?;
        let state_names: Vec<String> = doc.states.iter().map(|s| s.id.clone()).collect();
        let states = index_names(&state_names, "state")?;

        let initial = match states.get(doc.initial.as_str()) {
            Some(&s) => s,
            None => return invalid(format!("initial state `{}` is not declared", doc.initial)),
        };

        let declared_alphabet = doc.propositions.clone();
        let mut alphabet: BTreeSet<String> = BTreeSet::new();
        if let Some(props) = &declared_alphabet {
            alphabet.extend(props.iter().cloned());
        }
        let mut labels = Vec::with_capacity(doc.states.len());
        let mut weights = vec![vec![0i64; doc.states.len()]; doc.players.len()];
        for (s, state) in doc.states.iter().enumerate() {
            let set: BTreeSet<String> = state.label.iter().cloned().collect();
            if declared_alphabet.is_some() {
                if let Some(p) = set.iter().find(|p| !alphabet.contains(*p)) {
                    return invalid(format!(
                        "label `{p}` of state `{}` is not a declared proposition",
                        state.id
                    ));
                }
            } else {
                alphabet.extend(set.iter().cloned());
            }
            labels.push(set);
            for (player, w) in &state.weights {
                match players.get(player.as_str()) {
                    Some(&p) => weights[p][s] = *w,
                    None => {
                        return invalid(format!(
                            "state `{}` has a weight for undeclared player `{player}`",
                            state.id
                        ))
                    }
                }
            }
            for player in &doc.players {
                if !state.weights.contains_key(player) {
                    return invalid(format!("state `{}` has no weight for player `{player}`", state.id));
                }
            }
        }

        let mut actions = vec![vec![Vec::new(); doc.players.len()]; doc.states.len()];
        for (state, per_player) in &doc.actions {
            let s = match states.get(state.as_str()) {
                Some(&s) => s,
                None => return invalid(format!("actions declared for undefined state `{state}`")),
            };
            for (player, acts) in per_player {
                let p = match players.get(player.as_str()) {
                    Some(&p) => p,
                    None => {
                        return invalid(format!(
                            "actions declared for undeclared player `{player}` at state `{state}`"
                        ))
                    }
                };
                index_names(acts, "action")?;
                actions[s][p] = acts.clone();
            }
        }
        for s in 0..doc.states.len() {
            for p in 0..doc.players.len() {
                if actions[s][p].is_empty() {
                    return invalid(format!(
                        "empty action set for player `{}` at state `{}`",
                        doc.players[p], state_names[s]
                    ));
                }
            }
        }

        let mut arena = Arena {
            players: doc.players.clone(),
            states: state_names.clone(),
            labels,
            alphabet,
            declared_alphabet,
            initial,
            actions,
            transitions: Vec::new(),
        };
        let mut table: Vec<Vec<Option<usize>>> = (0..arena.num_states())
            .map(|s| {
                let count = (0..arena.num_players()).map(|p| arena.num_actions(s, p)).product();
                vec![None; count]
            })
            .collect();
        for t in &doc.transitions {
            let from = match states.get(t.from.as_str()) {
                Some(&s) => s,
                None => return invalid(format!("transition from undefined state `{}`", t.from)),
            };
            let to = match states.get(t.to.as_str()) {
                Some(&s) => s,
                None => return invalid(format!("transition to undefined state `{}`", t.to)),
            };
            if t.profile.len() != arena.num_players() {
                return invalid(format!(
                    "transition from `{}` must assign an action to every player",
                    t.from
                ));
            }
            let mut profile = vec![0; arena.num_players()];
            for (player, action) in &t.profile {
                let p = match players.get(player.as_str()) {
                    Some(&p) => p,
                    None => {
                        return invalid(format!(
                            "transition from `{}` names undeclared player `{player}`",
                            t.from
                        ))
                    }
                };
                match arena.actions[from][p].iter().position(|a| a == action) {
                    Some(a) => profile[p] = a,
                    None => {
                        return invalid(format!(
                            "action `{action}` is not available to `{player}` at state `{}`",
                            t.from
                        ))
                    }
                }
            }
            let index = arena.encode_profile(from, &profile);
            match table[from][index] {
                Some(prev) if prev != to => {
                    return invalid(format!(
                        "conflicting transitions from `{}` under {}",
                        t.from,
                        arena.describe_profile(from, &profile)
                    ))
                }
                _ => table[from][index] = Some(to),
            }
        }
        let mut transitions = Vec::with_capacity(table.len());
        for (s, row) in table.iter().enumerate() {
            let mut dense = Vec::with_capacity(row.len());
            for (index, target) in row.iter().enumerate() {
                match target {
                    Some(t) => dense.push(*t),
                    None => {
                        let profile = arena.decode_profile(s, index);
                        return invalid(format!(
                            "missing transition from state `{}` under profile {}",
                            state_names[s],
                            arena.describe_profile(s, &profile)
                        ));
                    }
                }
            }
            transitions.push(dense);
        }
        arena.transitions = transitions;
        Game::new(Arc::new(arena), weights)
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "game with {} player(s) and {} state(s)",
            self.num_players(),
            self.num_states()
        )
    }
}

fn index_names<'a>(names: &'a [String], what: &str) -> Result<HashMap<&'a str, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.as_str(), i).is_some() {
            return Err(Error::InvalidGame(format!("duplicate {what} `{name}`")));
        }
    }
    Ok(index)
}

/// Programmatic construction of arenas, used by fixtures and random
/// generators. Names are generated as `s0, s1, ...`, `p0, p1, ...` unless
/// overridden.
#[derive(Debug, Clone)]
pub struct ArenaBuilder {
    players: Vec<String>,
    states: Vec<String>,
    labels: Vec<BTreeSet<String>>,
    initial: usize,
    actions: Vec<Vec<Vec<String>>>,
    transitions: Vec<Vec<usize>>,
    declared: Option<Vec<String>>,
}

impl ArenaBuilder {
    /// `action_counts[s][p]` actions for player `p` at state `s`; every
    /// transition initially points back to its source.
    pub fn new(players: &[&str], states: &[&str], action_counts: &[Vec<usize>]) -> Self {
        let actions: Vec<Vec<Vec<String>>> = action_counts
            .iter()
            .map(|row| row.iter().map(|&k| (0..k).map(|a| format!("a{a}")).collect()).collect())
            .collect();
        let transitions = action_counts
            .iter()
            .enumerate()
            .map(|(s, row)| vec![s; row.iter().product()])
            .collect();
        ArenaBuilder {
            players: players.iter().map(|s| s.to_string()).collect(),
            states: states.iter().map(|s| s.to_string()).collect(),
            labels: vec![BTreeSet::new(); states.len()],
            initial: 0,
            actions,
            transitions,
            declared: None,
        }
    }

    /// Declares the proposition alphabet explicitly, so formulas may mention
    /// propositions that label no state.
    pub fn propositions(mut self, props: &[&str]) -> Self {
        self.declared = Some(props.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn action_names(mut self, state: usize, player: usize, names: &[&str]) -> Self {
        assert_eq!(names.len(), self.actions[state][player].len());
        self.actions[state][player] = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn label(mut self, state: usize, prop: &str) -> Self {
        self.labels[state].insert(prop.to_string());
        self
    }

    pub fn initial(mut self, state: usize) -> Self {
        self.initial = state;
        self
    }

    pub fn transition(mut self, state: usize, profile: &[usize], target: usize) -> Self {
        let counts: Vec<usize> = self.actions[state].iter().map(|a| a.len()).collect();
        let index = profile.iter().zip(&counts).fold(0, |acc, (&a, &k)| acc * k + a);
        self.transitions[state][index] = target;
        self
    }

    pub fn build(self) -> Arena {
        let mut alphabet: BTreeSet<String> = self.labels.iter().flatten().cloned().collect();
        if let Some(props) = &self.declared {
            alphabet.extend(props.iter().cloned());
        }
        Arena {
            players: self.players,
            states: self.states,
            labels: self.labels,
            alphabet,
            declared_alphabet: self.declared,
            initial: self.initial,
            actions: self.actions,
            transitions: self.transitions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub actions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub initial: String,
    pub players: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propositions: Option<Vec<String>>,
    /// Optional GR(1) formula carried by job files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    pub states: Vec<StateDocument>,
    pub transitions: Vec<TransitionDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub id: String,
    #[serde(default)]
    pub label: Vec<String>,
    pub weights: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDocument {
    pub from: String,
    pub profile: BTreeMap<String, String>,
    pub to: String,
}

/// Parses a job document: a game plus an optional `spec` formula string.
pub fn parse_job(text: &str) -> Result<(Game, Option<String>)> {
    let doc: GameDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let game = Game::from_document(&doc)?;
    Ok((game, doc.spec))
}
