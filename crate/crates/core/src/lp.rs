//! Cycle-flow linear programs over pruned games, an exact simplex, and lasso
//! extraction from feasible flows.
//!
//! A variable `x_e` per retained edge counts how often a cycle uses `e`.
//! Feasible flows with strongly connected support correspond exactly to
//! closed walks, so every answer is backed by a concrete lasso.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::gr1::StateSet;
use crate::graph::{is_nontrivial, strongly_connected_components};
use crate::lasso::{LassoPath, Step};
use crate::mpg::{PrunedEdge, PrunedGame};
use crate::rational::{lcm_of_denominators, Rational};

pub const DEFAULT_PIVOT_CAP: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Eq,
}

/// Which family a constraint belongs to, kept for auditing and dumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `x_e ≥ 0`
    Nonnegative(usize),
    /// `Σ x_e ≥ 1`
    Support,
    /// `Σ (q_i·w_i(src) − p_i)·x_e ≥ 0` for `z_i = p_i/q_i`
    Payoff(usize),
    /// `Σ_{src ∈ V} x_e = 0`
    Avoid,
    /// `Σ_{src ∈ V} x_e ≥ 1`
    Visit,
    /// inflow equals outflow at a state
    Conservation(usize),
    /// `x_e ≥ 1`, used while growing the support
    Force(usize),
}

impl Family {
    fn tag(&self) -> String {
        match self {
            Family::Nonnegative(e) => format!("nonnegative x{e}"),
            Family::Support => "support".into(),
            Family::Payoff(p) => format!("payoff player {p}"),
            Family::Avoid => "avoid".into(),
            Family::Visit => "visit".into(),
            Family::Conservation(s) => format!("conservation state {s}"),
            Family::Force(e) => format!("force x{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub family: Family,
    pub coeffs: Vec<BigInt>,
    pub relation: Relation,
    pub rhs: BigInt,
}

impl Constraint {
    pub fn new(family: Family, coeffs: Vec<BigInt>, relation: Relation, rhs: i64) -> Self {
        Constraint {
            family,
            coeffs,
            relation,
            rhs: BigInt::from(rhs),
        }
    }

    pub fn is_satisfied(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self
            .coeffs
            .iter()
            .zip(x)
            .map(|(c, v)| v * Rational::from_integer(c.clone()))
            .sum();
        let rhs = Rational::from_integer(self.rhs.clone());
        match self.relation {
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// Linear constraints over one variable per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowLp {
    pub edges: Vec<PrunedEdge>,
    pub constraints: Vec<Constraint>,
}

impl FlowLp {
    pub fn num_vars(&self) -> usize {
        self.edges.len()
    }

    fn indicator(&self, set: &StateSet) -> Vec<BigInt> {
        self.edges
            .iter()
            .map(|e| BigInt::from(set.contains(&e.src) as i64))
            .collect()
    }

    /// Plain-text matrix: one constraint per line as coefficients, relation
    /// and constant, followed by the family as a comment.
    pub fn to_text(&self, game: &Game) -> String {
        let arena = game.arena();
        let mut out = String::new();
        for (j, e) in self.edges.iter().enumerate() {
            let profile = arena.decode_profile(e.src, e.profile_index);
            let _ = writeln!(
                out,
                "# x{j}: {} {} -> {}",
                arena.state_name(e.src),
                arena.describe_profile(e.src, &profile),
                arena.state_name(e.dst)
            );
        }
        for c in &self.constraints {
            let coeffs: Vec<String> = c.coeffs.iter().map(|v| v.to_string()).collect();
            let rel = match c.relation {
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "{} {rel} {}  # {}", coeffs.join(" "), c.rhs, c.family.tag());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSolution {
    pub values: Vec<Rational>,
}

impl FlowSolution {
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&j| self.values[j].is_positive())
            .collect()
    }
}

/// Nonnegativity, support, payoff and conservation rows over `edges`.
pub fn build_lp(game: &Game, z: &[Rational], edges: Vec<PrunedEdge>) -> FlowLp {
    let n = edges.len();
    let mut constraints = Vec::new();
    for j in 0..n {
        let mut coeffs = vec![BigInt::zero(); n];
        coeffs[j] = BigInt::one();
        constraints.push(Constraint::new(Family::Nonnegative(j), coeffs, Relation::Ge, 0));
    }
    constraints.push(Constraint::new(
        Family::Support,
        vec![BigInt::one(); n],
        Relation::Ge,
        1,
    ));
    for (player, zi) in z.iter().enumerate() {
        let coeffs = edges
            .iter()
            .map(|e| zi.denom() * BigInt::from(game.weight(player, e.src)) - zi.numer())
            .collect();
        constraints.push(Constraint::new(Family::Payoff(player), coeffs, Relation::Ge, 0));
    }
    let states: BTreeSet<usize> = edges.iter().flat_map(|e| [e.src, e.dst]).collect();
    for s in states {
        let coeffs = edges
            .iter()
            .map(|e| BigInt::from((e.dst == s) as i64 - (e.src == s) as i64))
            .collect();
        constraints.push(Constraint::new(Family::Conservation(s), coeffs, Relation::Eq, 0));
    }
    FlowLp { edges, constraints }
}

/// The base program over every retained edge of `pg`.
pub fn build_base_lp(pg: &PrunedGame<'_>) -> FlowLp {
    build_lp(pg.game(), pg.z(), pg.edges())
}

/// No flow leaves a state of `set`.
pub fn add_avoid_constraint(mut lp: FlowLp, set: &StateSet) -> FlowLp {
    let coeffs = lp.indicator(set);
    lp.constraints
        .push(Constraint::new(Family::Avoid, coeffs, Relation::Eq, 0));
    lp
}

/// At least one unit of flow leaves some state of each set.
pub fn add_visit_constraints(mut lp: FlowLp, sets: &[StateSet]) -> FlowLp {
    for set in sets {
        let coeffs = lp.indicator(set);
        lp.constraints
            .push(Constraint::new(Family::Visit, coeffs, Relation::Ge, 1));
    }
    lp
}

fn add_force(mut lp: FlowLp, j: usize) -> FlowLp {
    let mut coeffs = vec![BigInt::zero(); lp.num_vars()];
    coeffs[j] = BigInt::one();
    lp.constraints
        .push(Constraint::new(Family::Force(j), coeffs, Relation::Ge, 1));
    lp
}

/// Where dumped programs go. Files are numbered in the order they are solved.
#[derive(Debug)]
pub struct LpDump {
    dir: PathBuf,
    counter: AtomicU64,
}

impl LpDump {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(LpDump {
            dir,
            counter: AtomicU64::new(0),
        })
    }

    fn write(&self, game: &Game, lp: &FlowLp, feasible: bool) -> Result<()> {
        let index = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
        let path = self.dir.join(format!("lp-{index:06}.txt"));
        let verdict = if feasible { "feasible" } else { "infeasible" };
        let text = format!("# {verdict}\n{}", lp.to_text(game));
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct LpConfig {
    pub pivot_cap: u64,
    pub dump: Option<Arc<LpDump>>,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            pivot_cap: DEFAULT_PIVOT_CAP,
            dump: None,
        }
    }
}

/// Exact feasibility of `lp`; variables are implicitly nonnegative.
pub fn feasible(lp: &FlowLp, cfg: &LpConfig) -> Result<Option<FlowSolution>> {
    let rows: Vec<&Constraint> = lp
        .constraints
        .iter()
        .filter(|c| !matches!(c.family, Family::Nonnegative(_)))
        .collect();
    let values = solve_system(lp.num_vars(), &rows, cfg.pivot_cap)?;
    Ok(values.map(|values| FlowSolution { values }))
}

/// Phase one of the simplex method with Bland's rule over exact rationals:
/// finds some `x ≥ 0` satisfying every row, or proves none exists.
pub fn solve_system(num_vars: usize, rows: &[&Constraint], pivot_cap: u64) -> Result<Option<Vec<Rational>>> {
    let m = rows.len();
    let slack_rows: Vec<usize> = (0..m).filter(|&i| rows[i].relation == Relation::Ge).collect();
    let num_slack = slack_rows.len();
    let real = num_vars + num_slack;
    let cols = real + m;

    let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        let mut line = vec![Rational::zero(); cols + 1];
        for (j, c) in row.coeffs.iter().enumerate() {
            line[j] = Rational::from_integer(c.clone());
        }
        if let Some(k) = slack_rows.iter().position(|&r| r == i) {
            line[num_vars + k] = -Rational::one();
        }
        line[cols] = Rational::from_integer(row.rhs.clone());
        if line[cols].is_negative() {
            for v in line.iter_mut() {
                *v = -v.clone();
            }
        }
        line[real + i] = Rational::one();
        tableau.push(line);
    }
    let mut basis: Vec<usize> = (real..cols).collect();

    // Reduced costs of the auxiliary objective `min Σ artificials`.
    let mut objective = vec![Rational::zero(); cols + 1];
    for line in &tableau {
        for j in 0..real {
            objective[j] -= &line[j];
        }
        objective[cols] -= &line[cols];
    }

    let mut pivots = 0u64;
    while let Some(enter) = (0..real).find(|&j| objective[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for (i, line) in tableau.iter().enumerate() {
            if !line[enter].is_positive() {
                continue;
            }
            let r = &line[cols] / &line[enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => r < *lr || (r == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, r));
            }
        }
        let (pr, _) = leave.expect("auxiliary objective is bounded below");
        pivots += 1;
        if pivots > pivot_cap {
            return Err(Error::ResourceLimit(format!("simplex exceeded {pivot_cap} pivots")));
        }
        pivot(&mut tableau, &mut objective, pr, enter);
        basis[pr] = enter;
    }

    if !objective[cols].is_zero() {
        return Ok(None);
    }
    let mut x = vec![Rational::zero(); num_vars];
    for (i, &b) in basis.iter().enumerate() {
        if b < num_vars {
            x[b] = tableau[i][cols].clone();
        }
    }
    debug_assert!(rows.iter().all(|r| r.is_satisfied(&x)));
    Ok(Some(x))
}

fn pivot(tableau: &mut [Vec<Rational>], objective: &mut [Rational], pr: usize, pc: usize) {
    let inv = tableau[pr][pc].recip();
    for v in tableau[pr].iter_mut() {
        *v *= &inv;
    }
    let pivot_row = tableau[pr].clone();
    let eliminate = |line: &mut [Rational]| {
        let factor = line[pc].clone();
        if factor.is_zero() {
            return;
        }
        for (v, p) in line.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &factor * p;
            }
        }
    };
    for (i, line) in tableau.iter_mut().enumerate() {
        if i != pr {
            eliminate(line);
        }
    }
    eliminate(objective);
}

/// What the cycle of a sought lasso must do besides meeting the payoff
/// thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathMode {
    /// Nothing else.
    NeOnly,
    /// Meet every set.
    VisitAll(Vec<StateSet>),
    /// Stay out of the set.
    Avoid(StateSet),
    /// Meet every `psi` set and stay out of `theta`.
    NegGr1 { psi: Vec<StateSet>, theta: StateSet },
}

impl PathMode {
    fn constrain(&self, lp: FlowLp) -> FlowLp {
        match self {
            PathMode::NeOnly => lp,
            PathMode::VisitAll(sets) => add_visit_constraints(lp, sets),
            PathMode::Avoid(set) => add_avoid_constraint(lp, set),
            PathMode::NegGr1 { psi, theta } => add_avoid_constraint(add_visit_constraints(lp, psi), theta),
        }
    }

    /// Whether a cycle visiting exactly `cycle` satisfies the mode.
    pub fn holds(&self, cycle: &StateSet) -> bool {
        let meets = |set: &StateSet| !set.is_disjoint(cycle);
        match self {
            PathMode::NeOnly => true,
            PathMode::VisitAll(sets) => sets.iter().all(meets),
            PathMode::Avoid(set) => !meets(set),
            PathMode::NegGr1 { psi, theta } => psi.iter().all(meets) && !meets(theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSearch {
    pub path: Option<LassoPath>,
    pub lps_solved: u64,
}

/// Looks for a lasso from the initial state inside `pg` whose cycle pays
/// every player at least `z` and satisfies `mode`.
pub fn check_path_exists(pg: &PrunedGame<'_>, mode: &PathMode, cfg: &LpConfig) -> Result<PathSearch> {
    let mut search = PathSearch {
        path: None,
        lps_solved: 0,
    };
    if pg.is_empty() {
        return Ok(search);
    }
    let edges = pg.edges();
    for component in edge_components(pg.game().num_states(), &edges) {
        let local: Vec<PrunedEdge> = component.iter().map(|&j| edges[j].clone()).collect();
        if let Some(flow) = connected_solution(pg, local, mode, cfg, &mut search.lps_solved)? {
            search.path = Some(lasso_from_flow(pg, &flow));
            return Ok(search);
        }
    }
    Ok(search)
}

/// Edge sets of the nontrivial strongly connected components of the graph
/// spanned by `edges`, ordered by smallest state. Edges between components
/// are dropped.
fn edge_components(num_states: usize, edges: &[PrunedEdge]) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); num_states];
    for e in edges {
        if !succ[e.src].contains(&e.dst) {
            succ[e.src].push(e.dst);
        }
    }
    let mut comps: Vec<Vec<usize>> = strongly_connected_components(&succ)
        .into_iter()
        .filter(|c| is_nontrivial(c, &succ))
        .collect();
    comps.sort();
    let mut owner = vec![usize::MAX; num_states];
    for (k, c) in comps.iter().enumerate() {
        for &s in c {
            owner[s] = k;
        }
    }
    let mut out = vec![Vec::new(); comps.len()];
    for (j, e) in edges.iter().enumerate() {
        if owner[e.src] != usize::MAX && owner[e.src] == owner[e.dst] {
            out[owner[e.src]].push(j);
        }
    }
    out
}

fn solve_counted(pg: &PrunedGame<'_>, lp: &FlowLp, cfg: &LpConfig, lps: &mut u64) -> Result<Option<FlowSolution>> {
    *lps += 1;
    let solution = feasible(lp, cfg)?;
    if let Some(dump) = &cfg.dump {
        dump.write(pg.game(), lp, solution.is_some())?;
    }
    Ok(solution)
}

/// A feasible flow over `edges` whose support is strongly connected, if one
/// exists. The sum of feasible flows is feasible, so the union of all
/// possible supports is itself a support; a connected solution lives inside
/// one of its components.
fn connected_solution(
    pg: &PrunedGame<'_>,
    edges: Vec<PrunedEdge>,
    mode: &PathMode,
    cfg: &LpConfig,
    lps: &mut u64,
) -> Result<Option<(Vec<PrunedEdge>, FlowSolution)>> {
    let lp = mode.constrain(build_lp(pg.game(), pg.z(), edges.clone()));
    let Some(first) = solve_counted(pg, &lp, cfg, lps)? else {
        return Ok(None);
    };
    let mut total = first.values;
    for j in 0..edges.len() {
        if total[j].is_positive() {
            continue;
        }
        if let Some(extra) = solve_counted(pg, &add_force(lp.clone(), j), cfg, lps)? {
            for (t, v) in total.iter_mut().zip(extra.values) {
                *t += v;
            }
        }
    }

    let support: Vec<PrunedEdge> = (0..edges.len())
        .filter(|&j| total[j].is_positive())
        .map(|j| edges[j].clone())
        .collect();
    let comps = edge_components(pg.game().num_states(), &support);
    if comps.len() == 1 && comps[0].len() == support.len() {
        let values = (0..edges.len())
            .filter(|&j| total[j].is_positive())
            .map(|j| total[j].clone())
            .collect();
        return Ok(Some((support, FlowSolution { values })));
    }
    for comp in comps {
        let local = comp.iter().map(|&j| support[j].clone()).collect();
        if let Some(found) = connected_solution(pg, local, mode, cfg, lps)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Scales the flow to integers, walks an Eulerian circuit through it and
/// attaches a shortest retained prefix from the initial state.
fn lasso_from_flow(pg: &PrunedGame<'_>, flow: &(Vec<PrunedEdge>, FlowSolution)) -> LassoPath {
    let (edges, solution) = flow;
    let arena = pg.game().arena();
    let scale = lcm_of_denominators(&solution.values);
    let mut counts: Vec<BigInt> = solution.values.iter().map(|v| (v * &scale).to_integer()).collect();
    let gcd = counts.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    for c in counts.iter_mut() {
        *c /= &gcd;
    }
    let counts: Vec<usize> = counts
        .iter()
        .map(|c| usize::try_from(c).expect("witness cycle fits in memory"))
        .collect();

    let circuit = euler_circuit(arena.num_states(), edges, &counts);
    let on_cycle: BTreeSet<usize> = circuit.iter().map(|&j| edges[j].src).collect();

    // Shortest retained path from the initial state to the cycle.
    let all = pg.edges();
    let initial = arena.initial();
    let mut parent: Vec<Option<usize>> = vec![None; arena.num_states()];
    let mut seen = vec![false; arena.num_states()];
    seen[initial] = true;
    let mut queue = VecDeque::from([initial]);
    let mut entry = initial;
    while let Some(s) = queue.pop_front() {
        if on_cycle.contains(&s) {
            entry = s;
            break;
        }
        for (k, e) in all.iter().enumerate() {
            if e.src == s && !seen[e.dst] {
                seen[e.dst] = true;
                parent[e.dst] = Some(k);
                queue.push_back(e.dst);
            }
        }
    }
    let mut prefix_edges = Vec::new();
    let mut cur = entry;
    while let Some(k) = parent[cur] {
        prefix_edges.push(&all[k]);
        cur = all[k].src;
    }
    prefix_edges.reverse();

    let step = |e: &PrunedEdge| Step::new(e.src, arena.decode_profile(e.src, e.profile_index));
    let start = circuit
        .iter()
        .position(|&j| edges[j].src == entry)
        .expect("entry lies on the cycle");
    let mut cycle: Vec<Step> = circuit.iter().map(|&j| step(&edges[j])).collect();
    cycle.rotate_left(start);
    LassoPath::new(prefix_edges.into_iter().map(step).collect(), cycle)
}

/// Hierholzer's algorithm on the multigraph with `counts[j]` copies of edge
/// `j`. The multigraph must be connected and balanced.
fn euler_circuit(num_states: usize, edges: &[PrunedEdge], counts: &[usize]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_states];
    for (j, e) in edges.iter().enumerate().rev() {
        adj[e.src].extend(std::iter::repeat_n(j, counts[j]));
    }
    let start = edges.iter().map(|e| e.src).min().expect("nonempty flow");
    let mut stack: Vec<(usize, Option<usize>)> = vec![(start, None)];
    let mut circuit = Vec::new();
    while let Some(&(v, via)) = stack.last() {
        if let Some(j) = adj[v].pop() {
            stack.push((edges[j].dst, Some(j)));
        } else {
            stack.pop();
            if let Some(j) = via {
                circuit.push(j);
            }
        }
    }
    circuit.reverse();
    circuit
}
