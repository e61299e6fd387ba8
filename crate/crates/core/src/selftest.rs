//! Randomised agreement check between the solver and the brute-force
//! oracle. The report is a pure function of the seed and case count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::game::Game;
use crate::gr1::Gr1Formula;
use crate::oracle::{brute_force_strong, brute_force_weak, OracleConfig};
use crate::random::{random_formula, random_game, GameShape};
use crate::solver::{Problem, Solver, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    ResourceLimit,
}

impl Verdict {
    fn of(result: Result<bool>) -> Result<Verdict> {
        match result {
            Ok(true) => Ok(Verdict::Yes),
            Ok(false) => Ok(Verdict::No),
            Err(e) if e.is_resource_limit() => Ok(Verdict::ResourceLimit),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BudgetReport {
    pub budget: u64,
    pub weak: Verdict,
    pub oracle_weak: Verdict,
    pub strong: Verdict,
    pub oracle_strong: Verdict,
    /// Cells of the first weak implementation found, if any.
    pub weak_scheme: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub case: usize,
    pub states: usize,
    pub players: usize,
    pub formula: String,
    pub budgets: Vec<BudgetReport>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub schema: u32,
    pub seed: u64,
    pub cases: usize,
    pub max_budget: u64,
    pub disagreements: usize,
    pub results: Vec<CaseReport>,
}

/// Instances drawn for `seed`, independent of how they are evaluated.
pub fn instances(seed: u64, cases: usize, shape: &GameShape) -> Vec<(Game, Gr1Formula)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .map(|_| {
            let game = random_game(&mut rng, shape);
            let formula = random_formula(&mut rng, &shape.propositions);
            (game, formula)
        })
        .collect()
}

fn check_case(case: usize, game: &Game, formula: &Gr1Formula, max_budget: u64) -> Result<CaseReport> {
    let oracle = OracleConfig::default();
    let solver = Solver::new(game, formula, SolverConfig::default())?;
    let mut budgets = Vec::new();
    for budget in 0..=max_budget {
        let weak_outcome = solver.decide(Problem::Weak, budget);
        let weak_scheme = weak_outcome
            .as_ref()
            .ok()
            .and_then(|o| o.witness.as_ref())
            .map(|w| w.scheme.cells().to_vec());
        let weak = Verdict::of(weak_outcome.map(|o| o.witness.is_some()))?;
        let strong = Verdict::of(solver.decide(Problem::Strong, budget).map(|o| o.witness.is_some()))?;
        budgets.push(BudgetReport {
            budget,
            weak,
            oracle_weak: Verdict::of(brute_force_weak(game, formula, budget, &oracle))?,
            strong,
            oracle_strong: Verdict::of(brute_force_strong(game, formula, budget, &oracle))?,
            weak_scheme,
        });
    }
    let agree = budgets
        .iter()
        .all(|b| b.weak == b.oracle_weak && b.strong == b.oracle_strong);
    Ok(CaseReport {
        case,
        states: game.num_states(),
        players: game.num_players(),
        formula: formula.to_string(),
        budgets,
        agree,
    })
}

/// Runs `cases` random instances at budgets `0..=max_budget`.
pub fn selftest(seed: u64, cases: usize, max_budget: u64) -> Result<SelftestReport> {
    let shape = GameShape::default();
    let results = instances(seed, cases, &shape)
        .par_iter()
        .enumerate()
        .map(|(k, (game, formula))| check_case(k, game, formula, max_budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(SelftestReport {
        schema: 1,
        seed,
        cases,
        max_budget,
        disagreements: results.iter().filter(|r| !r.agree).count(),
        results,
    })
}
