//! Weak and strong implementation, and the optimisation, exactness and
//! uniqueness questions built on top of them.
//!
//! Schemes are examined in enumeration order. Batches of schemes may be
//! evaluated in parallel, but the reported witness is always the first one
//! in that order and counters only cover schemes up to it, so results do not
//! depend on the number of threads.

use std::collections::HashMap;
use std::ops::AddAssign;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::gr1::{Gr1Formula, StateSet};
use crate::lasso::LassoPath;
use crate::lp::{check_path_exists, LpConfig, PathMode};
use crate::mpg::{player_punishment, prune, punishment_table, MpgConfig, PlayerPunishment, PunishmentTable};
use crate::rational::{ceil_to_u64, Rational};
use crate::scheme::{apply_subsidy, enumerate_schemes, enumerate_schemes_of_cost, SubsidyScheme, DEFAULT_SCHEME_CAP};

pub const DEFAULT_GRID_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Weak,
    Strong,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Weak => "weak",
            Problem::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub scheme_cap: u64,
    pub grid_cap: u128,
    pub mpg: MpgConfig,
    pub lp: LpConfig,
    /// Scan budgets upwards instead of binary search when optimising.
    pub linear_scan: bool,
    pub parallel: bool,
    /// Schemes evaluated together before checking for a witness.
    pub batch: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme_cap: DEFAULT_SCHEME_CAP,
            grid_cap: DEFAULT_GRID_CAP,
            mpg: MpgConfig::default(),
            lp: LpConfig::default(),
            linear_scan: false,
            parallel: true,
            batch: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub schemes_examined: u64,
    pub grid_points: u64,
    pub lps_solved: u64,
}

impl AddAssign for Counters {
    fn add_assign(&mut self, other: Counters) {
        self.schemes_examined += other.schemes_examined;
        self.grid_points += other.grid_points;
        self.lps_solved += other.lps_solved;
    }
}

/// For strong implementation: every point of the grid was searched for an
/// equilibrium path violating the formula, and none was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub grid_points: u64,
    pub negation_searches: u64,
}

/// A scheme, a threshold vector and a lasso inside the pruned subsidised
/// game paying every player at least the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub scheme: SubsidyScheme,
    pub z: Vec<Rational>,
    pub path: LassoPath,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub witness: Option<Witness>,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub budget: u64,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptOutcome {
    pub optimum: Option<Optimum>,
    pub upper_bound: u64,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactOutcome {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueOutcome {
    /// `None` when no budget up to the bound admits an implementation.
    pub unique: Option<bool>,
    pub optimum: Option<u64>,
    /// Up to two implementations of optimal cost, in enumeration order.
    pub implementations: Vec<Witness>,
    pub counters: Counters,
}

type CacheKey = (usize, Vec<u64>);

pub struct Solver<'a> {
    game: &'a Game,
    formula: &'a Gr1Formula,
    psi: Vec<StateSet>,
    theta: Vec<StateSet>,
    cfg: SolverConfig,
    cache: Mutex<HashMap<CacheKey, Arc<PlayerPunishment>>>,
}

impl<'a> Solver<'a> {
    pub fn new(game: &'a Game, formula: &'a Gr1Formula, cfg: SolverConfig) -> Result<Self> {
        formula.check_alphabet(game)?;
        Ok(Solver {
            game,
            formula,
            psi: formula.antecedent_sets(game)?,
            theta: formula.consequent_sets(game)?,
            cfg,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Punishment values of the subsidised game. A player's row depends only
    /// on that player's own subsidies, so rows are shared between schemes.
    pub fn table_for(&self, subsidised: &Game, scheme: &SubsidyScheme) -> Result<PunishmentTable> {
        let mut rows = Vec::with_capacity(self.game.num_players());
        for p in 0..self.game.num_players() {
            let key = (p, scheme.player_row(p).to_vec());
            let cached = self.cache.lock().expect("cache lock").get(&key).cloned();
            let row = match cached {
                Some(row) => row,
                None => {
                    let row = Arc::new(player_punishment(subsidised, p, &self.cfg.mpg)?);
                    self.cache.lock().expect("cache lock").insert(key, Arc::clone(&row));
                    row
                }
            };
            rows.push((*row).clone());
        }
        Ok(PunishmentTable::from_rows(rows))
    }

    /// Ways the formula can hold on a cycle: every consequent is met, or
    /// some antecedent is avoided.
    fn satisfying_modes(&self) -> Vec<PathMode> {
        let mut modes = vec![PathMode::VisitAll(self.theta.clone())];
        modes.extend(self.psi.iter().cloned().map(PathMode::Avoid));
        modes
    }

    /// Ways the formula can fail on a cycle.
    fn violating_modes(&self) -> Vec<PathMode> {
        self.theta
            .iter()
            .map(|theta| PathMode::NegGr1 {
                psi: self.psi.clone(),
                theta: theta.clone(),
            })
            .collect()
    }

    /// Decides whether `scheme` is a weak (resp. strong) implementation.
    pub fn evaluate(&self, scheme: &SubsidyScheme, problem: Problem) -> Result<(Option<Witness>, Counters)> {
        let mut counters = Counters {
            schemes_examined: 1,
            ..Counters::default()
        };
        let game = apply_subsidy(self.game, scheme);
        let table = self.table_for(&game, scheme)?;
        if table.grid_size() > self.cfg.grid_cap {
            return Err(Error::ResourceLimit(format!(
                "{} threshold vectors exceed the cap of {}",
                table.grid_size(),
                self.cfg.grid_cap
            )));
        }
        let grid = table.grid();

        let first_path = |modes: &[PathMode], counters: &mut Counters| -> Result<Option<(Vec<Rational>, LassoPath)>> {
            for z in &grid {
                counters.grid_points += 1;
                let pg = prune(&game, &table, z);
                if pg.is_empty() {
                    continue;
                }
                for mode in modes {
                    let search = check_path_exists(&pg, mode, &self.cfg.lp)?;
                    counters.lps_solved += search.lps_solved;
                    if let Some(path) = search.path {
                        return Ok(Some((z.clone(), path)));
                    }
                }
            }
            Ok(None)
        };

        let witness = match problem {
            Problem::Weak => first_path(&self.satisfying_modes(), &mut counters)?.map(|(z, path)| Witness {
                scheme: scheme.clone(),
                z,
                path,
                certificate: None,
            }),
            Problem::Strong => match first_path(&[PathMode::NeOnly], &mut counters)? {
                None => None,
                Some((z, path)) => {
                    let violating = self.violating_modes();
                    let before = counters.lps_solved;
                    if first_path(&violating, &mut counters)?.is_some() {
                        None
                    } else {
                        let searched = if violating.is_empty() { 0 } else { grid.len() as u64 };
                        Some(Witness {
                            scheme: scheme.clone(),
                            z,
                            path,
                            certificate: Some(Certificate {
                                grid_points: searched,
                                negation_searches: counters.lps_solved - before,
                            }),
                        })
                    }
                }
            },
        };
        Ok((witness, counters))
    }

    /// First implementation among `schemes`, plus up to `want - 1` more.
    fn scan(
        &self,
        schemes: impl Iterator<Item = SubsidyScheme>,
        problem: Problem,
        want: usize,
    ) -> Result<(Vec<Witness>, Counters)> {
        let mut counters = Counters::default();
        let mut found = Vec::new();
        let mut schemes = schemes.peekable();
        let batch = if self.cfg.parallel { self.cfg.batch.max(1) } else { 1 };
        while schemes.peek().is_some() {
            let chunk: Vec<SubsidyScheme> = schemes.by_ref().take(batch).collect();
            let results: Vec<Result<(Option<Witness>, Counters)>> = if self.cfg.parallel && chunk.len() > 1 {
                chunk.par_iter().map(|k| self.evaluate(k, problem)).collect()
            } else {
                chunk.iter().map(|k| self.evaluate(k, problem)).collect()
            };
            for result in results {
                let (witness, c) = result?;
                counters += c;
                if let Some(w) = witness {
                    found.push(w);
                    if found.len() >= want {
                        return Ok((found, counters));
                    }
                }
            }
        }
        Ok((found, counters))
    }

    /// Some scheme of cost at most `budget` is an implementation.
    pub fn decide(&self, problem: Problem, budget: u64) -> Result<Outcome> {
        let schemes = enumerate_schemes(self.game, budget, self.cfg.scheme_cap)?;
        let (mut found, counters) = self.scan(schemes, problem, 1)?;
        Ok(Outcome {
            witness: found.pop(),
            counters,
        })
    }

    pub fn weak_implementation(&self, budget: u64) -> Result<Outcome> {
        self.decide(Problem::Weak, budget)
    }

    pub fn strong_implementation(&self, budget: u64) -> Result<Outcome> {
        self.decide(Problem::Strong, budget)
    }

    /// Cheapest budget with an implementation, searched up to
    /// [`budget_upper_bound`].
    pub fn optimum(&self, problem: Problem) -> Result<OptOutcome> {
        let upper_bound = budget_upper_bound(self.game, &self.cfg.mpg)?;
        let mut counters = Counters::default();
        if self.cfg.linear_scan {
            for budget in 0..=upper_bound {
                let schemes = enumerate_schemes_of_cost(self.game, budget, self.cfg.scheme_cap)?;
                let (mut found, c) = self.scan(schemes, problem, 1)?;
                counters += c;
                if let Some(witness) = found.pop() {
                    return Ok(OptOutcome {
                        optimum: Some(Optimum { budget, witness }),
                        upper_bound,
                        counters,
                    });
                }
            }
            return Ok(OptOutcome {
                optimum: None,
                upper_bound,
                counters,
            });
        }

        let top = self.decide(problem, upper_bound)?;
        counters += top.counters;
        let Some(mut best) = top.witness else {
            return Ok(OptOutcome {
                optimum: None,
                upper_bound,
                counters,
            });
        };
        let (mut lo, mut hi) = (0, upper_bound);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let probe = self.decide(problem, mid)?;
            counters += probe.counters;
            match probe.witness {
                Some(w) => {
                    hi = mid;
                    best = w;
                }
                None => lo = mid + 1,
            }
        }
        Ok(OptOutcome {
            optimum: Some(Optimum {
                budget: hi,
                witness: best,
            }),
            upper_bound,
            counters,
        })
    }

    /// `budget` admits an implementation and `budget - 1` does not.
    pub fn exact(&self, problem: Problem, budget: u64) -> Result<ExactOutcome> {
        let at = self.decide(problem, budget)?;
        let mut counters = at.counters;
        let Some(witness) = at.witness else {
            return Ok(ExactOutcome {
                holds: false,
                witness: None,
                counters,
            });
        };
        if budget > 0 {
            let below = self.decide(problem, budget - 1)?;
            counters += below.counters;
            if below.witness.is_some() {
                return Ok(ExactOutcome {
                    holds: false,
                    witness: below.witness,
                    counters,
                });
            }
        }
        Ok(ExactOutcome {
            holds: true,
            witness: Some(witness),
            counters,
        })
    }

    /// Whether exactly one scheme of optimal cost is an implementation.
    pub fn unique_optimum(&self, problem: Problem) -> Result<UniqueOutcome> {
        let opt = self.optimum(problem)?;
        let mut counters = opt.counters;
        let Some(optimum) = opt.optimum else {
            return Ok(UniqueOutcome {
                unique: None,
                optimum: None,
                implementations: Vec::new(),
                counters,
            });
        };
        let schemes = enumerate_schemes_of_cost(self.game, optimum.budget, self.cfg.scheme_cap)?;
        let (found, c) = self.scan(schemes, problem, 2)?;
        counters += c;
        Ok(UniqueOutcome {
            unique: Some(found.len() == 1),
            optimum: Some(optimum.budget),
            implementations: found,
            counters,
        })
    }

    pub fn formula(&self) -> &Gr1Formula {
        self.formula
    }
}

/// `⌈Σ_i max(0, max_s pun_i(s)) · (|St| − 1)⌉` over the unsubsidised game.
pub fn budget_upper_bound(game: &Game, cfg: &MpgConfig) -> Result<u64> {
    let table = punishment_table(game, cfg)?;
    let states = Rational::from_integer((game.num_states() as i64 - 1).into());
    let total: Rational = (0..game.num_players())
        .map(|p| {
            let top = table.max_value(p).clone();
            if top > Rational::zero() {
                top * &states
            } else {
                Rational::zero()
            }
        })
        .sum();
    Ok(ceil_to_u64(&total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gr1::eval_on_lasso;
    use crate::lasso::mean_payoff;

    fn sequential() -> SolverConfig {
        SolverConfig {
            parallel: false,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn g1_ladder() {
        let g = fixtures::g1();
        let f = Gr1Formula::parse("true -> GF p").unwrap();
        let solver = Solver::new(&g, &f, sequential()).unwrap();
        assert!(solver.weak_implementation(0).unwrap().witness.is_none());
        let w = solver.weak_implementation(1).unwrap().witness.unwrap();
        assert_eq!(w.scheme.cells(), &[0, 1, 0]);
        assert_eq!(w.path.cycle_states(), StateSet::from([1]));
        assert!(solver.strong_implementation(1).unwrap().witness.is_none());
        let s = solver.strong_implementation(2).unwrap().witness.unwrap();
        assert_eq!(s.scheme.cells(), &[0, 2, 0]);
        assert_eq!(budget_upper_bound(&g, &MpgConfig::default()).unwrap(), 2);
        assert_eq!(solver.optimum(Problem::Weak).unwrap().optimum.unwrap().budget, 1);
        assert_eq!(solver.optimum(Problem::Strong).unwrap().optimum.unwrap().budget, 2);
        assert!(solver.exact(Problem::Weak, 1).unwrap().holds);
        assert!(!solver.exact(Problem::Weak, 0).unwrap().holds);
        assert!(!solver.exact(Problem::Weak, 2).unwrap().holds);
        assert_eq!(solver.unique_optimum(Problem::Weak).unwrap().unique, Some(true));
    }

    #[test]
    fn witnesses_are_sound() {
        let g = fixtures::g1();
        let f = Gr1Formula::parse("true -> GF p").unwrap();
        let solver = Solver::new(&g, &f, sequential()).unwrap();
        for problem in [Problem::Weak, Problem::Strong] {
            let w = solver.decide(problem, 2).unwrap().witness.unwrap();
            let sub = apply_subsidy(&g, &w.scheme);
            w.path.validate(&sub).unwrap();
            assert!(eval_on_lasso(&f, &sub, &w.path));
            assert!(mean_payoff(&w.path, &sub, 0) >= w.z[0]);
        }
    }

    #[test]
    fn symmetric_optimum_is_not_unique() {
        let g = fixtures::symmetric();
        let f = Gr1Formula::parse("true -> GF p").unwrap();
        let solver = Solver::new(&g, &f, sequential()).unwrap();
        let u = solver.unique_optimum(Problem::Weak).unwrap();
        assert_eq!(u.optimum, Some(1));
        assert_eq!(u.unique, Some(false));
        assert_eq!(u.implementations.len(), 2);
    }

    #[test]
    fn linear_scan_matches_binary_search() {
        let g = fixtures::g1();
        let f = Gr1Formula::parse("true -> GF p").unwrap();
        let linear = Solver::new(
            &g,
            &f,
            SolverConfig {
                linear_scan: true,
                ..sequential()
            },
        )
        .unwrap();
        let binary = Solver::new(&g, &f, sequential()).unwrap();
        for problem in [Problem::Weak, Problem::Strong] {
            let a = linear.optimum(problem).unwrap().optimum.unwrap();
            let b = binary.optimum(problem).unwrap().optimum.unwrap();
            assert_eq!(a.budget, b.budget);
            assert_eq!(a.witness.scheme, b.witness.scheme);
        }
    }

    #[test]
    fn unsatisfiable_formula_has_no_optimum() {
        let g = fixtures::g1();
        let f = Gr1Formula::parse("true -> GF (p & !p)").unwrap();
        let solver = Solver::new(&g, &f, sequential()).unwrap();
        let opt = solver.optimum(Problem::Weak).unwrap();
        assert!(opt.optimum.is_none());
        assert_eq!(solver.unique_optimum(Problem::Weak).unwrap().unique, None);
    }

    #[test]
    fn unknown_proposition_is_rejected() {
        let g = fixtures::g1();
        let f = Gr1Formula::parse("true -> GF q").unwrap();
        assert!(matches!(
            Solver::new(&g, &f, sequential()),
            Err(Error::UnknownProposition(p)) if p == "q"
        ));
    }
}
