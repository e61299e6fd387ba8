use eqdesign_core::gr1::eval_on_lasso;
use eqdesign_core::lasso::payoffs;
use eqdesign_core::mpg::{prune, MpgConfig};
use eqdesign_core::oracle::{brute_force_ne_exists, brute_force_strong, brute_force_weak, OracleConfig};
use eqdesign_core::random::{random_formula, random_game, GameShape};
use eqdesign_core::scheme::apply_subsidy;
use eqdesign_core::solver::{budget_upper_bound, Problem, Solver, SolverConfig, Witness};
use eqdesign_core::{fixtures, Game, Gr1Formula};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> (Game, Gr1Formula) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = GameShape::default();
    let g = random_game(&mut rng, &shape);
    let f = random_formula(&mut rng, &shape.propositions);
    (g, f)
}

fn sequential() -> SolverConfig {
    SolverConfig {
        parallel: false,
        ..SolverConfig::default()
    }
}

fn check_witness(solver: &Solver<'_>, game: &Game, formula: &Gr1Formula, budget: u64, w: &Witness) {
    assert!(w.scheme.cost() <= budget);
    let sub = apply_subsidy(game, &w.scheme);
    w.path.validate(&sub).unwrap();
    assert_eq!(w.path.start(), sub.arena().initial());
    let table = solver.table_for(&sub, &w.scheme).unwrap();
    assert!(prune(&sub, &table, &w.z).contains(&w.path));
    for (value, z) in payoffs(&w.path, &sub).iter().zip(&w.z) {
        assert!(value >= z);
    }
    assert!(eval_on_lasso(formula, &sub, &w.path));
}

#[test]
fn g1_ladder() {
    let g = fixtures::g1();
    let f = Gr1Formula::parse("GF p").unwrap();
    let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
    let weak: Vec<bool> = (0..3)
        .map(|b| solver.decide(Problem::Weak, b).unwrap().witness.is_some())
        .collect();
    let strong: Vec<bool> = (0..3)
        .map(|b| solver.decide(Problem::Strong, b).unwrap().witness.is_some())
        .collect();
    assert_eq!(weak, [false, true, true]);
    assert_eq!(strong, [false, false, true]);
    assert_eq!(solver.optimum(Problem::Weak).unwrap().optimum.unwrap().budget, 1);
    assert_eq!(solver.optimum(Problem::Strong).unwrap().optimum.unwrap().budget, 2);
    assert!(solver.exact(Problem::Weak, 1).unwrap().holds);
    assert!(!solver.exact(Problem::Weak, 2).unwrap().holds);
    assert!(solver.exact(Problem::Strong, 2).unwrap().holds);
    assert_eq!(solver.unique_optimum(Problem::Weak).unwrap().unique, Some(true));
    assert_eq!(budget_upper_bound(&g, &MpgConfig::default()).unwrap(), 2);
}

#[test]
fn symmetric_optimum_is_not_unique() {
    let g = fixtures::symmetric();
    let f = Gr1Formula::parse("GF p").unwrap();
    let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
    let unique = solver.unique_optimum(Problem::Weak).unwrap();
    assert_eq!(unique.optimum, Some(1));
    assert_eq!(unique.unique, Some(false));
    assert_eq!(unique.implementations.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdicts_are_monotone_and_sound(seed in any::<u64>()) {
        let (g, f) = instance(seed);
        let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
        let mut weak_prev = false;
        let mut strong_prev = false;
        for budget in 0..=2 {
            let weak = solver.decide(Problem::Weak, budget).unwrap();
            let strong = solver.decide(Problem::Strong, budget).unwrap();
            if let Some(w) = &weak.witness {
                check_witness(&solver, &g, &f, budget, w);
            }
            if let Some(w) = &strong.witness {
                check_witness(&solver, &g, &f, budget, w);
                prop_assert!(w.certificate.is_some());
            }
            let (weak, strong) = (weak.witness.is_some(), strong.witness.is_some());
            prop_assert!(!strong || weak, "strong without weak at {budget}");
            prop_assert!(weak || !weak_prev, "weak lost at {budget}");
            prop_assert!(strong || !strong_prev, "strong lost at {budget}");
            weak_prev = weak;
            strong_prev = strong;
        }
    }

    #[test]
    fn verdicts_match_the_oracle(seed in any::<u64>()) {
        let (g, f) = instance(seed);
        let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
        let oracle = OracleConfig::default();
        for budget in 0..=1 {
            prop_assert_eq!(
                solver.decide(Problem::Weak, budget).unwrap().witness.is_some(),
                brute_force_weak(&g, &f, budget, &oracle).unwrap()
            );
            prop_assert_eq!(
                solver.decide(Problem::Strong, budget).unwrap().witness.is_some(),
                brute_force_strong(&g, &f, budget, &oracle).unwrap()
            );
        }
    }

    #[test]
    fn trivial_formula_at_zero_budget_is_equilibrium_existence(seed in any::<u64>()) {
        let (g, _) = instance(seed);
        let top = Gr1Formula::top();
        let solver = Solver::new(&g, &top, SolverConfig::default()).unwrap();
        let exists = brute_force_ne_exists(&g, &OracleConfig::default()).unwrap();
        prop_assert_eq!(solver.decide(Problem::Weak, 0).unwrap().witness.is_some(), exists);
        prop_assert_eq!(solver.decide(Problem::Strong, 0).unwrap().witness.is_some(), exists);
    }

    #[test]
    fn parallel_and_sequential_runs_agree(seed in any::<u64>()) {
        let (g, f) = instance(seed);
        let par = Solver::new(&g, &f, SolverConfig { batch: 3, ..SolverConfig::default() }).unwrap();
        let seq = Solver::new(&g, &f, sequential()).unwrap();
        for problem in [Problem::Weak, Problem::Strong] {
            for budget in 0..=2 {
                prop_assert_eq!(par.decide(problem, budget).unwrap(), seq.decide(problem, budget).unwrap());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optima_are_consistent(seed in any::<u64>()) {
        let (g, f) = instance(seed);
        let bound = budget_upper_bound(&g, &MpgConfig::default()).unwrap();
        prop_assume!(bound <= 3);
        let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
        let linear = Solver::new(&g, &f, SolverConfig { linear_scan: true, ..SolverConfig::default() }).unwrap();
        let weak = solver.optimum(Problem::Weak).unwrap();
        let strong = solver.optimum(Problem::Strong).unwrap();
        prop_assert_eq!(weak.upper_bound, bound);
        let budget_of = |o: &eqdesign_core::solver::OptOutcome| o.optimum.as_ref().map(|x| x.budget);
        prop_assert_eq!(budget_of(&weak), budget_of(&linear.optimum(Problem::Weak).unwrap()));
        prop_assert_eq!(budget_of(&strong), budget_of(&linear.optimum(Problem::Strong).unwrap()));
        if let (Some(w), Some(s)) = (budget_of(&weak), budget_of(&strong)) {
            prop_assert!(w <= s);
        }
        if budget_of(&strong).is_some() {
            prop_assert!(budget_of(&weak).is_some());
        }
        for (problem, outcome) in [(Problem::Weak, &weak), (Problem::Strong, &strong)] {
            if let Some(opt) = &outcome.optimum {
                prop_assert!(opt.budget <= bound);
                check_witness(&solver, &g, &f, opt.budget, &opt.witness);
                prop_assert!(solver.exact(problem, opt.budget).unwrap().holds);
                prop_assert!(!solver.exact(problem, opt.budget + 1).unwrap().holds);
                let unique = solver.unique_optimum(problem).unwrap();
                prop_assert_eq!(unique.optimum, Some(opt.budget));
                prop_assert_eq!(unique.unique, Some(unique.implementations.len() == 1));
            } else {
                prop_assert!(!solver.exact(problem, bound).unwrap().holds);
            }
        }
    }
}
