//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines reach the terminal uncaptured.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use eqdesign_core::lasso::payoffs;
use eqdesign_core::lp::{check_path_exists, LpConfig, PathMode};
use eqdesign_core::mpg::{prune, punishment_table, solve_mpg, MpgConfig};
use eqdesign_core::oracle::{
    brute_force_mpg, brute_force_ne_exists, brute_force_ne_lassos, brute_force_path_exists, brute_force_strong,
    brute_force_weak, enumerate_lassos, OracleConfig,
};
use eqdesign_core::random::{random_formula, random_game, random_mpg, GameShape};
use eqdesign_core::scheme::count_schemes;
use eqdesign_core::solver::{Problem, Solver, SolverConfig};
use eqdesign_core::{fixtures, Game, Gr1Formula, StateSet};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn pass(detail: impl Into<String>) -> Self {
        Check {
            ok: true,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Check {
            ok: false,
            detail: detail.into(),
        }
    }
}

fn random_family(seed: u64, count: usize) -> Vec<(Game, Gr1Formula)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = GameShape::default();
    (0..count)
        .map(|_| {
            let g = random_game(&mut rng, &shape);
            let f = random_formula(&mut rng, &shape.propositions);
            (g, f)
        })
        .collect()
}

/// Tuples of `m` nonnegative integers with sum at most `budget`, counted one
/// by one.
fn count_by_enumeration(m: usize, budget: u64) -> u64 {
    fn go(left: usize, budget: u64) -> u64 {
        if left == 0 {
            return 1;
        }
        (0..=budget).map(|v| go(left - 1, budget - v)).sum()
    }
    go(m, budget)
}

fn counting() -> Check {
    let start = Instant::now();
    for m in 1..=8 {
        for budget in 0..=5 {
            let expected = BigUint::from(count_by_enumeration(m, budget));
            let got = count_schemes(m, budget);
            if got != expected {
                return Check::fail(format!("m={m} β={budget}: {got} vs {expected}"));
            }
        }
    }
    timed(start, Duration::from_secs(5), "48 (m, β) pairs")
}

fn mean_payoff_solver() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..200 {
        let g = random_mpg(&mut rng, 6, -2, 2);
        let exact = match solve_mpg(&g, &MpgConfig::default()) {
            Ok(s) => s.values,
            Err(e) => return Check::fail(format!("game {k}: {e}")),
        };
        let brute = brute_force_mpg(&g, &OracleConfig::default()).expect("oracle");
        if exact != brute {
            return Check::fail(format!("game {k}: {exact:?} vs {brute:?}"));
        }
    }
    timed(start, Duration::from_secs(60), "200 games")
}

fn lasso_characterisation() -> Check {
    let start = Instant::now();
    let oracle = OracleConfig::default();
    let mut total = 0;
    for (k, (g, _)) in random_family(3, 100).iter().enumerate() {
        let expected = brute_force_ne_lassos(g, &oracle).expect("oracle");
        let table = punishment_table(g, &MpgConfig::default()).expect("punishment");
        let pruned: Vec<_> = table.grid().into_iter().map(|z| prune(g, &table, &z)).collect();
        let certified: Vec<_> = enumerate_lassos(g, &oracle)
            .expect("oracle")
            .into_iter()
            .filter(|path| {
                let pay = payoffs(path, g);
                pruned
                    .iter()
                    .any(|pg| pg.contains(path) && pay.iter().zip(pg.z()).all(|(v, z)| v >= z))
            })
            .collect();
        if certified != expected {
            return Check::fail(format!(
                "game {k}: {} certified lassos vs {} equilibrium lassos",
                certified.len(),
                expected.len()
            ));
        }
        total += expected.len();
    }
    timed(
        start,
        Duration::from_secs(300),
        format!("100 games, {total} equilibrium lassos"),
    )
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> StateSet {
    (0..n).filter(|_| rng.gen_bool(0.4)).collect()
}

fn lp_against_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut searches = 0;
    let mut found = 0;
    for (k, (g, _)) in random_family(4, 100).iter().enumerate() {
        let n = g.num_states();
        let modes = [
            PathMode::NeOnly,
            PathMode::VisitAll(vec![random_set(&mut rng, n), random_set(&mut rng, n)]),
            PathMode::Avoid(random_set(&mut rng, n)),
            PathMode::NegGr1 {
                psi: vec![random_set(&mut rng, n)],
                theta: random_set(&mut rng, n),
            },
        ];
        let table = punishment_table(g, &MpgConfig::default()).expect("punishment");
        for z in table.grid() {
            let pg = prune(g, &table, &z);
            for mode in &modes {
                let search = check_path_exists(&pg, mode, &LpConfig::default()).expect("lp");
                let sets = match mode {
                    PathMode::NeOnly | PathMode::Avoid(_) => 1,
                    PathMode::VisitAll(s) => s.len(),
                    PathMode::NegGr1 { psi, .. } => psi.len() + 1,
                };
                let expected = brute_force_path_exists(&pg, mode, 2 * n * (sets + 2));
                searches += 1;
                if search.path.is_some() != expected {
                    return Check::fail(format!("game {k}, z {z:?}, {mode:?}: lp {}", search.path.is_some()));
                }
                if let Some(path) = &search.path {
                    found += 1;
                    let pays = payoffs(path, g).iter().zip(&z).all(|(v, t)| v >= t);
                    if path.validate(g).is_err() || !pg.contains(path) || !pays || !mode.holds(&path.cycle_states()) {
                        return Check::fail(format!("game {k}, z {z:?}, {mode:?}: unsound witness"));
                    }
                }
            }
        }
    }
    timed(
        start,
        Duration::MAX,
        format!("{searches} searches over four modes, {found} witnesses checked"),
    )
}

fn g1_ladder() -> Check {
    let start = Instant::now();
    let g = fixtures::g1();
    let f = Gr1Formula::parse("true -> GF p").unwrap();
    let solver = Solver::new(&g, &f, SolverConfig::default()).unwrap();
    let oracle = OracleConfig::default();
    let verdicts = |problem: Problem, budgets: std::ops::RangeInclusive<u64>| -> Vec<bool> {
        budgets
            .map(|b| solver.decide(problem, b).unwrap().witness.is_some())
            .collect()
    };
    let weak = verdicts(Problem::Weak, 0..=1);
    let strong = verdicts(Problem::Strong, 0..=2);
    let oracle_weak: Vec<bool> = (0..=1).map(|b| brute_force_weak(&g, &f, b, &oracle).unwrap()).collect();
    let oracle_strong: Vec<bool> = (0..=2)
        .map(|b| brute_force_strong(&g, &f, b, &oracle).unwrap())
        .collect();
    let opt = |p| solver.optimum(p).unwrap().optimum.map(|o| o.budget);
    let observed = (
        weak.clone(),
        strong.clone(),
        opt(Problem::Weak),
        opt(Problem::Strong),
        solver.exact(Problem::Weak, 1).unwrap().holds,
        solver.exact(Problem::Weak, 0).unwrap().holds,
        solver.unique_optimum(Problem::Weak).unwrap().unique,
    );
    let expected = (
        vec![false, true],
        vec![false, false, true],
        Some(1),
        Some(2),
        true,
        false,
        Some(true),
    );
    if observed != expected {
        return Check::fail(format!("got {observed:?}"));
    }
    if weak != oracle_weak || strong != oracle_strong {
        return Check::fail(format!("oracle sweeps {oracle_weak:?} {oracle_strong:?}"));
    }
    timed(start, Duration::MAX, "weak 0/1, strong 0/1/2, opt 1/2, exact, unique")
}

fn monotonicity() -> Check {
    let start = Instant::now();
    let mut violations = Vec::new();
    let mut both = 0;
    for (k, (g, f)) in random_family(6, 100).iter().enumerate() {
        let solver = Solver::new(g, f, SolverConfig::default()).unwrap();
        let mut prev = (false, false);
        for budget in 0..=2 {
            let weak = solver.decide(Problem::Weak, budget).unwrap().witness.is_some();
            let strong = solver.decide(Problem::Strong, budget).unwrap().witness.is_some();
            if (prev.0 && !weak) || (prev.1 && !strong) {
                violations.push(format!("game {k}: lost at β={budget}"));
            }
            if strong && !weak {
                violations.push(format!("game {k}: strong without weak at β={budget}"));
            }
            prev = (weak, strong);
        }
        let weak_opt = solver.optimum(Problem::Weak).unwrap().optimum.map(|o| o.budget);
        let strong_opt = solver.optimum(Problem::Strong).unwrap().optimum.map(|o| o.budget);
        if let (Some(w), Some(s)) = (weak_opt, strong_opt) {
            both += 1;
            if s < w {
                violations.push(format!("game {k}: opt strong {s} < opt weak {w}"));
            }
        }
    }
    if !violations.is_empty() {
        return Check::fail(violations.join("; "));
    }
    timed(
        start,
        Duration::MAX,
        format!("100 instances, β ≤ 2, {both} with both optima, 0 violations"),
    )
}

fn reduction_sanity() -> Check {
    let start = Instant::now();
    let top = Gr1Formula::top();
    // The default family almost always has an equilibrium; the wider one
    // also produces games without.
    let wide = GameShape {
        max_states: 3,
        max_players: 3,
        max_actions: 3,
        ..GameShape::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut games: Vec<Game> = random_family(7, 100).into_iter().map(|(g, _)| g).collect();
    games.extend((0..100).map(|_| random_game(&mut rng, &wide)));
    let mut with_ne = 0;
    for (k, g) in games.iter().enumerate() {
        let solver = Solver::new(g, &top, SolverConfig::default()).unwrap();
        let got = solver.decide(Problem::Weak, 0).unwrap().witness.is_some();
        let expected = brute_force_ne_exists(g, &OracleConfig::default()).unwrap();
        if got != expected {
            return Check::fail(format!("game {k}: check-weak {got}, oracle {expected}"));
        }
        with_ne += usize::from(expected);
    }
    timed(
        start,
        Duration::MAX,
        format!("{} games, {with_ne} with an equilibrium", games.len()),
    )
}

fn selftest_output(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_eqdesign"))
        .args(["--threads", threads, "selftest", "--seed", "42", "--json"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Check {
    let start = Instant::now();
    let mut runs = Vec::new();
    for threads in ["1", "1", "8", "8"] {
        match selftest_output(threads) {
            Ok(bytes) => runs.push(bytes),
            Err(e) => return Check::fail(format!("--threads {threads}: {e}")),
        }
    }
    if runs.iter().any(|r| r != &runs[0]) {
        return Check::fail("outputs differ");
    }
    let doc: serde_json::Value = match serde_json::from_slice(&runs[0]) {
        Ok(v) => v,
        Err(e) => return Check::fail(format!("output is not JSON: {e}")),
    };
    if doc["report"]["disagreements"] != 0 {
        return Check::fail(format!(
            "selftest reports {} disagreements",
            doc["report"]["disagreements"]
        ));
    }
    timed(
        start,
        Duration::MAX,
        format!("4 runs, {} bytes each, identical", runs[0].len()),
    )
}

type Criterion = (&'static str, fn() -> Check);

fn timed(start: Instant, limit: Duration, detail: impl Into<String>) -> Check {
    let elapsed = start.elapsed();
    let detail = detail.into();
    if elapsed > limit {
        Check::fail(format!("{detail}, took {elapsed:.2?} over the limit of {limit:.0?}"))
    } else {
        Check::pass(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("scheme counting", counting),
        ("mean-payoff solver vs brute force", mean_payoff_solver),
        ("equilibrium lassos vs threshold certificates", lasso_characterisation),
        ("path search vs closed-walk oracle", lp_against_oracle),
        ("G1 ladder", g1_ladder),
        ("monotonicity and containment", monotonicity),
        ("trivial formula at zero budget", reduction_sanity),
        ("selftest determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let check = run();
        let elapsed = start.elapsed();
        let tag = if check.ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name} ({}; {elapsed:.2?})", k + 1, check.detail);
        failed += usize::from(!check.ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
