//! `eqdesign`: decide and optimise subsidy schemes that make a GR(1)
//! objective hold on Nash equilibria of mean-payoff concurrent games.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use eqdesign_core::lp::LpDump;
use eqdesign_core::mpg::{punishment_table, MpgConfig};
use eqdesign_core::oracle::{
    brute_force_ne_lassos, brute_force_strong, brute_force_table, brute_force_weak, OracleConfig,
};
use eqdesign_core::scheme::count_schemes;
use eqdesign_core::selftest::selftest;
use eqdesign_core::solver::{budget_upper_bound, Problem, Solver, SolverConfig};
use eqdesign_core::{game, Error, Game, Gr1Formula};
use serde_json::json;

use report::{JobResult, Verdict};

#[derive(Parser, Debug)]
#[command(
    name = "eqdesign",
    version,
    about = "Equilibrium design for mean-payoff games with GR(1) objectives"
)]
struct Cli {
    /// Print the structured result document on stdout (human text goes to stderr).
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Include per-phase timings in the structured output.
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Job {
    /// Game description (JSON). May carry a `spec` field.
    #[arg(long)]
    game: PathBuf,

    /// GR(1) formula, e.g. "GF a -> GF b & GF c". Overrides the job file.
    #[arg(long)]
    spec: Option<String>,

    /// Scan budgets upwards instead of binary search.
    #[arg(long)]
    linear_scan: bool,

    /// Write every linear program solved to this directory.
    #[arg(long, value_name = "DIR")]
    dump_lp: Option<PathBuf>,

    /// Refuse to enumerate more subsidy schemes than this.
    #[arg(long, default_value_t = eqdesign_core::scheme::DEFAULT_SCHEME_CAP)]
    scheme_cap: u64,
}

#[derive(Args, Debug, Clone)]
struct BudgetJob {
    #[command(flatten)]
    job: Job,

    /// Largest total subsidy a scheme may cost.
    #[arg(long)]
    budget: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Is there a scheme within the budget with some equilibrium satisfying the formula?
    CheckWeak(BudgetJob),
    /// Is there a scheme within the budget whose equilibria exist and all satisfy the formula?
    CheckStrong(BudgetJob),
    /// Smallest budget for weak implementation.
    OptWeak(Job),
    /// Smallest budget for strong implementation.
    OptStrong(Job),
    /// Is the budget exactly the optimum for weak implementation?
    ExactWeak(BudgetJob),
    /// Is the budget exactly the optimum for strong implementation?
    ExactStrong(BudgetJob),
    /// Is there exactly one weak implementation of optimal cost?
    UniqueWeak(Job),
    /// Is there exactly one strong implementation of optimal cost?
    UniqueStrong(Job),
    /// Number of subsidy schemes within the budget.
    Count {
        /// Game description (JSON); only its size matters.
        #[arg(long)]
        game: PathBuf,
        /// Largest total subsidy a scheme may cost.
        #[arg(long)]
        budget: u64,
    },
    /// Punishment value of every player at every state.
    Punish {
        /// Game description (JSON).
        game: PathBuf,
    },
    /// Randomised agreement check between the solver and the brute-force oracle.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random instances drawn from the seed.
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Every budget from 0 up to this one is checked.
        #[arg(long, default_value_t = 1)]
        max_budget: u64,
    },
    /// Brute-force reference answers for small games.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args, Debug, Clone)]
struct OracleJob {
    #[arg(long)]
    game: PathBuf,

    #[arg(long)]
    spec: Option<String>,

    /// Longest cycle (or closed walk) considered.
    #[arg(long)]
    max_cycle: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Weak implementation by exhaustive search over schemes and closed walks.
    CheckWeak {
        #[command(flatten)]
        job: OracleJob,
        #[arg(long)]
        budget: u64,
    },
    /// Strong implementation by exhaustive search over schemes and closed walks.
    CheckStrong {
        #[command(flatten)]
        job: OracleJob,
        #[arg(long)]
        budget: u64,
    },
    /// Lassos with simple prefix and cycle produced by some equilibrium.
    NeLassos {
        #[command(flatten)]
        job: OracleJob,
    },
    /// Punishment values by enumerating positional strategies on the concurrent game.
    Punish {
        #[command(flatten)]
        job: OracleJob,
    },
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

fn load(path: &Path) -> anyhow::Result<(Game, Option<String>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    game::parse_job(&text).with_context(|| format!("in {}", path.display()))
}

fn formula_for(flag: &Option<String>, from_file: Option<String>) -> anyhow::Result<Gr1Formula> {
    let text = flag
        .clone()
        .or(from_file)
        .ok_or_else(|| anyhow!("no formula given: pass --spec or add a `spec` field to the game file"))?;
    Ok(Gr1Formula::parse(&text)?)
}

fn solver_config(job: &Job) -> anyhow::Result<SolverConfig> {
    let mut cfg = SolverConfig {
        scheme_cap: job.scheme_cap,
        linear_scan: job.linear_scan,
        ..SolverConfig::default()
    };
    if let Some(dir) = &job.dump_lp {
        cfg.lp.dump = Some(Arc::new(LpDump::new(dir)?));
        // Sequential evaluation keeps the dump numbering reproducible.
        cfg.parallel = false;
    }
    Ok(cfg)
}

fn oracle_config(job: &OracleJob) -> OracleConfig {
    let mut cfg = OracleConfig::default();
    if let Some(n) = job.max_cycle {
        cfg.max_cycle = n;
        cfg.max_walk = Some(n);
    }
    cfg
}

/// Converts library errors: resource limits become a verdict, the rest
/// are input errors.
fn classify(command: &str, err: anyhow::Error) -> Result<JobResult, InputError> {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_resource_limit() => Ok(JobResult::new(command, Verdict::ResourceLimit)
            .field("error", json!(e.to_string()))
            .line(format!("{command}: {e}"))),
        _ => Err(InputError(err)),
    }
}

fn run_job(
    command: &str,
    job: &Job,
    f: impl FnOnce(&Game, &Solver) -> anyhow::Result<JobResult>,
) -> Result<JobResult, InputError> {
    let started = Instant::now();
    let (game, spec) = load(&job.game).map_err(InputError)?;
    let formula = formula_for(&job.spec, spec).map_err(InputError)?;
    let cfg = solver_config(job).map_err(InputError)?;
    let solver = Solver::new(&game, &formula, cfg).map_err(|e| InputError(e.into()))?;
    let loaded = started.elapsed();
    let solving = Instant::now();
    let mut result = match f(&game, &solver) {
        Ok(r) => r,
        Err(e) => classify(command, e)?,
    };
    result = result.field("spec", json!(formula.to_string()));
    result.timings = vec![("load", loaded), ("solve", solving.elapsed())];
    Ok(result)
}

fn decision(command: &str, problem: Problem, job: &BudgetJob) -> Result<JobResult, InputError> {
    run_job(command, &job.job, |game, solver| {
        let outcome = solver.decide(problem, job.budget)?;
        let verdict = Verdict::from_bool(outcome.witness.is_some());
        let mut result = JobResult::new(command, verdict).field("budget", json!(job.budget));
        result.counters = Some(outcome.counters);
        match &outcome.witness {
            Some(w) => {
                result = result.field("witness", report::witness_json(game, w)).line(format!(
                    "{} implementation within budget {}: yes",
                    problem.name(),
                    job.budget
                ));
                for line in report::witness_text(game, w) {
                    result = result.line(format!("  {line}"));
                }
            }
            None => {
                result = result.field("witness", json!(null)).line(format!(
                    "{} implementation within budget {}: no",
                    problem.name(),
                    job.budget
                ));
            }
        }
        Ok(result)
    })
}

fn optimum(command: &str, problem: Problem, job: &Job) -> Result<JobResult, InputError> {
    run_job(command, job, |game, solver| {
        let outcome = solver.optimum(problem)?;
        let mut result = JobResult::new(command, Verdict::from_bool(outcome.optimum.is_some()))
            .field("upper_bound", json!(outcome.upper_bound));
        result.counters = Some(outcome.counters);
        match &outcome.optimum {
            Some(opt) => {
                result = result
                    .field("optimum", json!(opt.budget))
                    .field("witness", report::witness_json(game, &opt.witness))
                    .line(format!("optimal {} budget: {}", problem.name(), opt.budget));
                for line in report::witness_text(game, &opt.witness) {
                    result = result.line(format!("  {line}"));
                }
            }
            None => {
                result = result
                    .field("optimum", json!(null))
                    .field("witness", json!(null))
                    .line(format!(
                        "no {} implementation with budget up to {}",
                        problem.name(),
                        outcome.upper_bound
                    ));
            }
        }
        Ok(result)
    })
}

fn exact(command: &str, problem: Problem, job: &BudgetJob) -> Result<JobResult, InputError> {
    run_job(command, &job.job, |game, solver| {
        let outcome = solver.exact(problem, job.budget)?;
        let mut result = JobResult::new(command, Verdict::from_bool(outcome.holds))
            .field("budget", json!(job.budget))
            .field(
                "witness",
                outcome
                    .witness
                    .as_ref()
                    .map_or(json!(null), |w| report::witness_json(game, w)),
            )
            .line(format!(
                "{} is the optimal {} budget: {}",
                job.budget,
                problem.name(),
                if outcome.holds { "yes" } else { "no" }
            ));
        result.counters = Some(outcome.counters);
        Ok(result)
    })
}

fn unique(command: &str, problem: Problem, job: &Job) -> Result<JobResult, InputError> {
    run_job(command, job, |game, solver| {
        let outcome = solver.unique_optimum(problem)?;
        let verdict = Verdict::from_bool(outcome.unique == Some(true));
        let schemes: Vec<_> = outcome
            .implementations
            .iter()
            .map(|w| report::scheme_json(game, &w.scheme))
            .collect();
        let text = match (outcome.unique, outcome.optimum) {
            (None, _) | (_, None) => format!("no {} implementation exists up to the budget bound", problem.name()),
            (Some(true), Some(b)) => format!("the optimal {} implementation (cost {b}) is unique", problem.name()),
            (Some(false), Some(b)) => {
                format!("several {} implementations share the optimal cost {b}", problem.name())
            }
        };
        let mut result = JobResult::new(command, verdict)
            .field("unique", json!(outcome.unique))
            .field("optimum", json!(outcome.optimum))
            .field("schemes", json!(schemes))
            .line(text);
        for w in &outcome.implementations {
            result = result.line(format!("  {}", report::scheme_text(game, &w.scheme)));
        }
        result.counters = Some(outcome.counters);
        Ok(result)
    })
}

fn count(game_path: &Path, budget: u64) -> Result<JobResult, InputError> {
    let (game, _) = load(game_path).map_err(InputError)?;
    let m = game.num_cells();
    let n = count_schemes(m, budget);
    Ok(JobResult::new("count", Verdict::Yes)
        .field("cells", json!(m))
        .field("budget", json!(budget))
        .field("count", json!(n.to_string()))
        .line(n.to_string()))
}

fn punish(game_path: &Path) -> Result<JobResult, InputError> {
    let (game, _) = load(game_path).map_err(InputError)?;
    let table = match punishment_table(&game, &MpgConfig::default()) {
        Ok(t) => t,
        Err(e) => return classify("punish", e.into()),
    };
    let bound = budget_upper_bound(&game, &MpgConfig::default()).map_err(|e| InputError(e.into()))?;
    let values: Vec<Vec<_>> = (0..game.num_players()).map(|p| table.values(p).to_vec()).collect();
    let mut result = JobResult::new("punish", Verdict::Yes)
        .field("punishment", report::punishment_json(&game, &values, Some(&table)))
        .field("budget_upper_bound", json!(bound));
    for line in report::punishment_text(&game, &values) {
        result = result.line(line);
    }
    Ok(result)
}

fn run_selftest(seed: u64, cases: usize, max_budget: u64) -> Result<JobResult, InputError> {
    let report = match selftest(seed, cases, max_budget) {
        Ok(r) => r,
        Err(e) => return classify("selftest", e.into()),
    };
    let verdict = Verdict::from_bool(report.disagreements == 0);
    let mut result =
        JobResult::new("selftest", verdict).field("report", serde_json::to_value(&report).expect("report serializes"));
    for case in &report.results {
        let verdicts: Vec<String> = case
            .budgets
            .iter()
            .map(|b| {
                format!(
                    "β={} weak {:?}/{:?} strong {:?}/{:?}",
                    b.budget, b.weak, b.oracle_weak, b.strong, b.oracle_strong
                )
            })
            .collect();
        result = result.line(format!(
            "case {:3} {} states, {} players, {:28} {} {}",
            case.case,
            case.states,
            case.players,
            case.formula,
            verdicts.join("; "),
            if case.agree { "ok" } else { "DISAGREE" }
        ));
    }
    Ok(result.line(format!(
        "{} cases, {} disagreements between solver and oracle",
        report.cases, report.disagreements
    )))
}

fn run_oracle(command: &OracleCommand) -> Result<JobResult, InputError> {
    let (name, job) = match command {
        OracleCommand::CheckWeak { job, .. } => ("oracle check-weak", job),
        OracleCommand::CheckStrong { job, .. } => ("oracle check-strong", job),
        OracleCommand::NeLassos { job } => ("oracle ne-lassos", job),
        OracleCommand::Punish { job } => ("oracle punish", job),
    };
    let (game, spec) = load(&job.game).map_err(InputError)?;
    let cfg = oracle_config(job);
    let outcome = (|| -> anyhow::Result<JobResult> {
        Ok(match command {
            OracleCommand::CheckWeak { budget, .. } | OracleCommand::CheckStrong { budget, .. } => {
                let formula = formula_for(&job.spec, spec.clone())?;
                formula.check_alphabet(&game)?;
                let (yes, kind) = if matches!(command, OracleCommand::CheckWeak { .. }) {
                    (brute_force_weak(&game, &formula, *budget, &cfg)?, "weak")
                } else {
                    (brute_force_strong(&game, &formula, *budget, &cfg)?, "strong")
                };
                JobResult::new(name, Verdict::from_bool(yes))
                    .field("budget", json!(budget))
                    .field("spec", json!(formula.to_string()))
                    .line(format!(
                        "oracle: {kind} implementation within budget {budget}: {}",
                        if yes { "yes" } else { "no" }
                    ))
            }
            OracleCommand::NeLassos { .. } => {
                let lassos = brute_force_ne_lassos(&game, &cfg)?;
                let mut result = JobResult::new(name, Verdict::from_bool(!lassos.is_empty())).field(
                    "lassos",
                    json!(lassos.iter().map(|l| report::lasso_json(&game, l)).collect::<Vec<_>>()),
                );
                result = result.line(format!("{} equilibrium lassos", lassos.len()));
                for l in &lassos {
                    result = result.line(format!("  {}", report::lasso_text(&game, l)));
                }
                result
            }
            OracleCommand::Punish { .. } => {
                let table = brute_force_table(&game, &cfg)?;
                let mut result = JobResult::new(name, Verdict::Yes)
                    .field("punishment", report::punishment_json(&game, &table, None));
                for line in report::punishment_text(&game, &table) {
                    result = result.line(line);
                }
                result
            }
        })
    })();
    outcome.or_else(|e| classify(name, e))
}

fn dispatch(command: &Command) -> Result<JobResult, InputError> {
    match command {
        Command::CheckWeak(job) => decision("check-weak", Problem::Weak, job),
        Command::CheckStrong(job) => decision("check-strong", Problem::Strong, job),
        Command::OptWeak(job) => optimum("opt-weak", Problem::Weak, job),
        Command::OptStrong(job) => optimum("opt-strong", Problem::Strong, job),
        Command::ExactWeak(job) => exact("exact-weak", Problem::Weak, job),
        Command::ExactStrong(job) => exact("exact-strong", Problem::Strong, job),
        Command::UniqueWeak(job) => unique("unique-weak", Problem::Weak, job),
        Command::UniqueStrong(job) => unique("unique-strong", Problem::Strong, job),
        Command::Count { game, budget } => count(game, *budget),
        Command::Punish { game } => punish(game),
        Command::Selftest {
            seed,
            cases,
            max_budget,
        } => run_selftest(*seed, *cases, *max_budget),
        Command::Oracle(command) => run_oracle(command),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command) {
        Ok(result) => {
            let text = result.human_text();
            if cli.json {
                eprintln!("{text}");
                let doc = result.to_json(cli.timings);
                println!("{}", serde_json::to_string_pretty(&doc).expect("json serializes"));
            } else {
                println!("{text}");
            }
            ExitCode::from(result.verdict.exit_code() as u8)
        }
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
