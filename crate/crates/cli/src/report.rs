//! Human-readable and JSON renderings of results.

use std::collections::BTreeMap;
use std::time::Duration;

use eqdesign_core::lasso::{payoffs, Step};
use eqdesign_core::mpg::PunishmentTable;
use eqdesign_core::rational::format as fmt_rational;
use eqdesign_core::scheme::apply_subsidy;
use eqdesign_core::solver::{Counters, Witness};
use eqdesign_core::{Game, LassoPath, Rational, SubsidyScheme};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    ResourceLimit,
}

impl Verdict {
    pub fn from_bool(yes: bool) -> Self {
        if yes {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::ResourceLimit => "resource-limit",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Yes => 0,
            Verdict::No => 1,
            Verdict::ResourceLimit => 3,
        }
    }
}

/// The outcome of one command: a verdict, an optional witness and
/// command-specific fields, plus counters and phase timings.
pub struct JobResult {
    pub command: String,
    pub verdict: Verdict,
    pub fields: Map<String, Value>,
    pub human: Vec<String>,
    pub counters: Option<Counters>,
    pub timings: Vec<(&'static str, Duration)>,
}

impl JobResult {
    pub fn new(command: &str, verdict: Verdict) -> Self {
        JobResult {
            command: command.to_string(),
            verdict,
            fields: Map::new(),
            human: Vec::new(),
            counters: None,
            timings: Vec::new(),
        }
    }

    pub fn field(mut self, key: &str, value: Value) -> Self {
        self.fields.insert(key.to_string(), value);
        self
    }

    pub fn line(mut self, text: impl Into<String>) -> Self {
        self.human.push(text.into());
        self
    }

    pub fn to_json(&self, with_timings: bool) -> Value {
        let mut doc = self.fields.clone();
        doc.insert("schema".into(), json!(1));
        doc.insert("command".into(), json!(self.command));
        doc.insert("verdict".into(), json!(self.verdict.as_str()));
        if let Some(c) = &self.counters {
            doc.insert("counters".into(), counters_json(c));
        }
        if with_timings {
            let timings: Map<String, Value> = self
                .timings
                .iter()
                .map(|(phase, d)| (format!("{phase}_ms"), json!(d.as_secs_f64() * 1000.0)))
                .collect();
            doc.insert("timings".into(), Value::Object(timings));
        }
        Value::Object(doc)
    }

    pub fn human_text(&self) -> String {
        let mut out = self.human.join("\n");
        if let Some(c) = &self.counters {
            out.push_str(&format!(
                "\nexamined {} schemes, {} threshold vectors, {} linear programs",
                c.schemes_examined, c.grid_points, c.lps_solved
            ));
        }
        if !self.timings.is_empty() {
            let parts: Vec<String> = self
                .timings
                .iter()
                .map(|(phase, d)| format!("{phase} {:.1} ms", d.as_secs_f64() * 1000.0))
                .collect();
            out.push_str(&format!("\ntime: {}", parts.join(", ")));
        }
        out
    }
}

pub fn counters_json(c: &Counters) -> Value {
    json!({
        "schemes_examined": c.schemes_examined,
        "grid_points": c.grid_points,
        "lps_solved": c.lps_solved,
    })
}

pub fn rational_json(v: &Rational) -> Value {
    json!(fmt_rational(v))
}

fn per_player(game: &Game, values: &[Rational]) -> Value {
    let map: BTreeMap<String, Value> = values
        .iter()
        .enumerate()
        .map(|(p, v)| (game.arena().player_name(p).to_string(), rational_json(v)))
        .collect();
    json!(map)
}

pub fn scheme_json(game: &Game, scheme: &SubsidyScheme) -> Value {
    let arena = game.arena();
    let mut cells = Vec::new();
    for p in 0..game.num_players() {
        for s in 0..game.num_states() {
            let v = scheme.get(p, s);
            if v > 0 {
                cells.push(json!({
                    "player": arena.player_name(p),
                    "state": arena.state_name(s),
                    "subsidy": v,
                }));
            }
        }
    }
    json!({ "cost": scheme.cost(), "subsidies": cells })
}

pub fn scheme_text(game: &Game, scheme: &SubsidyScheme) -> String {
    let arena = game.arena();
    let mut parts = Vec::new();
    for p in 0..game.num_players() {
        for s in 0..game.num_states() {
            let v = scheme.get(p, s);
            if v > 0 {
                parts.push(format!("κ_{}({}) = {v}", arena.player_name(p), arena.state_name(s)));
            }
        }
    }
    if parts.is_empty() {
        "zero scheme (cost 0)".to_string()
    } else {
        format!("{} (cost {})", parts.join(", "), scheme.cost())
    }
}

fn step_json(game: &Game, step: &Step) -> Value {
    let arena = game.arena();
    let profile: BTreeMap<String, String> = step
        .profile
        .iter()
        .enumerate()
        .map(|(p, &a)| {
            (
                arena.player_name(p).to_string(),
                arena.actions(step.state, p)[a].clone(),
            )
        })
        .collect();
    json!({ "state": arena.state_name(step.state), "profile": profile })
}

pub fn lasso_json(game: &Game, path: &LassoPath) -> Value {
    json!({
        "prefix": path.prefix.iter().map(|s| step_json(game, s)).collect::<Vec<_>>(),
        "cycle": path.cycle.iter().map(|s| step_json(game, s)).collect::<Vec<_>>(),
    })
}

pub fn lasso_text(game: &Game, path: &LassoPath) -> String {
    let arena = game.arena();
    let show = |steps: &[Step]| -> String {
        steps
            .iter()
            .map(|s| {
                format!(
                    "{} {}",
                    arena.state_name(s.state),
                    arena.describe_profile(s.state, &s.profile)
                )
            })
            .collect::<Vec<_>>()
            .join(" → ")
    };
    if path.prefix.is_empty() {
        format!("({})^ω", show(&path.cycle))
    } else {
        format!("{} → ({})^ω", show(&path.prefix), show(&path.cycle))
    }
}

pub fn witness_json(game: &Game, w: &Witness) -> Value {
    let sub = apply_subsidy(game, &w.scheme);
    let mut doc = json!({
        "scheme": scheme_json(game, &w.scheme),
        "z": per_player(game, &w.z),
        "lasso": lasso_json(game, &w.path),
        "payoffs": per_player(game, &payoffs(&w.path, &sub)),
    });
    if let Some(c) = &w.certificate {
        doc["certificate"] = json!({
            "grid_points": c.grid_points,
            "negation_searches": c.negation_searches,
        });
    }
    doc
}

pub fn witness_text(game: &Game, w: &Witness) -> Vec<String> {
    let sub = apply_subsidy(game, &w.scheme);
    let arena = game.arena();
    let show = |values: &[Rational]| -> String {
        values
            .iter()
            .enumerate()
            .map(|(p, v)| format!("{}: {}", arena.player_name(p), fmt_rational(v)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut lines = vec![
        format!("scheme: {}", scheme_text(game, &w.scheme)),
        format!("thresholds z: {}", show(&w.z)),
        format!("lasso: {}", lasso_text(game, &w.path)),
        format!("payoffs: {}", show(&payoffs(&w.path, &sub))),
    ];
    if let Some(c) = &w.certificate {
        lines.push(format!(
            "no violating equilibrium path at any of {} threshold vectors ({} searches)",
            c.grid_points, c.negation_searches
        ));
    }
    lines
}

pub fn punishment_json(game: &Game, table: &[Vec<Rational>], coalition: Option<&PunishmentTable>) -> Value {
    let arena = game.arena();
    let mut rows = Vec::new();
    for (p, row) in table.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            let mut entry = json!({
                "player": arena.player_name(p),
                "state": arena.state_name(s),
                "value": rational_json(v),
            });
            if let Some(t) = coalition {
                let actions = t.coalition_action(p, s);
                let others = (0..game.num_players()).filter(|&q| q != p);
                let profile: BTreeMap<String, String> = others
                    .zip(actions)
                    .map(|(q, &a)| (arena.player_name(q).to_string(), arena.actions(s, q)[a].clone()))
                    .collect();
                entry["coalition"] = json!(profile);
            }
            rows.push(entry);
        }
    }
    json!(rows)
}

pub fn punishment_text(game: &Game, table: &[Vec<Rational>]) -> Vec<String> {
    let arena = game.arena();
    let mut lines = Vec::new();
    for (p, row) in table.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            lines.push(format!(
                "pun_{}({}) = {}",
                arena.player_name(p),
                arena.state_name(s),
                fmt_rational(v)
            ));
        }
    }
    lines
}
