//! Plot-ready output. Every file has a header row; money is in cents, ratios are
//! fractions, and an empty cell means "not available" (no cost telemetry, no
//! privileged world, or a zero denominator).
//!
//! | file                         | one row per            | columns |
//! |------------------------------|------------------------|---------|
//! | `runs.csv`                   | run                    | every [`RunStats`] scalar |
//! | `funds_trajectory.csv`       | run × payroll month    | label, seed, month, at, funds_cents |
//! | `funds_trajectory_mean.csv`  | group × month          | label, month, n, mean, sd, min, max |
//! | `leaderboard.csv`            | group, ranked          | rank, label, runs, final funds spread, bankrupt (`k/n`), cost, tokens, wall minutes |
//! | `trust_gated.csv`            | group                  | label, n, mean, sd, min, max |
//! | `final_trust.csv`            | run × client           | label, seed, client_id, adversarial, trust |
//! | `adversarial_acceptance.csv` | group                  | label, n, mean, sd, min, max |
//! | `failure_causes.csv`         | group × cause          | label, cause, count, share |
//! | `cost_efficiency.csv`        | group                  | label, n, mean, sd, min, max (revenue dollars per cost dollar) |
//! | `behaviour.csv`              | group                  | label, sp_per_100_turns, inspect_accept_ratio, mean_active_tasks, commands_per_turn |
//! | `command_usage.csv`          | group × verb           | label, verb, mean_calls_per_run |
//! | `context_ablation.csv`       | group × context window | label, context_window, runs, final funds mean/min/max |
//! | `scratchpad_timeline.csv`    | scratchpad change      | label, seed, turn, at, op, bytes, content |
//!
//! `summary.json` holds the full [`RunStats`] and [`GroupSummary`] values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{FailureCause, GroupSummary, LabelledRun, RunStats, Spread};
use crate::error::AnalyticsError;
use crate::session::ScratchpadOp;

pub const FILES: [&str; 15] = [
    "runs.csv",
    "funds_trajectory.csv",
    "funds_trajectory_mean.csv",
    "leaderboard.csv",
    "trust_gated.csv",
    "final_trust.csv",
    "adversarial_acceptance.csv",
    "failure_causes.csv",
    "cost_efficiency.csv",
    "behaviour.csv",
    "command_usage.csv",
    "context_ablation.csv",
    "scratchpad_timeline.csv",
    "summary.json",
    "README.txt",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

struct Table {
    path: String,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, AnalyticsError> {
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
        let mut table = Table { path: path.display().to_string(), writer };
        table.row(header.iter().map(|h| h.to_string()))?;
        Ok(table)
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) -> Result<(), AnalyticsError> {
        let cells: Vec<String> = cells.into_iter().collect();
        self.writer
            .write_record(&cells)
            .map_err(|e| AnalyticsError::Write { path: self.path.clone(), message: e.to_string() })
    }

    fn finish(mut self) -> Result<(), AnalyticsError> {
        self.writer.flush().map_err(|e| AnalyticsError::Write { path: self.path.clone(), message: e.to_string() })
    }
}

fn write_err(path: &Path, e: impl ToString) -> AnalyticsError {
    AnalyticsError::Write { path: path.display().to_string(), message: e.to_string() }
}

fn spread_cells(s: Option<&Spread>) -> Vec<String> {
    match s {
        Some(s) => vec![s.n.to_string(), s.mean.to_string(), s.sd.to_string(), s.min.to_string(), s.max.to_string()],
        None => vec![String::new(); 5],
    }
}

const SPREAD_HEADER: [&str; 6] = ["label", "n", "mean", "sd", "min", "max"];

fn spread_table(
    dir: &Path,
    name: &str,
    groups: &[GroupSummary],
    f: impl Fn(&GroupSummary) -> Option<&Spread>,
) -> Result<(), AnalyticsError> {
    let mut t = Table::create(dir, name, &SPREAD_HEADER)?;
    for g in groups {
        t.row(std::iter::once(g.label.clone()).chain(spread_cells(f(g))))?;
    }
    t.finish()
}

const RUN_HEADER: [&str; 35] = [
    "label",
    "session_id",
    "seed",
    "context_window",
    "outcome",
    "partial",
    "turns",
    "final_funds_cents",
    "bankrupt",
    "tasks_accepted",
    "tasks_completed",
    "tasks_failed",
    "tasks_cancelled",
    "adversarial_accepted",
    "adversarial_ratio",
    "trust_gated_completed",
    "trust_gated_ratio",
    "failures_adversarial",
    "failures_incapable_assignment",
    "failures_overcommitment",
    "failures_other",
    "scratchpad_writes",
    "scratchpad_per_100_turns",
    "inspects",
    "accepts_issued",
    "inspect_accept_ratio",
    "mean_active_tasks",
    "commands",
    "commands_per_turn",
    "revenue_cents",
    "cost_usd",
    "tokens",
    "wall_minutes",
    "revenue_per_cost_dollar",
    "final_funds_dollars",
];

fn run_row(label: &str, s: &RunStats) -> Vec<String> {
    vec![
        label.to_string(),
        s.session_id.clone(),
        s.seed.to_string(),
        s.context_window.to_string(),
        opt(s.outcome),
        s.partial.to_string(),
        s.turns.to_string(),
        s.final_funds_cents.cents().to_string(),
        s.bankrupt.to_string(),
        s.tasks_accepted.to_string(),
        s.tasks_completed.to_string(),
        s.tasks_failed.to_string(),
        s.tasks_cancelled.to_string(),
        opt(s.adversarial_accepted),
        opt(s.adversarial_ratio),
        s.trust_gated_completed.to_string(),
        opt(s.trust_gated_ratio),
        s.failures.adversarial.to_string(),
        s.failures.incapable_assignment.to_string(),
        s.failures.overcommitment.to_string(),
        s.failures.other.to_string(),
        s.scratchpad_writes.to_string(),
        s.scratchpad_per_100_turns.to_string(),
        s.inspects.to_string(),
        s.accepts_issued.to_string(),
        opt(s.inspect_accept_ratio),
        s.mean_active_tasks.to_string(),
        s.commands.to_string(),
        s.commands_per_turn.to_string(),
        s.revenue_cents.cents().to_string(),
        opt(s.cost_usd),
        opt(s.tokens),
        s.wall_minutes.to_string(),
        opt(s.revenue_per_cost_dollar),
        s.final_funds_cents.as_dollars().to_string(),
    ]
}

#[derive(Serialize)]
struct Summary<'a> {
    runs: Vec<SummaryRun<'a>>,
    groups: &'a [GroupSummary],
}

#[derive(Serialize)]
struct SummaryRun<'a> {
    label: &'a str,
    #[serde(flatten)]
    stats: &'a RunStats,
}

/// Writes every table for `runs` (already summarized into `groups`) into `dir`.
pub fn write_tables(dir: &Path, runs: &[LabelledRun], groups: &[GroupSummary]) -> Result<(), AnalyticsError> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;

    let mut t = Table::create(dir, "runs.csv", &RUN_HEADER)?;
    for r in runs {
        t.row(run_row(&r.label, &r.stats))?;
    }
    t.finish()?;

    let mut t = Table::create(dir, "funds_trajectory.csv", &["label", "seed", "month", "at", "funds_cents"])?;
    for r in runs {
        for p in &r.stats.funds_trajectory {
            t.row([
                r.label.clone(),
                r.stats.seed.to_string(),
                p.month.clone(),
                p.at.format("%Y-%m-%dT%H:%M").to_string(),
                p.funds_cents.cents().to_string(),
            ])?;
        }
    }
    t.finish()?;

    let mut t = Table::create(dir, "funds_trajectory_mean.csv", &["label", "month", "n", "mean", "sd", "min", "max"])?;
    for g in groups {
        for m in &g.trajectory {
            t.row([g.label.clone(), m.month.clone()].into_iter().chain(spread_cells(Some(&m.funds_cents))))?;
        }
    }
    t.finish()?;

    let mut t = Table::create(
        dir,
        "leaderboard.csv",
        &[
            "rank",
            "label",
            "runs",
            "final_funds_mean_cents",
            "final_funds_sd_cents",
            "final_funds_min_cents",
            "final_funds_max_cents",
            "bankrupt",
            "cost_usd_mean",
            "tokens_mean",
            "wall_minutes_mean",
            "partial_runs",
        ],
    )?;
    for g in groups {
        let f = &g.final_funds_cents;
        t.row([
            g.rank.to_string(),
            g.label.clone(),
            g.runs.to_string(),
            f.mean.to_string(),
            f.sd.to_string(),
            f.min.to_string(),
            f.max.to_string(),
            g.bankrupt.clone(),
            opt(g.cost_usd.map(|s| s.mean)),
            opt(g.tokens.map(|s| s.mean)),
            g.wall_minutes.mean.to_string(),
            g.partial_runs.to_string(),
        ])?;
    }
    t.finish()?;

    spread_table(dir, "trust_gated.csv", groups, |g| g.trust_gated_ratio.as_ref())?;
    spread_table(dir, "adversarial_acceptance.csv", groups, |g| g.adversarial_ratio.as_ref())?;
    spread_table(dir, "cost_efficiency.csv", groups, |g| g.revenue_per_cost_dollar.as_ref())?;

    let mut t = Table::create(dir, "final_trust.csv", &["label", "seed", "client_id", "adversarial", "trust"])?;
    for r in runs {
        for (client, c) in &r.stats.final_trust {
            t.row([r.label.clone(), r.stats.seed.to_string(), client.clone(), opt(c.adversarial), c.trust.to_string()])?;
        }
    }
    t.finish()?;

    let mut t = Table::create(dir, "failure_causes.csv", &["label", "cause", "count", "share"])?;
    for g in groups {
        let total = g.failures.total();
        for cause in FailureCause::ALL {
            let count = g.failures.get(cause);
            let share = (total > 0).then(|| count as f64 / total as f64);
            t.row([g.label.clone(), cause.as_str().to_string(), count.to_string(), opt(share)])?;
        }
    }
    t.finish()?;

    let mut t = Table::create(
        dir,
        "behaviour.csv",
        &["label", "sp_per_100_turns", "inspect_accept_ratio", "mean_active_tasks", "commands_per_turn"],
    )?;
    for g in groups {
        t.row([
            g.label.clone(),
            g.scratchpad_per_100_turns.mean.to_string(),
            opt(g.inspect_accept_ratio.map(|s| s.mean)),
            g.mean_active_tasks.mean.to_string(),
            g.commands_per_turn.mean.to_string(),
        ])?;
    }
    t.finish()?;

    let mut t = Table::create(dir, "command_usage.csv", &["label", "verb", "mean_calls_per_run"])?;
    for g in groups {
        for (verb, s) in &g.command_counts {
            t.row([g.label.clone(), verb.clone(), s.mean.to_string()])?;
        }
    }
    t.finish()?;

    let mut by_window: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    for r in runs {
        by_window.entry((&r.label, r.stats.context_window)).or_default().push(r.stats.final_funds_cents.cents() as f64);
    }
    let mut t = Table::create(
        dir,
        "context_ablation.csv",
        &["label", "context_window", "runs", "final_funds_mean_cents", "final_funds_min_cents", "final_funds_max_cents"],
    )?;
    for ((label, k), values) in by_window {
        let s = Spread::of(&values).expect("non-empty");
        t.row([label.to_string(), k.to_string(), s.n.to_string(), s.mean.to_string(), s.min.to_string(), s.max.to_string()])?;
    }
    t.finish()?;

    let mut t = Table::create(dir, "scratchpad_timeline.csv", &["label", "seed", "turn", "at", "op", "bytes", "content"])?;
    for r in runs {
        for e in &r.scratchpad {
            t.row([
                r.label.clone(),
                r.stats.seed.to_string(),
                e.turn.to_string(),
                e.at.format("%Y-%m-%dT%H:%M").to_string(),
                match e.op {
                    ScratchpadOp::Write => "write".to_string(),
                    ScratchpadOp::Append => "append".to_string(),
                },
                e.bytes.to_string(),
                e.content.clone(),
            ])?;
        }
    }
    t.finish()?;

    let summary = Summary {
        runs: runs.iter().map(|r| SummaryRun { label: &r.label, stats: &r.stats }).collect(),
        groups,
    };
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text).map_err(|e| write_err(&path, e))?;

    let path = dir.join("README.txt");
    fs::write(&path, README).map_err(|e| write_err(&path, e))
}

const README: &str = "Tables written by `yc-bench stats`. Money is in cents, ratios are fractions,
and an empty cell means the value is unavailable. Groups are runs sharing a label;
spreads use the sample standard deviation (0 for a single run).

runs.csv                    one row per run
funds_trajectory.csv        post-payroll funds per run and month
funds_trajectory_mean.csv   the same averaged per label
leaderboard.csv             labels ranked by mean final funds; bankrupt is k/n
trust_gated.csv             share of completed tasks that required client trust
final_trust.csv             final trust per client (adversarial known only with the privileged world)
adversarial_acceptance.csv  share of accepted tasks issued by adversarial clients
failure_causes.csv          failed tasks by cause
cost_efficiency.csv         task revenue in dollars per dollar of agent cost
behaviour.csv               scratchpad writes per 100 turns, inspect/accept, mean active tasks, commands per turn
command_usage.csv           mean calls per run by command
context_ablation.csv        final funds by label and context window
scratchpad_timeline.csv     every scratchpad change, for manual labelling
summary.json                everything above as structured data
";
