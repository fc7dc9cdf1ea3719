//! Statistics over run logs.
//!
//! [`compute_stats`] turns one log into a [`RunStats`]; [`aggregate`] folds runs
//! that share a label into [`GroupSummary`] rows; [`tables::write_tables`] writes
//! the plot-ready CSV files and `summary.json`.
//!
//! Everything except adversarial attribution comes from the public log. Which
//! clients are adversarial is hidden, so that part needs the privileged world
//! (any snapshot of the same session, or the world regenerated from its seed).

mod aggregate;
pub mod tables;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::domain::LedgerKind;
use crate::engine::events::{Occurrence, TaskClosure, TaskFacts};
use crate::error::AnalyticsError;
use crate::money::Money;
use crate::session::{read_log, LogProblem, LogRecord, Record};
use crate::state::{Outcome, WorldState};

pub use aggregate::{aggregate, GroupSummary, MonthSpread, Spread};

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Adversarial,
    IncapableAssignment,
    Overcommitment,
    Other,
}

impl FailureCause {
    pub const ALL: [FailureCause; 4] =
        [FailureCause::Adversarial, FailureCause::IncapableAssignment, FailureCause::Overcommitment, FailureCause::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCause::Adversarial => "adversarial",
            FailureCause::IncapableAssignment => "incapable_assignment",
            FailureCause::Overcommitment => "overcommitment",
            FailureCause::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureHistogram {
    pub adversarial: usize,
    pub incapable_assignment: usize,
    pub overcommitment: usize,
    pub other: usize,
}

impl FailureHistogram {
    pub fn add(&mut self, cause: FailureCause) {
        *self.slot(cause) += 1;
    }

    pub fn get(&self, cause: FailureCause) -> usize {
        match cause {
            FailureCause::Adversarial => self.adversarial,
            FailureCause::IncapableAssignment => self.incapable_assignment,
            FailureCause::Overcommitment => self.overcommitment,
            FailureCause::Other => self.other,
        }
    }

    fn slot(&mut self, cause: FailureCause) -> &mut usize {
        match cause {
            FailureCause::Adversarial => &mut self.adversarial,
            FailureCause::IncapableAssignment => &mut self.incapable_assignment,
            FailureCause::Overcommitment => &mut self.overcommitment,
            FailureCause::Other => &mut self.other,
        }
    }

    pub fn total(&self) -> usize {
        FailureCause::ALL.iter().map(|&c| self.get(c)).sum()
    }
}

impl std::ops::AddAssign for FailureHistogram {
    fn add_assign(&mut self, other: Self) {
        for cause in FailureCause::ALL {
            *self.slot(cause) += other.get(cause);
        }
    }
}

/// Why a failed task failed. `adversarial` is `None` when client flags are unknown.
///
/// Precedence: adversarial client, then an assignment that could never finish in
/// the business hours between acceptance and deadline even at undivided rates,
/// then one whose undivided rates would have sufficed but whose split rates did not.
pub fn classify_failure(facts: &TaskFacts, adversarial: Option<bool>) -> FailureCause {
    if adversarial == Some(true) {
        return FailureCause::Adversarial;
    }
    if facts.assignee_rates.is_empty() {
        return FailureCause::Other;
    }
    let capable = facts.effective_work.iter().all(|(domain, &work)| {
        let rate: f64 = facts.assignee_rates.values().filter_map(|rates| rates.get(domain)).sum();
        rate * facts.budget_hours + EPS >= work as f64
    });
    if !capable {
        return FailureCause::IncapableAssignment;
    }
    let undivided_done = facts
        .effective_work
        .iter()
        .all(|(domain, &work)| facts.undivided_progress.get(domain).copied().unwrap_or(0.0) + EPS >= work as f64);
    if undivided_done {
        FailureCause::Overcommitment
    } else {
        FailureCause::Other
    }
}

/// Funds right after one payroll.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthPoint {
    pub month: String,
    pub at: Timestamp,
    pub funds_cents: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientTrust {
    pub trust: f64,
    /// Known only with the privileged world.
    pub adversarial: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub session_id: String,
    pub seed: u64,
    pub context_window: usize,
    pub outcome: Option<Outcome>,
    /// The log ends before `episode_end`.
    pub partial: bool,
    pub turns: u64,
    pub final_funds_cents: Money,
    pub funds_trajectory: Vec<MonthPoint>,
    pub bankrupt: bool,

    pub tasks_accepted: usize,
    pub tasks_completed: usize,
    pub tasks_failed: usize,
    pub tasks_cancelled: usize,
    pub adversarial_accepted: Option<usize>,
    pub adversarial_ratio: Option<f64>,
    pub trust_gated_completed: usize,
    pub trust_gated_ratio: Option<f64>,
    /// Empty for logs that end before `episode_end`.
    pub final_trust: BTreeMap<String, ClientTrust>,
    pub failures: FailureHistogram,
    pub failure_causes: BTreeMap<String, FailureCause>,

    pub scratchpad_writes: usize,
    pub scratchpad_per_100_turns: f64,
    pub inspects: usize,
    pub accepts_issued: usize,
    pub inspect_accept_ratio: Option<f64>,
    pub mean_active_tasks: f64,
    pub commands: usize,
    pub commands_per_turn: f64,
    pub command_counts: BTreeMap<String, usize>,

    pub revenue_cents: Money,
    pub cost_usd: Option<f64>,
    pub tokens: Option<u64>,
    pub wall_minutes: f64,
    /// Revenue in dollars per dollar of agent cost.
    pub revenue_per_cost_dollar: Option<f64>,
}

impl RunStats {
    /// Replaces the cost figure, e.g. with one billed outside the harness.
    pub fn with_cost_usd(mut self, cost: f64) -> Self {
        self.cost_usd = Some(cost);
        self.revenue_per_cost_dollar = revenue_per_cost(self.revenue_cents, Some(cost));
        self
    }
}

fn revenue_per_cost(revenue: Money, cost: Option<f64>) -> Option<f64> {
    cost.filter(|&c| c > 0.0).map(|c| revenue.as_dollars() / c)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// A run log as read from disk.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
    /// Set when a torn or malformed tail was skipped.
    pub truncated: Option<String>,
}

/// Reads a run log, keeping the well-formed prefix of a torn file.
pub fn load_run(path: &Path) -> Result<RunLog, AnalyticsError> {
    let read = |message: String| AnalyticsError::Read { path: path.display().to_string(), message };
    let contents = read_log(path).map_err(|e| read(e.to_string()))?;
    match contents.problem {
        Some(LogProblem::Gap { expected, found }) => Err(AnalyticsError::Gap { expected, found }),
        Some(problem @ LogProblem::Malformed { .. }) => {
            Ok(RunLog { records: contents.records, truncated: Some(problem.to_string()) })
        }
        None => Ok(RunLog { records: contents.records, truncated: None }),
    }
}

/// Recomputes every statistic from a gap-free record sequence.
pub fn compute_stats(records: &[LogRecord], privileged: Option<&WorldState>) -> Result<RunStats, AnalyticsError> {
    for (i, r) in records.iter().enumerate() {
        if r.seq != i as u64 {
            return Err(AnalyticsError::Gap { expected: i as u64, found: r.seq });
        }
    }
    let Some(Record::Header { session_id, seed, config, start, .. }) = records.first().map(|r| &r.body) else {
        return Err(AnalyticsError::MissingHeader);
    };
    let adversarial = |client: &str| privileged.and_then(|w| w.client(client)).map(|c| c.adversarial);

    let mut turns = 0;
    let mut funds = Money::ZERO;
    let mut revenue = Money::ZERO;
    let mut trajectory = Vec::new();
    let mut bankrupt = false;
    let mut outcome = None;
    let mut final_trust = BTreeMap::new();
    let mut accepted: Vec<(String, String, Timestamp)> = Vec::new();
    let mut closed: BTreeMap<String, Timestamp> = BTreeMap::new();
    let (mut completed, mut failed, mut cancelled, mut gated) = (0, 0, 0, 0);
    let mut failures = FailureHistogram::default();
    let mut failure_causes = BTreeMap::new();
    let mut scratchpad_writes = 0;
    let mut command_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut commands = 0;
    let mut costs = Vec::new();
    let mut tokens = Vec::new();
    let mut wall_ms = 0u64;
    let mut last_seen = *start;

    for record in &records[1..] {
        match &record.body {
            Record::Header { .. } => {}
            Record::Turn { turn, status } => {
                turns = turns.max(*turn);
                last_seen = last_seen.max(status.timestamp);
            }
            Record::Command { verb, forced: false, .. } => {
                commands += 1;
                if let Some(verb) = verb {
                    *command_counts.entry(verb.clone()).or_default() += 1;
                }
            }
            Record::Command { forced: true, .. } => {}
            Record::Event(entry) => {
                last_seen = last_seen.max(entry.at);
                match &entry.event {
                    Occurrence::TaskAccepted { task_id, client_id, .. } => {
                        accepted.push((task_id.clone(), client_id.clone(), entry.at));
                    }
                    Occurrence::Payroll { month, funds_after_cents, .. } => trajectory.push(MonthPoint {
                        month: month.clone(),
                        at: entry.at,
                        funds_cents: *funds_after_cents,
                    }),
                    Occurrence::Bankrupt { .. } => bankrupt = true,
                    _ => {}
                }
            }
            Record::Ledger(entry) => {
                last_seen = last_seen.max(entry.timestamp);
                funds += entry.amount;
                if entry.kind == LedgerKind::TaskReward {
                    revenue += entry.amount;
                }
            }
            Record::TaskClosed(facts) => {
                closed.insert(facts.task_id.clone(), facts.closed_at);
                match facts.outcome {
                    TaskClosure::Completed => {
                        completed += 1;
                        if facts.required_trust > 0.0 {
                            gated += 1;
                        }
                    }
                    TaskClosure::Failed => {
                        failed += 1;
                        let cause = classify_failure(facts, adversarial(&facts.client_id));
                        failures.add(cause);
                        failure_causes.insert(facts.task_id.clone(), cause);
                    }
                    TaskClosure::Cancelled => cancelled += 1,
                }
            }
            Record::Scratchpad { .. } => scratchpad_writes += 1,
            Record::TurnEnd { .. } => {}
            Record::Telemetry { wall_ms: ms, agent, .. } => {
                wall_ms += ms;
                costs.extend(agent.cost_usd);
                if agent.input_tokens.is_some() || agent.output_tokens.is_some() {
                    tokens.push(agent.input_tokens.unwrap_or(0) + agent.output_tokens.unwrap_or(0));
                }
            }
            Record::EpisodeEnd { outcome: o, trust, .. } => {
                outcome = Some(*o);
                bankrupt |= *o == Outcome::Bankrupt;
                final_trust = trust
                    .iter()
                    .map(|(id, &t)| (id.clone(), ClientTrust { trust: t, adversarial: adversarial(id) }))
                    .collect();
            }
        }
    }

    let window = (last_seen - *start).num_minutes();
    let busy: i64 = accepted
        .iter()
                .map(|(id, _, at)| (closed.get(id).copied().unwrap_or(last_seen).min(last_seen) - *at).num_minutes().max(0))
        .sum();
    let mean_active_tasks = if window > 0 { busy as f64 / window as f64 } else { 0.0 };

    let adversarial_accepted =
        privileged.map(|_| accepted.iter().filter(|(_, client, _)| adversarial(client) == Some(true)).count());
    let inspects = command_counts.get("task inspect").copied().unwrap_or(0);
    let accepts_issued = command_counts.get("task accept").copied().unwrap_or(0);
    let cost_usd = (!costs.is_empty()).then(|| costs.iter().sum());
    let per_turn = |n: usize| if turns > 0 { n as f64 / turns as f64 } else { 0.0 };

    Ok(RunStats {
        session_id: session_id.clone(),
        seed: *seed,
        context_window: config.memory.context_window,
        outcome,
        partial: outcome.is_none(),
        turns,
        final_funds_cents: funds,
        funds_trajectory: trajectory,
        bankrupt,
        tasks_accepted: accepted.len(),
        tasks_completed: completed,
        tasks_failed: failed,
        tasks_cancelled: cancelled,
        adversarial_accepted,
        adversarial_ratio: adversarial_accepted.and_then(|a| ratio(a, accepted.len())),
        trust_gated_completed: gated,
        trust_gated_ratio: ratio(gated, completed),
        final_trust,
        failures,
        failure_causes,
        scratchpad_writes,
        scratchpad_per_100_turns: 100.0 * per_turn(scratchpad_writes),
        inspects,
        accepts_issued,
        inspect_accept_ratio: ratio(inspects, accepts_issued),
        mean_active_tasks,
        commands,
        commands_per_turn: per_turn(commands),
        command_counts,
        revenue_cents: revenue,
        cost_usd,
        tokens: (!tokens.is_empty()).then(|| tokens.iter().sum()),
        wall_minutes: wall_ms as f64 / 60_000.0,
        revenue_per_cost_dollar: revenue_per_cost(revenue, cost_usd),
    })
}

/// A run's statistics under the label it is grouped by.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledRun {
    pub label: String,
    pub stats: RunStats,
    pub scratchpad: Vec<ScratchpadEntry>,
}

impl LabelledRun {
    /// Reads and summarizes one log. Without `label` the session id is used.
    pub fn from_log(path: &Path, label: Option<&str>, privileged: Option<&WorldState>) -> Result<Self, AnalyticsError> {
        let log = load_run(path)?;
        let mut stats = compute_stats(&log.records, privileged)?;
        stats.partial |= log.truncated.is_some();
        Ok(LabelledRun {
            label: label.map_or_else(|| stats.session_id.clone(), str::to_string),
            scratchpad: scratchpad_timeline(&log.records),
            stats,
        })
    }
}

/// One scratchpad change, for manual labelling of note-taking strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScratchpadEntry {
    pub turn: u64,
    pub at: Timestamp,
    pub op: crate::session::ScratchpadOp,
    pub bytes: usize,
    pub content: String,
}

pub fn scratchpad_timeline(records: &[LogRecord]) -> Vec<ScratchpadEntry> {
    records
        .iter()
        .filter_map(|r| match &r.body {
            Record::Scratchpad { turn, at, op, content, bytes } => {
                Some(ScratchpadEntry { turn: *turn, at: *at, op: *op, bytes: *bytes, content: content.clone() })
            }
            _ => None,
        })
        .collect()
}
