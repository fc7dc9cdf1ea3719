//! Entities of the world state: domains, employees, clients, tasks, prestige, and the ledger.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::LedgerError;
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Training,
    Inference,
    Research,
    DataEngineering,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::Training, Domain::Inference, Domain::Research, Domain::DataEngineering];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Training => "training",
            Domain::Inference => "inference",
            Domain::Research => "research",
            Domain::DataEngineering => "data_engineering",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "training" => Ok(Domain::Training),
            "inference" => Ok(Domain::Inference),
            "research" => Ok(Domain::Research),
            "data_engineering" => Ok(Domain::DataEngineering),
            _ => Err("expected one of training, inference, research, data_engineering".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Junior,
    Mid,
    Senior,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Junior => "junior",
            Tier::Mid => "mid",
            Tier::Senior => "senior",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmployeeProfile {
    pub id: String,
    pub tier: Tier,
    pub monthly_salary: Money,
    /// Work units per hour, per domain.
    pub rates: BTreeMap<Domain, f64>,
    pub completed_tasks: u32,
}

impl EmployeeProfile {
    pub fn rate(&self, domain: Domain) -> f64 {
        self.rates.get(&domain).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOutcome {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientOutcome {
    pub task_id: String,
    pub outcome: TaskOutcome,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientProfile {
    pub id: String,
    pub trust: f64,
    /// Hidden: never rendered into observations.
    pub adversarial: bool,
    /// Hidden: multiplier applied to accepted work.
    pub scope_creep_factor: f64,
    pub completions: u32,
    pub failures: u32,
    pub history: Vec<ClientOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Market,
    Accepted,
    Dispatched,
    Completed,
    Failed,
    Cancelled,
}

impl TaskStatus {
    pub fn is_active(self) -> bool {
        matches!(self, TaskStatus::Accepted | TaskStatus::Dispatched)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskStatus::Market => "market",
            TaskStatus::Accepted => "accepted",
            TaskStatus::Dispatched => "dispatched",
            TaskStatus::Completed => "completed",
            TaskStatus::Failed => "failed",
            TaskStatus::Cancelled => "cancelled",
        }
    }
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "market" => Ok(TaskStatus::Market),
            "accepted" => Ok(TaskStatus::Accepted),
            "dispatched" => Ok(TaskStatus::Dispatched),
            "completed" => Ok(TaskStatus::Completed),
            "failed" => Ok(TaskStatus::Failed),
            "cancelled" => Ok(TaskStatus::Cancelled),
            _ => Err("expected one of accepted, dispatched, completed, failed, cancelled".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub client_id: String,
    /// Advertised work units per domain.
    pub domain_work: BTreeMap<Domain, u64>,
    /// Work actually required; fixed at acceptance.
    pub effective_work: BTreeMap<Domain, u64>,
    pub progress: BTreeMap<Domain, f64>,
    /// What the assignees would have produced had none of them been split across tasks.
    pub undivided_progress: BTreeMap<Domain, f64>,
    pub advertised_reward: Money,
    pub required_prestige: u32,
    pub required_trust: f64,
    pub status: TaskStatus,
    pub accepted_at: Option<Timestamp>,
    pub deadline: Option<Timestamp>,
    pub closed_at: Option<Timestamp>,
    pub assignees: BTreeSet<String>,
    /// Number of quarter checkpoints already passed (0..=4).
    pub checkpoints_reached: u8,
    /// Bumped whenever the checkpoint schedule is recomputed; older events are stale.
    pub schedule_version: u64,
    pub payout: Option<Money>,
    pub cancel_reason: Option<String>,
}

impl TaskRecord {
    pub fn domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.domain_work.keys().copied()
    }

    pub fn total_advertised_work(&self) -> u64 {
        self.domain_work.values().sum()
    }

    pub fn is_gated(&self) -> bool {
        self.required_trust > 0.0
    }

    pub fn progress_in(&self, domain: Domain) -> f64 {
        self.progress.get(&domain).copied().unwrap_or(0.0)
    }

    pub fn required_in(&self, domain: Domain) -> u64 {
        self.effective_work.get(&domain).copied().unwrap_or(0)
    }

    /// Completion fraction: the least-advanced domain decides.
    pub fn completion_fraction(&self) -> f64 {
        self.effective_work
            .iter()
            .map(|(d, &req)| if req == 0 { 1.0 } else { self.progress_in(*d) / req as f64 })
            .fold(1.0, f64::min)
    }

    pub fn is_finished(&self) -> bool {
        !self.effective_work.is_empty()
            && self.effective_work.iter().all(|(d, &req)| self.progress_in(*d) >= req as f64)
    }
}

/// Per-domain company prestige, clamped to the configured range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrestigeVector(pub BTreeMap<Domain, f64>);

impl PrestigeVector {
    pub fn uniform(level: f64) -> Self {
        PrestigeVector(Domain::ALL.iter().map(|&d| (d, level)).collect())
    }

    pub fn get(&self, domain: Domain) -> f64 {
        self.0.get(&domain).copied().unwrap_or(0.0)
    }

    pub fn adjust(&mut self, domain: Domain, delta: f64, min: f64, max: f64) -> f64 {
        let entry = self.0.entry(domain).or_insert(min);
        *entry = (*entry + delta).clamp(min, max);
        *entry
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerKind {
    InitialCapital,
    TaskReward,
    FailurePenalty,
    Payroll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub timestamp: Timestamp,
    pub kind: LedgerKind,
    pub amount: Money,
    /// Task id or payroll month (`YYYY-MM`).
    pub reference: String,
}

/// Recomputes funds from the transaction history.
pub fn funds_from_ledger(ledger: &[LedgerEntry]) -> Result<Money, LedgerError> {
    let first = ledger.first().ok_or(LedgerError::Empty)?;
    if first.kind != LedgerKind::InitialCapital {
        return Err(LedgerError::MissingInitialCapital);
    }
    Ok(ledger.iter().map(|e| e.amount).sum())
}
