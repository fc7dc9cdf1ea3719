//! Scheduled simulation events and the occurrences they produce.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::domain::{Domain, TaskOutcome};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Monthly payroll; `month` is `YYYY-MM`.
    Payroll { month: String },
    Deadline { task_id: String },
    /// Progress crossing `quarter`/4 of the effective work.
    Checkpoint { task_id: String, quarter: u8, version: u64 },
    HorizonEnd,
}

impl EventKind {
    /// Tie-break order for events at the same instant.
    pub fn priority(&self) -> u8 {
        match self {
            EventKind::Payroll { .. } => 0,
            EventKind::Deadline { .. } => 1,
            EventKind::Checkpoint { .. } => 2,
            EventKind::HorizonEnd => 3,
        }
    }

    pub fn task_id(&self) -> Option<&str> {
        match self {
            EventKind::Deadline { task_id } | EventKind::Checkpoint { task_id, .. } => Some(task_id),
            _ => None,
        }
    }

    fn detail(&self) -> (&str, u8, u64) {
        match self {
            EventKind::Payroll { month } => (month, 0, 0),
            EventKind::Deadline { task_id } => (task_id, 0, 0),
            EventKind::Checkpoint { task_id, quarter, version } => (task_id, *quarter, *version),
            EventKind::HorizonEnd => ("", 0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledEvent {
    pub at: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Ord for ScheduledEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.at
            .cmp(&other.at)
            .then(self.kind.priority().cmp(&other.kind.priority()))
            .then_with(|| self.kind.detail().cmp(&other.kind.detail()))
    }
}

impl PartialOrd for ScheduledEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered pending events.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventQueue(BTreeSet<ScheduledEvent>);

impl EventQueue {
    pub fn push(&mut self, at: Timestamp, kind: EventKind) {
        self.0.insert(ScheduledEvent { at, kind });
    }

    pub fn remove(&mut self, event: &ScheduledEvent) -> bool {
        self.0.remove(event)
    }

    pub fn pop(&mut self) -> Option<ScheduledEvent> {
        self.0.pop_first()
    }

    pub fn peek(&self) -> Option<&ScheduledEvent> {
        self.0.first()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScheduledEvent> {
        self.0.iter()
    }
}

/// Something that happened, as reported to the agent and the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Occurrence {
    TaskAccepted { task_id: String, client_id: String, deadline: Timestamp },
    Checkpoint { task_id: String, percent: u8 },
    TaskCompleted {
        task_id: String,
        client_id: String,
        payout_cents: Money,
        /// Calendar hours left before the deadline.
        deadline_margin_hours: f64,
    },
    TaskFailed {
        task_id: String,
        client_id: String,
        penalty_cents: Money,
        percent_complete: f64,
    },
    TaskCancelled { task_id: String, reason: String },
    SalaryBump { employee_id: String, old_salary_cents: Money, new_salary_cents: Money },
    Payroll { month: String, amount_cents: Money, funds_after_cents: Money },
    Bankrupt { funds_cents: Money },
    HorizonReached { funds_cents: Money },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestEntry {
    pub at: Timestamp,
    #[serde(flatten)]
    pub event: Occurrence,
}

/// Everything needed to judge why a task ended the way it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFacts {
    pub task_id: String,
    pub client_id: String,
    pub outcome: TaskClosure,
    pub required_trust: f64,
    pub accepted_at: Timestamp,
    pub deadline: Timestamp,
    pub closed_at: Timestamp,
    pub effective_work: BTreeMap<Domain, u64>,
    pub progress: BTreeMap<Domain, f64>,
    pub undivided_progress: BTreeMap<Domain, f64>,
    /// Undivided per-domain rates of the assignees when the task closed.
    pub assignee_rates: BTreeMap<String, BTreeMap<Domain, f64>>,
    /// Business hours between acceptance and deadline.
    pub budget_hours: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskClosure {
    Completed,
    Failed,
    Cancelled,
}

impl From<TaskOutcome> for TaskClosure {
    fn from(o: TaskOutcome) -> Self {
        match o {
            TaskOutcome::Completed => TaskClosure::Completed,
            TaskOutcome::Failed => TaskClosure::Failed,
        }
    }
}
