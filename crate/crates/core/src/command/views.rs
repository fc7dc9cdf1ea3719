//! Agent-visible renderings of the world. None of these carry hidden client attributes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::domain::{ClientOutcome, Domain, EmployeeProfile, LedgerEntry, PrestigeVector, TaskRecord, TaskStatus, Tier};
use crate::engine::events::DigestEntry;
use crate::money::Money;
use crate::state::{Outcome, WorldState, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unbounded {
    #[serde(rename = "infinite")]
    Infinite,
}

/// Months of payroll covered by current funds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Runway {
    Months(f64),
    Unbounded(Unbounded),
}

impl Runway {
    pub fn of(funds: Money, payroll: Money) -> Self {
        if payroll.cents() <= 0 {
            Runway::Unbounded(Unbounded::Infinite)
        } else {
            Runway::Months(funds.cents() as f64 / payroll.cents() as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusObservation {
    pub timestamp: Timestamp,
    pub funds_cents: Money,
    pub monthly_payroll_cents: Money,
    pub runway_months: Runway,
    pub active_task_count: usize,
    pub prestige: PrestigeVector,
    pub outcome: Option<Outcome>,
    pub events: Vec<DigestEntry>,
}

impl StatusObservation {
    pub fn of(world: &WorldState) -> Self {
        let payroll = world.monthly_payroll();
        StatusObservation {
            timestamp: world.clock.now,
            funds_cents: world.funds,
            monthly_payroll_cents: payroll,
            runway_months: Runway::of(world.funds, payroll),
            active_task_count: world.active_tasks().count(),
            prestige: world.prestige.clone(),
            outcome: world.outcome,
            events: world.digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmployeeView {
    pub employee_id: String,
    pub tier: Tier,
    pub monthly_salary_cents: Money,
    pub rates: BTreeMap<Domain, f64>,
    pub completed_tasks: u32,
    pub dispatched_tasks: usize,
}

impl EmployeeView {
    pub fn of(emp: &EmployeeProfile, load: &BTreeMap<String, usize>) -> Self {
        EmployeeView {
            employee_id: emp.id.clone(),
            tier: emp.tier,
            monthly_salary_cents: emp.monthly_salary,
            rates: emp.rates.clone(),
            completed_tasks: emp.completed_tasks,
            dispatched_tasks: load.get(&emp.id).copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketTaskView {
    pub task_id: String,
    pub client_id: String,
    pub reward_cents: Money,
    pub work: BTreeMap<Domain, u64>,
    pub required_prestige: u32,
    pub required_trust: f64,
    pub deadline_days: u64,
    /// Whether the company currently meets the prestige and trust gates.
    pub eligible: bool,
}

impl MarketTaskView {
    pub fn of(world: &WorldState, task: &TaskRecord) -> Self {
        let deadlines = &world.config.deadlines;
        let prestige_ok = task.domains().all(|d| world.prestige.get(d) + EPS >= f64::from(task.required_prestige));
        let trust_ok = world.client(&task.client_id).is_some_and(|c| c.trust + EPS >= task.required_trust);
        MarketTaskView {
            task_id: task.id.clone(),
            client_id: task.client_id.clone(),
            reward_cents: task.advertised_reward,
            work: task.domain_work.clone(),
            required_prestige: task.required_prestige,
            required_trust: task.required_trust,
            deadline_days: deadlines.min_days.max(task.total_advertised_work().div_ceil(deadlines.qty_per_day)),
            eligible: prestige_ok && trust_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummaryView {
    pub task_id: String,
    pub client_id: String,
    pub status: TaskStatus,
    pub reward_cents: Money,
    pub percent_complete: f64,
    pub deadline: Option<Timestamp>,
    pub assignees: BTreeSet<String>,
}

impl TaskSummaryView {
    pub fn of(task: &TaskRecord) -> Self {
        TaskSummaryView {
            task_id: task.id.clone(),
            client_id: task.client_id.clone(),
            status: task.status,
            reward_cents: task.advertised_reward,
            percent_complete: percent(task.completion_fraction()),
            deadline: task.deadline,
            assignees: task.assignees.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainProgressView {
    pub required: u64,
    pub progress: f64,
    pub percent_complete: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDetailView {
    pub task_id: String,
    pub client_id: String,
    pub status: TaskStatus,
    pub reward_cents: Money,
    pub required_prestige: u32,
    pub required_trust: f64,
    pub domains: BTreeMap<Domain, DomainProgressView>,
    pub accepted_at: Option<Timestamp>,
    pub deadline: Option<Timestamp>,
    pub closed_at: Option<Timestamp>,
    pub assignees: BTreeSet<String>,
    pub payout_cents: Option<Money>,
    pub cancel_reason: Option<String>,
}

impl TaskDetailView {
    pub fn of(task: &TaskRecord) -> Self {
        let domains = task
            .domain_work
            .iter()
            .map(|(&d, &advertised)| {
                let required = if task.status == TaskStatus::Market { advertised } else { task.required_in(d) };
                let progress = round3(task.progress_in(d));
                let fraction = if required == 0 { 1.0 } else { progress / required as f64 };
                (d, DomainProgressView { required, progress, percent_complete: percent(fraction) })
            })
            .collect();
        TaskDetailView {
            task_id: task.id.clone(),
            client_id: task.client_id.clone(),
            status: task.status,
            reward_cents: task.advertised_reward,
            required_prestige: task.required_prestige,
            required_trust: task.required_trust,
            domains,
            accepted_at: task.accepted_at,
            deadline: task.deadline,
            closed_at: task.closed_at,
            assignees: task.assignees.clone(),
            payout_cents: task.payout,
            cancel_reason: task.cancel_reason.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientView {
    pub client_id: String,
    pub trust: f64,
    pub tier: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientHistoryView {
    pub client_id: String,
    pub completions: u32,
    pub failures: u32,
    pub tasks: Vec<ClientOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerView {
    pub funds_cents: Money,
    pub entries: Vec<LedgerEntry>,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn percent(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}
