//! The full hidden world state and its global invariant check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::SimClock;
use crate::config::BenchConfig;
use crate::domain::{
    funds_from_ledger, ClientProfile, EmployeeProfile, LedgerEntry, PrestigeVector, TaskRecord, TaskStatus,
};
use crate::engine::events::{DigestEntry, EventQueue, TaskFacts};
use crate::money::Money;
use crate::rng::RngStreams;

pub const STATE_SCHEMA: &str = "yc-bench/state/v1";

/// Floating-point slack used by invariant checks.
pub(crate) const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Horizon,
    Bankrupt,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Horizon => "horizon",
            Outcome::Bankrupt => "bankrupt",
        })
    }
}

/// Items the engine hands to the run-log writer. Drained after every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogItem {
    Event(DigestEntry),
    Ledger(LedgerEntry),
    TaskClosed(TaskFacts),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub schema: String,
    pub seed: u64,
    pub config: BenchConfig,
    pub clock: SimClock,
    pub funds: Money,
    pub roster: Vec<EmployeeProfile>,
    pub clients: Vec<ClientProfile>,
    pub market: Vec<TaskRecord>,
    pub book: Vec<TaskRecord>,
    pub prestige: PrestigeVector,
    pub ledger: Vec<LedgerEntry>,
    pub event_queue: EventQueue,
    pub rng: RngStreams,
    /// Events since the last status observation.
    pub digest: Vec<DigestEntry>,
    pub next_task_serial: u64,
    pub outcome: Option<Outcome>,
    #[serde(skip)]
    pub(crate) outbox: Vec<LogItem>,
}

impl WorldState {
    pub fn employee(&self, id: &str) -> Option<&EmployeeProfile> {
        self.roster.iter().find(|e| e.id == id)
    }

    pub fn client(&self, id: &str) -> Option<&ClientProfile> {
        self.clients.iter().find(|c| c.id == id)
    }

    pub fn task(&self, id: &str) -> Option<&TaskRecord> {
        self.book.iter().chain(self.market.iter()).find(|t| t.id == id)
    }

    pub fn active_tasks(&self) -> impl Iterator<Item = &TaskRecord> {
        self.book.iter().filter(|t| t.status.is_active())
    }

    pub fn monthly_payroll(&self) -> Money {
        self.roster.iter().map(|e| e.monthly_salary).sum()
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_some()
    }

    /// Number of dispatched tasks each employee is currently assigned to.
    pub fn dispatched_load(&self) -> BTreeMap<String, usize> {
        let mut load = BTreeMap::new();
        for task in self.book.iter().filter(|t| t.status == TaskStatus::Dispatched) {
            for emp in &task.assignees {
                *load.entry(emp.clone()).or_insert(0) += 1;
            }
        }
        load
    }

    /// Takes the pending run-log items produced since the last drain.
    pub fn drain_log(&mut self) -> Vec<LogItem> {
        std::mem::take(&mut self.outbox)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("world state serializes")
    }

    pub fn state_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Checks every state invariant; returns one description per violation.
pub fn validate(state: &WorldState) -> Vec<String> {
    let mut out = Vec::new();
    let cfg = &state.config;
    let clock = &state.clock;
    if clock.now > clock.horizon_end {
        out.push(format!("clock {} is past the horizon {}", clock.now, clock.horizon_end));
    }
    if clock.now < clock.horizon_start {
        out.push(format!("clock {} precedes the horizon start {}", clock.now, clock.horizon_start));
    }
    match funds_from_ledger(&state.ledger) {
        Ok(sum) if sum != state.funds => out.push(format!("funds {} differ from ledger sum {}", state.funds, sum)),
        Ok(_) => {}
        Err(e) => out.push(format!("ledger: {e}")),
    }
    if state.funds.is_negative() && state.outcome.is_none() {
        out.push(format!("funds {} are negative but the episode is still running", state.funds));
    }
    if state.roster.len() != cfg.workforce.employees {
        out.push(format!("roster has {} employees, expected {}", state.roster.len(), cfg.workforce.employees));
    }
    for emp in &state.roster {
        for (domain, &rate) in &emp.rates {
            if !(1.0 - EPS..=cfg.workforce.rate_cap + EPS).contains(&rate) {
                out.push(format!("employee {} has rate {rate} in {domain} outside [1, {}]", emp.id, cfg.workforce.rate_cap));
            }
        }
    }
    for client in &state.clients {
        if !(0.0..=cfg.trust.max + EPS).contains(&client.trust) {
            out.push(format!("client {} has trust {} outside [0, {}]", client.id, client.trust, cfg.trust.max));
        }
        if client.adversarial && client.scope_creep_factor < cfg.adversarial.scope_creep_floor - EPS {
            out.push(format!("client {} has an inflation factor below the floor", client.id));
        }
        if !client.adversarial && client.scope_creep_factor != 1.0 {
            out.push(format!("client {} is honest but inflates work", client.id));
        }
    }
    for (domain, &level) in &state.prestige.0 {
        if !(cfg.prestige.min - EPS..=cfg.prestige.max + EPS).contains(&level) {
            out.push(format!("prestige {level} in {domain} outside [{}, {}]", cfg.prestige.min, cfg.prestige.max));
        }
    }
    for task in &state.market {
        if task.status != TaskStatus::Market {
            out.push(format!("task {} sits in the market with status {}", task.id, task.status));
        }
        if task.accepted_at.is_some() || task.deadline.is_some() {
            out.push(format!("market task {} has a deadline or acceptance time", task.id));
        }
    }
    for task in &state.book {
        if task.status == TaskStatus::Market {
            out.push(format!("task {} is booked but marked market", task.id));
        }
        if task.accepted_at.is_none() || task.deadline.is_none() {
            out.push(format!("booked task {} lacks a deadline or acceptance time", task.id));
        }
        for emp in &task.assignees {
            if state.employee(emp).is_none() {
                out.push(format!("task {} is assigned to unknown employee {emp}", task.id));
            }
        }
    }
    for task in state.market.iter().chain(state.book.iter()) {
        for (domain, &progress) in &task.progress {
            let required = task.required_in(*domain) as f64;
            if progress > required + EPS {
                out.push(format!("task {} has progress {progress:.3} above required {required} in {domain}", task.id));
            }
        }
        if state.client(&task.client_id).is_none() {
            out.push(format!("task {} names unknown client {}", task.id, task.client_id));
        }
    }
    out
}
