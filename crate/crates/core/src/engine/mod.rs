//! The transition function: command effects, event processing, and work accrual.

pub mod events;

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;

use crate::clock::Timestamp;
use crate::domain::{ClientOutcome, Domain, EmployeeProfile, LedgerEntry, LedgerKind, TaskOutcome, TaskRecord, TaskStatus};
use crate::error::EngineError;
use crate::money::Money;
use crate::state::{LogItem, Outcome, WorldState, EPS};
use crate::worldgen;

use events::{DigestEntry, EventKind, Occurrence, ScheduledEvent, TaskClosure, TaskFacts};

/// An employee's throughput on one task when split across `active_task_count` dispatched tasks.
pub fn effective_rate(employee: &EmployeeProfile, domain: Domain, active_task_count: usize) -> Result<f64, EngineError> {
    if active_task_count == 0 {
        return Err(EngineError::NoActiveTasks);
    }
    Ok(employee.rate(domain) / active_task_count as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DomainRate {
    pub split: f64,
    pub undivided: f64,
}

fn work_left(task: &TaskRecord, domain: Domain, fraction: f64) -> f64 {
    task.required_in(domain) as f64 * fraction - task.progress_in(domain)
}

impl WorldState {
    fn ensure_running(&self) -> Result<(), EngineError> {
        match self.outcome {
            Some(outcome) => Err(EngineError::EpisodeOver(outcome.to_string())),
            None => Ok(()),
        }
    }

    fn emit(&mut self, event: Occurrence) {
        let entry = DigestEntry { at: self.clock.now, event };
        self.digest.push(entry.clone());
        self.outbox.push(LogItem::Event(entry));
    }

    fn post(&mut self, kind: LedgerKind, amount: Money, reference: String) {
        let entry = LedgerEntry { timestamp: self.clock.now, kind, amount, reference };
        self.funds += amount;
        self.ledger.push(entry.clone());
        self.outbox.push(LogItem::Ledger(entry));
    }

    fn book_index(&self, task_id: &str) -> Result<usize, EngineError> {
        self.book
            .iter()
            .position(|t| t.id == task_id)
            .ok_or_else(|| EngineError::UnknownTask(task_id.to_string()))
    }

    fn active_index(&self, task_id: &str) -> Result<usize, EngineError> {
        if self.market.iter().any(|t| t.id == task_id) {
            return Err(EngineError::WrongStatus {
                task: task_id.to_string(),
                status: TaskStatus::Market,
                expected: "accepted or dispatched",
            });
        }
        let idx = self.book_index(task_id)?;
        let task = &self.book[idx];
        if !task.status.is_active() {
            return Err(EngineError::WrongStatus {
                task: task.id.clone(),
                status: task.status,
                expected: "accepted or dispatched",
            });
        }
        Ok(idx)
    }

    fn client_mut(&mut self, id: &str) -> &mut crate::domain::ClientProfile {
        self.clients.iter_mut().find(|c| c.id == id).expect("tasks reference known clients")
    }

    /// Per-domain throughput of a task under the current assignments.
    pub fn task_rates(&self, task: &TaskRecord, load: &BTreeMap<String, usize>) -> BTreeMap<Domain, DomainRate> {
        let mut rates: BTreeMap<Domain, DomainRate> = task.domains().map(|d| (d, DomainRate::default())).collect();
        if task.status != TaskStatus::Dispatched {
            return rates;
        }
        for emp_id in &task.assignees {
            let Some(emp) = self.employee(emp_id) else { continue };
            let n = load.get(emp_id).copied().unwrap_or(1);
            for (domain, rate) in rates.iter_mut() {
                rate.split += effective_rate(emp, *domain, n).expect("dispatched assignee has load >= 1");
                rate.undivided += emp.rate(*domain);
            }
        }
        rates
    }

    /// Adds work done by dispatched tasks over the business minutes of `[from, to)`.
    pub fn accrue_work(&mut self, from: Timestamp, to: Timestamp) {
        let minutes = self.clock.business_hours.overlap_minutes(from, to);
        if minutes == 0 {
            return;
        }
        let hours = minutes as f64 / 60.0;
        let load = self.dispatched_load();
        let updates: Vec<(usize, BTreeMap<Domain, DomainRate>)> = self
            .book
            .iter()
            .enumerate()
            .filter(|(_, t)| t.status == TaskStatus::Dispatched)
            .map(|(i, t)| (i, self.task_rates(t, &load)))
            .collect();
        for (idx, rates) in updates {
            let task = &mut self.book[idx];
            for (domain, rate) in rates {
                let required = task.required_in(domain) as f64;
                let progress = task.progress.entry(domain).or_insert(0.0);
                *progress = (*progress + rate.split * hours).min(required);
                let undivided = task.undivided_progress.entry(domain).or_insert(0.0);
                *undivided = (*undivided + rate.undivided * hours).min(required);
            }
        }
    }

    /// Business minutes until `task` reaches `fraction` of its effective work at current rates.
    fn minutes_to_reach(&self, task: &TaskRecord, rates: &BTreeMap<Domain, DomainRate>, fraction: f64) -> Option<i64> {
        let mut needed = 0i64;
        for domain in task.domains() {
            let left = work_left(task, domain, fraction);
            if left <= EPS {
                continue;
            }
            let rate = rates.get(&domain).map_or(0.0, |r| r.split);
            if rate <= 0.0 {
                return None;
            }
            let minutes = (left / rate * 60.0 - 1e-9).ceil() as i64;
            needed = needed.max(minutes);
        }
        Some(needed)
    }

    fn pending_checkpoint(task: &TaskRecord, at: Timestamp) -> ScheduledEvent {
        ScheduledEvent {
            at,
            kind: EventKind::Checkpoint {
                task_id: task.id.clone(),
                quarter: task.checkpoints_reached + 1,
                version: task.schedule_version,
            },
        }
    }

    fn scheduled_checkpoint(&self, task: &TaskRecord) -> Option<ScheduledEvent> {
        self.event_queue
            .iter()
            .find(|e| matches!(&e.kind, EventKind::Checkpoint { task_id, version, .. }
                if *task_id == task.id && *version == task.schedule_version))
            .cloned()
    }

    /// Recomputes the next checkpoint of every active task from the current rates.
    /// Tasks whose next checkpoint is unchanged keep their schedule untouched.
    pub fn reschedule_checkpoints(&mut self) {
        let load = self.dispatched_load();
        let hours = self.clock.business_hours;
        let now = self.clock.now;
        let mut plans = Vec::new();
        for (idx, task) in self.book.iter().enumerate().filter(|(_, t)| t.status.is_active()) {
            let current = self.scheduled_checkpoint(task);
            let wanted = if task.status == TaskStatus::Dispatched && task.checkpoints_reached < 4 {
                let quarter = task.checkpoints_reached + 1;
                let rates = self.task_rates(task, &load);
                self.minutes_to_reach(task, &rates, f64::from(quarter) / 4.0)
                    .map(|m| hours.advance(now, m))
            } else {
                None
            };
            if current.as_ref().map(|e| e.at) != wanted {
                plans.push((idx, current, wanted));
            }
        }
        for (idx, current, wanted) in plans {
            if let Some(old) = current {
                self.event_queue.remove(&old);
            }
            let task = &mut self.book[idx];
            task.schedule_version += 1;
            if let Some(at) = wanted {
                let event = Self::pending_checkpoint(task, at);
                self.event_queue.push(event.at, event.kind);
            }
        }
    }

    pub fn accept_task(&mut self, task_id: &str) -> Result<(), EngineError> {
        self.ensure_running()?;
        let Some(idx) = self.market.iter().position(|t| t.id == task_id) else {
            let idx = self.book_index(task_id)?;
            return Err(EngineError::WrongStatus {
                task: task_id.to_string(),
                status: self.book[idx].status,
                expected: "market",
            });
        };
        let task = &self.market[idx];
        for domain in task.domains() {
            let current = self.prestige.get(domain);
            if current + EPS < f64::from(task.required_prestige) {
                return Err(EngineError::PrestigeGate { domain, required: task.required_prestige, current });
            }
        }
        let client = self.client(&task.client_id).expect("tasks reference known clients");
        if client.trust + EPS < task.required_trust {
            return Err(EngineError::TrustGate {
                client: client.id.clone(),
                required: task.required_trust,
                current: client.trust,
            });
        }

        let trust_cfg = &self.config.trust;
        let reduction = 1.0 - trust_cfg.work_reduction * client.trust / trust_cfg.max;
        let inflation = client.scope_creep_factor;
        let deadlines = &self.config.deadlines;
        let days = deadlines.min_days.max(task.total_advertised_work().div_ceil(deadlines.qty_per_day));

        let mut task = self.market.remove(idx);
        task.effective_work = task
            .domain_work
            .iter()
            .map(|(&d, &w)| (d, (w as f64 * reduction * inflation - 1e-9).ceil().max(0.0) as u64))
            .collect();
        task.progress = task.domains().map(|d| (d, 0.0)).collect();
        task.undivided_progress = task.progress.clone();
        let now = self.clock.now;
        let deadline = now + Duration::days(days as i64);
        task.status = TaskStatus::Accepted;
        task.accepted_at = Some(now);
        task.deadline = Some(deadline);
        let event = Occurrence::TaskAccepted { task_id: task.id.clone(), client_id: task.client_id.clone(), deadline };
        self.event_queue.push(deadline, EventKind::Deadline { task_id: task.id.clone() });
        self.book.push(task);
        self.emit(event);
        Ok(())
    }

    /// Replaces the assignee set of an accepted or dispatched task.
    pub fn assign(&mut self, task_id: &str, employee_ids: &[String]) -> Result<(), EngineError> {
        self.ensure_running()?;
        let idx = self.active_index(task_id)?;
        if let Some(unknown) = employee_ids.iter().find(|id| self.employee(id).is_none()) {
            return Err(EngineError::UnknownEmployee(unknown.clone()));
        }
        self.book[idx].assignees = employee_ids.iter().cloned().collect::<BTreeSet<_>>();
        self.reschedule_checkpoints();
        Ok(())
    }

    pub fn dispatch(&mut self, task_id: &str) -> Result<(), EngineError> {
        self.ensure_running()?;
        let idx = self.active_index(task_id)?;
        let task = &mut self.book[idx];
        if task.status != TaskStatus::Accepted {
            return Err(EngineError::WrongStatus { task: task.id.clone(), status: task.status, expected: "accepted" });
        }
        if task.assignees.is_empty() {
            return Err(EngineError::NoAssignees(task.id.clone()));
        }
        task.status = TaskStatus::Dispatched;
        self.reschedule_checkpoints();
        Ok(())
    }

    pub fn cancel_task(&mut self, task_id: &str, reason: &str) -> Result<(), EngineError> {
        self.ensure_running()?;
        let idx = self.active_index(task_id)?;
        let penalty = self.config.prestige.success_gain * self.config.deadlines.cancel_penalty_factor;
        let (pmin, pmax) = (self.config.prestige.min, self.config.prestige.max);
        let task = &mut self.book[idx];
        task.status = TaskStatus::Cancelled;
        task.closed_at = Some(self.clock.now);
        task.cancel_reason = Some(reason.to_string());
        let domains: Vec<Domain> = task.domains().collect();
        for d in domains {
            self.prestige.adjust(d, -penalty, pmin, pmax);
        }
        self.close_facts(idx, TaskClosure::Cancelled);
        self.emit(Occurrence::TaskCancelled { task_id: task_id.to_string(), reason: reason.to_string() });
        self.reschedule_checkpoints();
        Ok(())
    }

    fn close_facts(&mut self, idx: usize, outcome: TaskClosure) {
        if let Some(pending) = self.scheduled_checkpoint(&self.book[idx]) {
            self.event_queue.remove(&pending);
        }
        let task = &self.book[idx];
        if let Some(deadline) = task.deadline {
            self.event_queue.remove(&ScheduledEvent { at: deadline, kind: EventKind::Deadline { task_id: task.id.clone() } });
        }
        let accepted_at = task.accepted_at.expect("booked task has acceptance time");
        let deadline = task.deadline.expect("booked task has deadline");
        let assignee_rates = task
            .assignees
            .iter()
            .filter_map(|id| self.employee(id))
            .map(|e| (e.id.clone(), task.domains().map(|d| (d, e.rate(d))).collect()))
            .collect();
        let facts = TaskFacts {
            task_id: task.id.clone(),
            client_id: task.client_id.clone(),
            outcome,
            required_trust: task.required_trust,
            accepted_at,
            deadline,
            closed_at: self.clock.now,
            effective_work: task.effective_work.clone(),
            progress: task.progress.clone(),
            undivided_progress: task.undivided_progress.clone(),
            assignee_rates,
            budget_hours: self.clock.business_hours.overlap_hours(accepted_at, deadline),
        };
        self.outbox.push(LogItem::TaskClosed(facts));
    }

    /// Pays out a finished task and applies trust, prestige, salary, and productivity effects.
    pub(crate) fn complete_task(&mut self, idx: usize) {
        let cfg = self.config.clone();
        let now = self.clock.now;
        let task = &self.book[idx];
        let domains: Vec<Domain> = task.domains().collect();
        let mean_prestige = domains.iter().map(|&d| self.prestige.get(d)).sum::<f64>() / domains.len() as f64;
        let span = cfg.prestige.max - cfg.prestige.min;
        let multiplier = if span > 0.0 {
            1.0 + cfg.prestige.reward_scale * (mean_prestige - cfg.prestige.min) / span
        } else {
            1.0
        };
        let payout = task.advertised_reward.scale(multiplier);
        let task_id = task.id.clone();
        let client_id = task.client_id.clone();
        let assignees: Vec<String> = task.assignees.iter().cloned().collect();
        let margin = (task.deadline.expect("booked") - now).num_minutes() as f64 / 60.0;

        {
            let task = &mut self.book[idx];
            for (d, p) in task.progress.iter_mut() {
                *p = task.effective_work[d] as f64;
            }
            task.status = TaskStatus::Completed;
            task.closed_at = Some(now);
            task.payout = Some(payout);
            task.checkpoints_reached = 4;
        }
        self.post(LedgerKind::TaskReward, payout, task_id.clone());
        for &d in &domains {
            self.prestige.adjust(d, cfg.prestige.success_gain, cfg.prestige.min, cfg.prestige.max);
        }
        let gain = cfg.trust.gain_per_completion();
        for client in self.clients.iter_mut() {
            if client.id == client_id {
                client.trust = (client.trust + gain).min(cfg.trust.max);
                client.completions += 1;
                client.history.push(ClientOutcome { task_id: task_id.clone(), outcome: TaskOutcome::Completed, at: now });
            } else {
                client.trust = (client.trust - cfg.trust.focus_pressure).max(0.0);
            }
        }
        let mut bumps = Vec::new();
        for emp in self.roster.iter_mut().filter(|e| assignees.contains(&e.id)) {
            let old = emp.monthly_salary;
            emp.monthly_salary = old.bump_ceil(cfg.workforce.salary_bump_rate);
            for &d in &domains {
                let rate = emp.rates.entry(d).or_insert(1.0);
                *rate = (*rate * (1.0 + cfg.workforce.productivity_boost_rate)).min(cfg.workforce.rate_cap);
            }
            emp.completed_tasks += 1;
            bumps.push((emp.id.clone(), old, emp.monthly_salary));
        }
        self.close_facts(idx, TaskClosure::Completed);
        self.emit(Occurrence::TaskCompleted {
            task_id,
            client_id,
            payout_cents: payout,
            deadline_margin_hours: margin,
        });
        for (employee_id, old, new) in bumps {
            self.emit(Occurrence::SalaryBump { employee_id, old_salary_cents: old, new_salary_cents: new });
        }
    }

    /// Charges the failure penalty for a task that missed its deadline.
    pub(crate) fn fail_task(&mut self, idx: usize) {
        let cfg = self.config.clone();
        let now = self.clock.now;
        let task = &mut self.book[idx];
        task.status = TaskStatus::Failed;
        task.closed_at = Some(now);
        let penalty = task.advertised_reward.scale(cfg.deadlines.fail_penalty_rate);
        let percent = task.completion_fraction() * 100.0;
        let task_id = task.id.clone();
        let client_id = task.client_id.clone();
        let domains: Vec<Domain> = task.domains().collect();

        self.post(LedgerKind::FailurePenalty, -penalty, task_id.clone());
        for d in domains {
            self.prestige.adjust(d, -cfg.prestige.success_gain, cfg.prestige.min, cfg.prestige.max);
        }
        let client = self.client_mut(&client_id);
        client.failures += 1;
        client.trust = (client.trust - cfg.trust.failure_decay).max(0.0);
        client.history.push(ClientOutcome { task_id: task_id.clone(), outcome: TaskOutcome::Failed, at: now });
        self.close_facts(idx, TaskClosure::Failed);
        self.emit(Occurrence::TaskFailed { task_id, client_id, penalty_cents: penalty, percent_complete: percent });
        self.check_solvency();
    }

    fn check_solvency(&mut self) {
        if self.funds.is_negative() && self.outcome.is_none() {
            self.outcome = Some(Outcome::Bankrupt);
            self.emit(Occurrence::Bankrupt { funds_cents: self.funds });
        }
    }

    pub(crate) fn apply_payroll(&mut self, month: &str) {
        let total = self.monthly_payroll();
        self.post(LedgerKind::Payroll, -total, month.to_string());
        self.emit(Occurrence::Payroll { month: month.to_string(), amount_cents: total, funds_after_cents: self.funds });
        self.check_solvency();
        if self.outcome.is_none() {
            let (at, next) = worldgen::next_payroll(self.clock.now, self.config.simulation.business_start_hour);
            self.event_queue.push(at, EventKind::Payroll { month: next });
        }
    }

    fn is_stale(&self, event: &ScheduledEvent) -> bool {
        match &event.kind {
            EventKind::Deadline { task_id } => !self.book.iter().any(|t| t.id == *task_id && t.status.is_active()),
            EventKind::Checkpoint { task_id, version, .. } => !self
                .book
                .iter()
                .any(|t| t.id == *task_id && t.status == TaskStatus::Dispatched && t.schedule_version == *version),
            _ => false,
        }
    }

    fn cross_days(&mut self, from: Timestamp, to: Timestamp) {
        let days = (to.date() - from.date()).num_days();
        if days <= 0 {
            return;
        }
        let decay = self.config.prestige.decay_per_day;
        if decay > 0.0 {
            let (pmin, pmax) = (self.config.prestige.min, self.config.prestige.max);
            for d in Domain::ALL {
                self.prestige.adjust(d, -decay * days as f64, pmin, pmax);
            }
        }
        // Later day boundaries in the same jump find the pool already full.
        worldgen::replenish_market(self);
    }

    /// Advances to the next pending event, processes it, and returns what happened.
    pub fn resume(&mut self) -> Result<Vec<DigestEntry>, EngineError> {
        self.ensure_running()?;
        let mark = self.digest.len();
        let event = loop {
            let event = self.event_queue.pop().expect("horizon event is pending while the episode runs");
            if !self.is_stale(&event) {
                break event;
            }
        };
        let from = self.clock.now;
        let at = event.at.max(from);
        self.accrue_work(from, at);
        self.clock.advance_to(at);
        self.cross_days(from, at);

        match event.kind {
            EventKind::Payroll { month } => self.apply_payroll(&month),
            EventKind::Deadline { task_id } => {
                let idx = self.book_index(&task_id).expect("non-stale deadline has a task");
                let task = &mut self.book[idx];
                snap_finished(task);
                if task.is_finished() {
                    self.complete_task(idx);
                } else {
                    self.fail_task(idx);
                }
            }
            EventKind::Checkpoint { task_id, quarter, .. } => {
                let idx = self.book_index(&task_id).expect("non-stale checkpoint has a task");
                let task = &mut self.book[idx];
                if quarter >= 4 {
                    snap_finished(task);
                }
                if task.completion_fraction() + EPS >= f64::from(quarter) / 4.0 {
                    task.checkpoints_reached = quarter;
                    if quarter >= 4 || task.is_finished() {
                        self.complete_task(idx);
                    } else {
                        self.emit(Occurrence::Checkpoint { task_id, percent: quarter * 25 });
                    }
                }
            }
            EventKind::HorizonEnd => {
                self.outcome = Some(Outcome::Horizon);
                self.emit(Occurrence::HorizonReached { funds_cents: self.funds });
            }
        }
        if self.outcome.is_none() {
            self.reschedule_checkpoints();
        }
        Ok(self.digest[mark..].to_vec())
    }
}

/// Treats float residue within tolerance of the requirement as done.
fn snap_finished(task: &mut TaskRecord) {
    for (d, p) in task.progress.iter_mut() {
        let required = task.effective_work[d] as f64;
        if *p + EPS >= required {
            *p = required;
        }
    }
}
