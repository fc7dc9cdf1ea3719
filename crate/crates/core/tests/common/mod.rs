//! Oracles shared by the engine property suite and the acceptance report.
#![allow(dead_code)]

pub mod synthetic;

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, Timelike, Weekday};

use yc_bench_core::clock::Timestamp;
use yc_bench_core::domain::TaskRecord;
use yc_bench_core::rng::RngStream;
use yc_bench_core::worldgen::{generate_task, generate_world};
use yc_bench_core::{BenchConfig, Domain, Money, TaskStatus, WorldState};

/// A small staffing scenario: per-employee rates and per-task (domain, work, assignees).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub start_offset_minutes: i64,
    pub rates: Vec<[f64; 4]>,
    pub tasks: Vec<(usize, u64, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closed {
    pub status: TaskStatus,
    pub at: Timestamp,
    pub progress: f64,
}

/// A world with cheap staff and deep pockets so payroll never interferes.
pub fn quiet_world(seed: u64) -> WorldState {
    let mut config = BenchConfig::default();
    config.workforce.initial_funds_cents = 100_000_000_000;
    let mut w = generate_world(seed, &config);
    for e in w.roster.iter_mut() {
        e.monthly_salary = Money::from_dollars(1_000);
    }
    w
}

pub fn plant(w: &mut WorldState, client: usize, domain: Domain, work: u64) -> String {
    let mut task = w.market[0].clone();
    task.id = format!("Task-P{}", w.market.len() + w.book.len());
    task.client_id = w.clients[client].id.clone();
    task.domain_work = [(domain, work)].into();
    task.required_prestige = 1;
    task.required_trust = 0.0;
    let id = task.id.clone();
    w.market.insert(0, task);
    id
}

fn honest_client(w: &WorldState) -> usize {
    w.clients.iter().position(|c| !c.adversarial).unwrap()
}

/// Runs the scenario through the event-driven engine until every planted task closes.
pub fn run_engine(s: &Scenario) -> (Timestamp, Vec<(Timestamp, u64)>, Vec<Closed>) {
    let mut w = quiet_world(s.seed);
    w.clock.now += Duration::minutes(s.start_offset_minutes);
    let start = w.clock.now;
    for (i, rates) in s.rates.iter().enumerate() {
        for (d, &r) in Domain::ALL.iter().zip(rates) {
            w.roster[i].rates.insert(*d, r);
        }
    }
    let client = honest_client(&w);
    let mut ids = Vec::new();
    for (domain, work, staff) in &s.tasks {
        let id = plant(&mut w, client, Domain::ALL[*domain], *work);
        w.accept_task(&id).unwrap();
        let staff: Vec<String> = staff.iter().map(|&e| w.roster[e].id.clone()).collect();
        w.assign(&id, &staff).unwrap();
        w.dispatch(&id).unwrap();
        ids.push(id);
    }
    let plan = ids
        .iter()
        .map(|id| {
            let t = w.task(id).unwrap();
            (t.deadline.unwrap(), t.effective_work.values().sum())
        })
        .collect();
    while ids.iter().any(|id| w.task(id).unwrap().status.is_active()) {
        w.resume().unwrap();
    }
    let closed = ids
        .iter()
        .map(|id| {
            let t = w.task(id).unwrap();
            Closed { status: t.status, at: t.closed_at.unwrap(), progress: t.progress.values().sum() }
        })
        .collect();
    (start, plan, closed)
}

fn open(at: Timestamp) -> bool {
    !matches!(at.weekday(), Weekday::Sat | Weekday::Sun) && (9..18).contains(&at.hour())
}

/// Minute-by-minute simulation of the same scenario, including the productivity boost on completion.
pub fn brute_force(s: &Scenario, start: Timestamp, plan: &[(Timestamp, u64)]) -> Vec<Closed> {
    let config = BenchConfig::default();
    let boost = 1.0 + config.workforce.productivity_boost_rate;
    let cap = config.workforce.rate_cap;
    let mut rates = s.rates.clone();
    let n = s.tasks.len();
    let mut progress = vec![0.0f64; n];
    let mut closed: Vec<Option<Closed>> = vec![None; n];
    let mut t = start;
    while closed.iter().any(Option::is_none) {
        for i in 0..n {
            if closed[i].is_none() && t >= plan[i].0 {
                closed[i] = Some(Closed { status: TaskStatus::Failed, at: t, progress: progress[i] });
            }
        }
        if open(t) {
            let mut load = vec![0usize; s.rates.len()];
            for (i, (_, _, staff)) in s.tasks.iter().enumerate() {
                if closed[i].is_none() {
                    for &e in staff {
                        load[e] += 1;
                    }
                }
            }
            for (i, (domain, _, staff)) in s.tasks.iter().enumerate() {
                if closed[i].is_some() {
                    continue;
                }
                let rate: f64 = staff.iter().map(|&e| rates[e][*domain] / load[e] as f64).sum();
                progress[i] = (progress[i] + rate / 60.0).min(plan[i].1 as f64);
            }
        }
        t += Duration::minutes(1);
        for i in 0..n {
            if closed[i].is_none() && progress[i] + 1e-6 >= plan[i].1 as f64 {
                closed[i] = Some(Closed { status: TaskStatus::Completed, at: t, progress: plan[i].1 as f64 });
                let (domain, _, staff) = &s.tasks[i];
                for &e in staff {
                    rates[e][*domain] = (rates[e][*domain] * boost).min(cap);
                }
            }
        }
    }
    closed.into_iter().map(Option::unwrap).collect()
}

/// Compares engine and brute-force closures; returns a description of the first disagreement.
pub fn compare(s: &Scenario) -> Result<(), String> {
    let (start, plan, engine) = run_engine(s);
    let brute = brute_force(s, start, &plan);
    for (i, (e, b)) in engine.iter().zip(&brute).enumerate() {
        let minutes = (e.at - b.at).num_minutes().abs();
        if e.status != b.status {
            // Only a finish within a minute of the deadline may land on either side.
            let finish = if e.status == TaskStatus::Completed { e.at } else { b.at };
            if (finish - plan[i].0).num_minutes().abs() > 1 {
                return Err(format!("task {i}: engine {e:?} vs brute force {b:?}"));
            }
            continue;
        }
        if minutes > 1 {
            return Err(format!("task {i}: closed at {} vs {}", e.at, b.at));
        }
        if (e.progress - b.progress).abs() > 1.0 {
            return Err(format!("task {i}: progress {} vs {}", e.progress, b.progress));
        }
    }
    Ok(())
}

pub fn random_scenario(rng: &mut RngStream) -> Scenario {
    use rand::Rng;
    let employees = rng.gen_range(1..=3);
    let rates = (0..employees)
        .map(|_| std::array::from_fn(|_| (rng.gen_range(1.0..=10.0f64) * 100.0).round() / 100.0))
        .collect();
    let tasks = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut staff: Vec<usize> = (0..employees).filter(|_| rng.gen_bool(0.6)).collect();
            if staff.is_empty() {
                staff.push(rng.gen_range(0..employees));
            }
            (rng.gen_range(0..4), rng.gen_range(20..=1500), staff)
        })
        .collect();
    Scenario { seed: rng.gen_range(0..1000), start_offset_minutes: rng.gen_range(0..7 * 1440), rates, tasks }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct TrapTally {
    pub adversarial: usize,
    pub adversarial_met: usize,
    pub honest: usize,
    pub honest_met: usize,
    /// Tasks where the engine outcome disagreed with the capacity oracle.
    pub oracle_disagreements: usize,
}

/// Capacity oracle: the whole roster, unsplit, over the business hours before the deadline.
fn capacity_feasible(w: &WorldState, task: &TaskRecord) -> bool {
    let hours = w.clock.business_hours.overlap_hours(task.accepted_at.unwrap(), task.deadline.unwrap());
    task.effective_work.iter().all(|(d, &need)| w.roster.iter().map(|e| e.rate(*d)).sum::<f64>() * hours + 1e-6 >= need as f64)
}

/// Stages `per_kind` adversarial and honest tasks against each seed's default roster, all staff assigned.
pub fn trap_tally(seeds: std::ops::Range<u64>, per_kind: usize) -> TrapTally {
    let mut tally = TrapTally::default();
    for seed in seeds {
        let base = generate_world(seed, &BenchConfig::default());
        let mut rng = RngStream::new(seed, "trap");
        let (mut adv, mut hon) = (0, 0);
        let mut serial = 0;
        while adv < per_kind || hon < per_kind {
            serial += 1;
            let mut task = generate_task(&mut rng, &base.config, &base.clients, serial);
            task.id = format!("Task-Trap{serial}");
            let is_adv = base.client(&task.client_id).unwrap().adversarial;
            if (is_adv && adv >= per_kind) || (!is_adv && hon >= per_kind) {
                continue;
            }
            task.required_prestige = 1;
            task.required_trust = 0.0;
            let mut w = base.clone();
            let id = task.id.clone();
            w.market.insert(0, task);
            w.accept_task(&id).unwrap();
            let staff: Vec<String> = w.roster.iter().map(|e| e.id.clone()).collect();
            w.assign(&id, &staff).unwrap();
            w.dispatch(&id).unwrap();
            let oracle = capacity_feasible(&w, w.task(&id).unwrap());
            while w.task(&id).unwrap().status.is_active() {
                w.resume().unwrap();
            }
            let met = w.task(&id).unwrap().status == TaskStatus::Completed;
            tally.oracle_disagreements += usize::from(met != oracle);
            if is_adv {
                adv += 1;
                tally.adversarial += 1;
                tally.adversarial_met += usize::from(met);
            } else {
                hon += 1;
                tally.honest += 1;
                tally.honest_met += usize::from(met);
            }
        }
    }
    tally
}

pub fn payroll_series(w: &WorldState) -> BTreeMap<String, i64> {
    w.ledger
        .iter()
        .filter(|e| e.kind == yc_bench_core::domain::LedgerKind::Payroll)
        .map(|e| (e.reference.clone(), -e.amount.cents()))
        .collect()
}
