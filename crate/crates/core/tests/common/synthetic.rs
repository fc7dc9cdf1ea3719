//! A hand-built run log with known statistics, and the checks against it.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};

use yc_bench_core::analytics::{classify_failure, compute_stats, FailureCause, FailureHistogram};
use yc_bench_core::clock::Timestamp;
use yc_bench_core::command::StatusObservation;
use yc_bench_core::domain::{LedgerEntry, LedgerKind};
use yc_bench_core::engine::events::{DigestEntry, Occurrence, TaskClosure, TaskFacts};
use yc_bench_core::session::{LogRecord, Record, ScratchpadOp, Telemetry};
use yc_bench_core::worldgen::generate_world;
use yc_bench_core::{BenchConfig, Domain, Money, Outcome, WorldState};

pub fn start() -> Timestamp {
    NaiveDate::from_ymd_opt(2025, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

pub fn day(d: i64) -> Timestamp {
    start() + Duration::days(d)
}

/// Builds a log by appending record bodies with consecutive sequence numbers.
#[derive(Default)]
pub struct LogBuilder {
    pub records: Vec<LogRecord>,
    pub turn: u64,
}

impl LogBuilder {
    pub fn push(&mut self, body: Record) {
        self.records.push(LogRecord { seq: self.records.len() as u64, body });
    }

    pub fn event(&mut self, d: i64, event: Occurrence) {
        self.push(Record::Event(DigestEntry { at: day(d), event }));
    }

    pub fn ledger(&mut self, d: i64, kind: LedgerKind, dollars: i64, reference: &str) {
        self.push(Record::Ledger(LedgerEntry {
            timestamp: day(d),
            kind,
            amount: Money::from_dollars(dollars),
            reference: reference.into(),
        }));
    }

    pub fn turn(&mut self, d: i64, world: &WorldState) {
        self.turn += 1;
        let mut status = StatusObservation::of(world);
        status.timestamp = day(d);
        self.push(Record::Turn { turn: self.turn, status });
    }

    pub fn command(&mut self, line: &str, verb: Option<&str>, forced: bool) {
        self.push(Record::Command {
            turn: self.turn,
            line: line.into(),
            verb: verb.map(str::to_string),
            ok: verb.is_some(),
            error_code: None,
            forced,
        });
    }

    pub fn scratchpad(&mut self, d: i64, op: ScratchpadOp, content: &str) {
        self.push(Record::Scratchpad { turn: self.turn, at: day(d), op, content: content.into(), bytes: content.len() });
    }

    pub fn telemetry(&mut self, wall_ms: u64, agent: Telemetry) {
        self.push(Record::Telemetry { turn: self.turn, commands_issued: 0, commands_dropped: 0, wall_ms, agent });
    }

    pub fn turn_end(&mut self) {
        self.push(Record::TurnEnd { turn: self.turn, idle_turns: 0 });
    }

    pub fn accepted(&mut self, d: i64, task: &str, client: &str) {
        self.event(d, Occurrence::TaskAccepted { task_id: task.into(), client_id: client.into(), deadline: day(d + 7) });
    }
}

pub struct Closed<'a> {
    pub task: &'a str,
    pub client: &'a str,
    pub outcome: TaskClosure,
    pub trust: f64,
    pub accepted: i64,
    pub closed: i64,
    pub work: u64,
    pub progress: f64,
    pub undivided: f64,
    /// Research rate of each assignee.
    pub rates: &'a [f64],
    pub budget_hours: f64,
}

pub fn facts(c: Closed) -> TaskFacts {
    TaskFacts {
        task_id: c.task.into(),
        client_id: c.client.into(),
        outcome: c.outcome,
        required_trust: c.trust,
        accepted_at: day(c.accepted),
        deadline: day(c.accepted + 7),
        closed_at: day(c.closed),
        effective_work: BTreeMap::from([(Domain::Research, c.work)]),
        progress: BTreeMap::from([(Domain::Research, c.progress)]),
        undivided_progress: BTreeMap::from([(Domain::Research, c.undivided)]),
        assignee_rates: c
            .rates
            .iter()
            .enumerate()
            .map(|(i, &r)| (format!("Emp_{}", i + 1), BTreeMap::from([(Domain::Research, r)])))
            .collect(),
        budget_hours: c.budget_hours,
    }
}

pub fn closed(task: &'static str, client: &'static str, outcome: TaskClosure, accepted: i64, closed: i64) -> Closed<'static> {
    Closed {
        task,
        client,
        outcome,
        trust: 0.0,
        accepted,
        closed,
        work: 600,
        progress: 600.0,
        undivided: 600.0,
        rates: &[10.0],
        budget_hours: 63.0,
    }
}

pub const CLIENTS: [(&str, bool); 4] = [("Aurora", false), ("Borealis", false), ("Cygnus", false), ("Helios", true)];

/// The privileged world: four named clients, one of them adversarial.
pub fn privileged() -> WorldState {
    let mut w = generate_world(42, &BenchConfig::default());
    w.clients.truncate(4);
    for (client, (id, adversarial)) in w.clients.iter_mut().zip(CLIENTS) {
        client.id = id.into();
        client.adversarial = adversarial;
    }
    w
}

/// Eight tasks over forty days:
///
/// | task | client   | accepted | closed | outcome   | why it failed |
/// |------|----------|----------|--------|-----------|---------------|
/// | T1   | Aurora   | 0        | 10     | completed |               |
/// | T2   | Helios   | 0        | 7      | failed    | adversarial (staffing alone: incapable) |
/// | T3   | Aurora   | 10       | 20     | completed, trust-gated | |
/// | T4   | Borealis | 10       | 17     | failed    | 1 u/h × 63 h < 2400 |
/// | T5   | Borealis | 20       | 27     | failed    | 10 u/h × 63 h ≥ 600 undivided, split fell short |
/// | T6   | Cygnus   | 20       | 27     | failed    | capable, but undivided work fell short too |
/// | T7   | Helios   | 30       | open   |           |               |
/// | T8   | Cygnus   | 30       | 35     | cancelled |               |
pub fn synthetic() -> Vec<LogRecord> {
    let w = privileged();
    let mut b = LogBuilder::default();
    b.push(Record::Header {
        schema: "yc-bench/runlog/v1".into(),
        session_id: "synthetic".into(),
        seed: 42,
        config: Box::default(),
        start: start(),
        state_hash: "0".repeat(64),
    });
    b.ledger(0, LedgerKind::InitialCapital, 200_000, "initial");

    b.turn(0, &w);
    b.command("task inspect --task-id T1", Some("task inspect"), false);
    b.command("task accept --task-id T1", Some("task accept"), false);
    b.accepted(0, "T1", "Aurora");
    b.command("task accept --task-id T2", Some("task accept"), false);
    b.accepted(0, "T2", "Helios");
    b.command("scratchpad write --content 'focus Aurora'", Some("scratchpad write"), false);
    b.scratchpad(0, ScratchpadOp::Write, "focus Aurora");
    b.command("sim resume", Some("sim resume"), false);
    b.ledger(7, LedgerKind::FailurePenalty, -7_000, "T2");
    b.event(7, Occurrence::TaskFailed {
        task_id: "T2".into(),
        client_id: "Helios".into(),
        penalty_cents: Money::from_dollars(7_000),
        percent_complete: 20.0,
    });
    b.push(Record::TaskClosed(facts(Closed {
        work: 2400,
        progress: 63.0,
        undivided: 63.0,
        rates: &[1.0],
        ..closed("T2", "Helios", TaskClosure::Failed, 0, 7)
    })));
    b.ledger(10, LedgerKind::TaskReward, 50_000, "T1");
    b.push(Record::TaskClosed(facts(closed("T1", "Aurora", TaskClosure::Completed, 0, 10))));
    b.telemetry(60_000, Telemetry { input_tokens: Some(1000), output_tokens: Some(200), cost_usd: Some(0.5), note: None });
    b.turn_end();

    b.turn(10, &w);
    b.command("task accept --task-id T3", Some("task accept"), false);
    b.accepted(10, "T3", "Aurora");
    b.command("task accept --task-id T4", Some("task accept"), false);
    b.accepted(10, "T4", "Borealis");
    b.command("task inspect --task-id T3", Some("task inspect"), false);
    b.command("scratchpad append --content 'Helios slow'", Some("scratchpad append"), false);
    b.scratchpad(10, ScratchpadOp::Append, "Helios slow");
    b.command("sim resume", Some("sim resume"), false);
    b.ledger(17, LedgerKind::FailurePenalty, -5_000, "T4");
    b.push(Record::TaskClosed(facts(Closed {
        work: 2400,
        progress: 63.0,
        undivided: 63.0,
        rates: &[1.0],
        ..closed("T4", "Borealis", TaskClosure::Failed, 10, 17)
    })));
    b.ledger(20, LedgerKind::TaskReward, 80_000, "T3");
    b.push(Record::TaskClosed(facts(Closed { trust: 1.0, ..closed("T3", "Aurora", TaskClosure::Completed, 10, 20) })));
    b.telemetry(30_000, Telemetry { input_tokens: Some(3000), output_tokens: None, cost_usd: Some(1.5), note: None });
    b.turn_end();

    b.turn(20, &w);
    b.command("task accept --task-id T5", Some("task accept"), false);
    b.accepted(20, "T5", "Borealis");
    b.command("task accept --task-id T6", Some("task accept"), false);
    b.accepted(20, "T6", "Cygnus");
    b.command("launch rockets", None, false);
    b.command("sim resume", Some("sim resume"), false);
    b.ledger(27, LedgerKind::FailurePenalty, -3_500, "T5");
    b.push(Record::TaskClosed(facts(Closed {
        progress: 200.0,
        ..closed("T5", "Borealis", TaskClosure::Failed, 20, 27)
    })));
    b.ledger(27, LedgerKind::FailurePenalty, -3_500, "T6");
    b.push(Record::TaskClosed(facts(Closed {
        progress: 150.0,
        undivided: 300.0,
        ..closed("T6", "Cygnus", TaskClosure::Failed, 20, 27)
    })));
    b.telemetry(0, Telemetry::default());
    b.turn_end();

    b.turn(30, &w);
    b.command("task accept --task-id T7", Some("task accept"), false);
    b.accepted(30, "T7", "Helios");
    b.command("task accept --task-id T8", Some("task accept"), false);
    b.accepted(30, "T8", "Cygnus");
    b.command("task cancel --task-id T8 --reason 'too slow'", Some("task cancel"), false);
    b.push(Record::TaskClosed(facts(closed("T8", "Cygnus", TaskClosure::Cancelled, 30, 35))));
    b.command("scratchpad append --content 'dropped T8'", Some("scratchpad append"), false);
    b.scratchpad(30, ScratchpadOp::Append, "dropped T8");
    b.command("company status", Some("company status"), false);
    b.telemetry(30_000, Telemetry::default());
    b.command("sim resume", Some("sim resume"), true);
    b.ledger(33, LedgerKind::Payroll, -45_000, "2025-02");
    b.event(33, Occurrence::Payroll {
        month: "2025-02".into(),
        amount_cents: Money::from_dollars(45_000),
        funds_after_cents: Money::from_dollars(266_000),
    });
    b.event(40, Occurrence::HorizonReached { funds_cents: Money::from_dollars(266_000) });
    b.turn_end();
    b.push(Record::EpisodeEnd {
        outcome: Outcome::Horizon,
        final_funds_cents: Money::from_dollars(266_000),
        turns: 4,
        trust: BTreeMap::from([
            ("Aurora".into(), 2.5),
            ("Borealis".into(), 0.0),
            ("Cygnus".into(), 0.4),
            ("Helios".into(), 1.0),
        ]),
        state_hash: "f".repeat(64),
    });
    b.records
}

/// Every field of the synthetic run's statistics against hand-computed values.
pub fn check_synthetic_stats() {
    let w = privileged();
    let s = compute_stats(&synthetic(), Some(&w)).unwrap();

    assert_eq!((s.session_id.as_str(), s.seed, s.context_window), ("synthetic", 42, 20));
    assert_eq!(s.outcome, Some(Outcome::Horizon));
    assert!(!s.partial && !s.bankrupt);
    assert_eq!(s.turns, 4);
    // 200,000 + 50,000 + 80,000 - 7,000 - 5,000 - 3,500 - 3,500 - 45,000
    assert_eq!(s.final_funds_cents, Money::from_dollars(266_000));
    assert_eq!(s.funds_trajectory.len(), 1);
    assert_eq!(s.funds_trajectory[0].month, "2025-02");
    assert_eq!(s.funds_trajectory[0].at, day(33));
    assert_eq!(s.funds_trajectory[0].funds_cents, Money::from_dollars(266_000));

    assert_eq!((s.tasks_accepted, s.tasks_completed, s.tasks_failed, s.tasks_cancelled), (8, 2, 4, 1));
    assert_eq!(s.adversarial_accepted, Some(2));
    assert_eq!(s.adversarial_ratio, Some(0.25));
    assert_eq!(s.trust_gated_completed, 1);
    assert_eq!(s.trust_gated_ratio, Some(0.5));
    assert_eq!(s.failures, FailureHistogram { adversarial: 1, incapable_assignment: 1, overcommitment: 1, other: 1 });
    let causes: Vec<(&str, FailureCause)> = s.failure_causes.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    assert_eq!(
        causes,
        vec![
            ("T2", FailureCause::Adversarial),
            ("T4", FailureCause::IncapableAssignment),
            ("T5", FailureCause::Overcommitment),
            ("T6", FailureCause::Other),
        ]
    );
    assert_eq!(s.final_trust["Aurora"].trust, 2.5);
    assert_eq!(s.final_trust["Helios"].adversarial, Some(true));
    assert_eq!(s.final_trust["Cygnus"].adversarial, Some(false));

    // Three scratchpad changes over four turns.
    assert_eq!(s.scratchpad_writes, 3);
    assert_eq!(s.scratchpad_per_100_turns, 75.0);
    assert_eq!((s.inspects, s.accepts_issued), (2, 8));
    assert_eq!(s.inspect_accept_ratio, Some(0.25));
    // Task-days 10+7+10+7+7+7+10+5 = 63 over a 40-day window.
    assert_eq!(s.mean_active_tasks, 63.0 / 40.0);
    // 19 agent commands (the forced resume is excluded) over four turns.
    assert_eq!(s.commands, 19);
    assert_eq!(s.commands_per_turn, 4.75);
    assert_eq!(s.command_counts["task accept"], 8);
    assert_eq!(s.command_counts["sim resume"], 3);
    assert_eq!(s.command_counts.values().sum::<usize>(), 18);

    assert_eq!(s.revenue_cents, Money::from_dollars(130_000));
    assert_eq!(s.cost_usd, Some(2.0));
    assert_eq!(s.tokens, Some(4200));
    assert_eq!(s.wall_minutes, 2.0);
    assert_eq!(s.revenue_per_cost_dollar, Some(65_000.0));
    assert_eq!(s.clone().with_cost_usd(13.0).revenue_per_cost_dollar, Some(10_000.0));
}

/// The constructed failure cases land in the expected causes.
pub fn check_failure_classification() {
    // One junior at 1 u/h cannot do 2400 units in 63 business hours.
    let junior =
        Closed { work: 2400, progress: 63.0, undivided: 63.0, rates: &[1.0], ..closed("X", "Aurora", TaskClosure::Failed, 0, 7) };
    assert_eq!(classify_failure(&facts(junior), Some(false)), FailureCause::IncapableAssignment);
    // Adversarial wins regardless of staffing.
    let staffed = facts(closed("Y", "Helios", TaskClosure::Failed, 0, 7));
    assert_eq!(classify_failure(&staffed, Some(true)), FailureCause::Adversarial);
    // Feasible alone (10 u/h × 63 h ≥ 600) but run as one of three: 210 units done.
    let split = Closed { progress: 210.0, ..closed("Z", "Aurora", TaskClosure::Failed, 0, 7) };
    assert_eq!(classify_failure(&facts(split), Some(false)), FailureCause::Overcommitment);
    let unstaffed = Closed { rates: &[], progress: 0.0, undivided: 0.0, ..closed("W", "Aurora", TaskClosure::Failed, 0, 7) };
    assert_eq!(classify_failure(&facts(unstaffed), None), FailureCause::Other);
}
