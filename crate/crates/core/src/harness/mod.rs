//! Whole-episode driver: builds each turn's envelope, collects the agent's commands,
//! executes them, and enforces auto-advance.

pub mod agents;
pub mod wire;

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::command::{CommandResult, StatusObservation};
use crate::config::BenchConfig;
use crate::domain::funds_from_ledger;
use crate::error::HarnessError;
use crate::money::Money;
use crate::session::{Session, Telemetry};
use crate::state::Outcome;

pub use agents::{GreedyBaseline, ScriptedAgent, SilentAgent};

pub const SYSTEM_PROMPT: &str = include_str!("../../prompts/system.md");
pub const REPORT_SCHEMA: &str = "yc-bench/report/v1";

/// The system prompt with the scratchpad appended. The scratchpad appears nowhere else.
pub fn system_prompt(scratchpad: &str) -> String {
    let notes = if scratchpad.is_empty() { "(empty)" } else { scratchpad };
    format!("{SYSTEM_PROMPT}\n## Scratchpad\n\n{notes}\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub command: String,
    pub result: CommandResult,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

/// One past turn as the agent saw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryTurn {
    pub turn: u64,
    pub status: StatusObservation,
    pub exchanges: Vec<Exchange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEnvelope {
    pub turn: u64,
    pub system_prompt: String,
    pub history: Vec<HistoryTurn>,
    pub status: StatusObservation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    pub commands: Vec<String>,
    #[serde(default)]
    pub telemetry: Telemetry,
}

/// Executes commands on the agent's behalf within one turn.
pub trait Console {
    /// Runs one line, or returns `None` once the turn's budget is spent or the episode is over.
    fn run(&mut self, line: &str) -> Option<CommandResult>;
}

pub trait Agent {
    fn name(&self) -> String;

    /// Produces this turn's commands. Agents may run commands through `console`
    /// and inspect the results; anything in the returned reply runs afterwards.
    fn act(&mut self, envelope: &TurnEnvelope, console: &mut dyn Console) -> Result<AgentReply, HarnessError>;

    fn finish(&mut self, _report: &EpisodeReport) -> Result<(), HarnessError> {
        Ok(())
    }
}

/// Keeps the most recent `k` turns.
pub fn truncate_history(history: &[HistoryTurn], k: usize) -> Vec<HistoryTurn> {
    let k = k.max(1);
    history[history.len().saturating_sub(k)..].to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnTelemetry {
    pub turn: u64,
    /// Lines the agent sent, in order, including any past the cap.
    pub commands: Vec<String>,
    pub commands_executed: usize,
    pub commands_dropped: usize,
    pub forced_resume: bool,
    #[serde(flatten)]
    pub agent: Telemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub schema: String,
    pub agent: String,
    pub seed: u64,
    pub outcome: Option<Outcome>,
    pub final_funds_cents: Money,
    pub turns: u64,
    pub commands_executed: usize,
    pub forced_resumes: usize,
    pub final_state_hash: String,
    /// Set when the episode stopped before termination.
    pub aborted: Option<String>,
    pub turn_telemetry: Vec<TurnTelemetry>,
}

impl EpisodeReport {
    pub fn total_cost_usd(&self) -> Option<f64> {
        let costs: Vec<f64> = self.turn_telemetry.iter().filter_map(|t| t.agent.cost_usd).collect();
        (!costs.is_empty()).then(|| costs.iter().sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOptions {
    pub context_window: usize,
    pub max_commands_per_turn: usize,
    /// Safety stop for experiments; `None` runs to termination.
    pub max_turns: Option<u64>,
}

impl EpisodeOptions {
    pub fn from_config(config: &BenchConfig) -> Self {
        EpisodeOptions {
            context_window: config.memory.context_window,
            max_commands_per_turn: config.harness.max_commands_per_turn,
            max_turns: None,
        }
    }
}

struct TurnConsole<'a> {
    session: &'a mut Session,
    cap: usize,
    issued: Vec<String>,
    exchanges: Vec<Exchange>,
    dropped: usize,
    error: Option<HarnessError>,
}

impl Console for TurnConsole<'_> {
    fn run(&mut self, line: &str) -> Option<CommandResult> {
        self.issued.push(line.to_string());
        if self.exchanges.len() >= self.cap || self.session.is_over() || self.error.is_some() {
            self.dropped += 1;
            return None;
        }
        match self.session.execute(line) {
            Ok(result) => {
                self.exchanges.push(Exchange { command: line.to_string(), result: result.clone(), forced: false });
                Some(result)
            }
            Err(err) => {
                self.error = Some(err.into());
                None
            }
        }
    }
}

/// Plays one episode to termination (or until `max_turns`).
pub fn run_episode(
    session: &mut Session,
    agent: &mut dyn Agent,
    options: EpisodeOptions,
) -> Result<EpisodeReport, HarnessError> {
    let mut history: VecDeque<HistoryTurn> = VecDeque::new();
    let mut telemetry = Vec::new();
    let mut aborted = None;
    let mut executed = 0;
    let mut forced_resumes = 0;
    let k = options.context_window.max(1);

    while !session.is_over() {
        if options.max_turns.is_some_and(|m| session.meta().turn >= m) {
            aborted = Some(format!("stopped after {} turns", session.meta().turn));
            break;
        }
        let status = session.begin_turn()?;
        let envelope = TurnEnvelope {
            turn: session.meta().turn,
            system_prompt: system_prompt(session.scratchpad().content()),
            history: history.iter().cloned().collect(),
            status: status.clone(),
        };
        let started = Instant::now();
        let mut console = TurnConsole {
            session,
            cap: options.max_commands_per_turn,
            issued: Vec::new(),
            exchanges: Vec::new(),
            dropped: 0,
            error: None,
        };
        let reply = agent.act(&envelope, &mut console);
        let reply = match reply {
            Ok(reply) => reply,
            Err(err @ (HarnessError::Transport(_) | HarnessError::Protocol(_))) => {
                aborted = Some(err.to_string());
                AgentReply::default()
            }
            Err(err) => return Err(err),
        };
        for line in &reply.commands {
            console.run(line);
        }
        let TurnConsole { issued, mut exchanges, dropped, error, .. } = console;
        if let Some(err) = error {
            return Err(err);
        }
        executed += exchanges.len();
        let wall_ms = started.elapsed().as_millis() as u64;
        session.record_telemetry(issued.len(), dropped, wall_ms, reply.telemetry.clone())?;
        let forced = session.end_turn()?;
        if let Some(result) = forced {
            forced_resumes += 1;
            exchanges.push(Exchange { command: "sim resume".into(), result, forced: true });
        }
        telemetry.push(TurnTelemetry {
            turn: envelope.turn,
            commands: issued,
            commands_executed: exchanges.iter().filter(|e| !e.forced).count(),
            commands_dropped: dropped,
            forced_resume: exchanges.iter().any(|e| e.forced),
            agent: reply.telemetry,
        });
        history.push_back(HistoryTurn { turn: envelope.turn, status, exchanges });
        while history.len() > k {
            history.pop_front();
        }
        if aborted.is_some() {
            break;
        }
    }
    session.save()?;

    let world = session.world();
    let report = EpisodeReport {
        schema: REPORT_SCHEMA.into(),
        agent: agent.name(),
        seed: session.meta().seed,
        outcome: world.outcome,
        final_funds_cents: funds_from_ledger(&world.ledger).expect("engine ledger starts with initial capital"),
        turns: session.meta().turn,
        commands_executed: executed,
        forced_resumes,
        final_state_hash: world.state_hash(),
        aborted,
        turn_telemetry: telemetry,
    };
    agent.finish(&report)?;
    Ok(report)
}

/// Re-issues the report's inbound command stream against a fresh world.
pub fn replay_transcript(report: &EpisodeReport, config: &BenchConfig) -> Result<Session, HarnessError> {
    let mut session = Session::in_memory("transcript", report.seed, config);
    let options = EpisodeOptions::from_config(config);
    let mut script = ScriptedAgent::new(report.turn_telemetry.iter().map(|t| t.commands.clone()).collect());
    let options = EpisodeOptions { max_turns: Some(report.turns), ..options };
    run_episode(&mut session, &mut script, options)?;
    Ok(session)
}
