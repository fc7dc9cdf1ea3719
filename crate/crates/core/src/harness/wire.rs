//! The agent wire protocol: newline-delimited JSON over a child's stdio or a Unix socket.
//!
//! Harness to agent, one object per line:
//!
//! ```text
//! {"type":"hello","schema":"yc-bench/wire/v1","context_window":20,"max_commands_per_turn":64}
//! {"type":"turn","turn":1,"system_prompt":"...","history":[...],"status":{...}}
//! {"type":"episode_end","report":{...}}
//! ```
//!
//! Agent to harness, exactly one line per `turn` message:
//!
//! ```text
//! {"type":"reply","turn":1,"commands":["market browse","sim resume"],"telemetry":{"input_tokens":1200}}
//! ```
//!
//! `hello` and `episode_end` expect no reply. A reply that does not arrive within
//! the timeout counts as an empty batch; a late reply for an earlier turn is discarded.

use std::io::{BufRead, BufReader, Write};
use std::os::unix::net::UnixListener;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Agent, AgentReply, Console, EpisodeOptions, EpisodeReport, TurnEnvelope};
use crate::command::parse;
use crate::config::BenchConfig;
use crate::error::HarnessError;
use crate::session::{Session, Telemetry};

pub const WIRE_SCHEMA: &str = "yc-bench/wire/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HarnessMessage {
    Hello { schema: String, context_window: usize, max_commands_per_turn: usize },
    Turn(TurnEnvelope),
    EpisodeEnd { report: EpisodeReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentMessage {
    Reply {
        turn: u64,
        #[serde(default)]
        commands: Vec<String>,
        #[serde(default)]
        telemetry: Telemetry,
    },
}

/// Note attached to the telemetry of a turn whose reply timed out.
pub const TIMEOUT_NOTE: &str = "timeout";

/// An agent on the far side of a line-oriented byte stream.
pub struct LineAgent {
    name: String,
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    child: Option<Child>,
    hello: Option<HarnessMessage>,
}

impl LineAgent {
    pub fn new<R, W>(name: &str, reader: R, writer: W, timeout: Duration, options: EpisodeOptions) -> Self
    where
        R: std::io::Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        LineAgent {
            name: name.to_string(),
            writer: Some(Box::new(writer)),
            lines: rx,
            timeout,
            child: None,
            hello: Some(HarnessMessage::Hello {
                schema: WIRE_SCHEMA.into(),
                context_window: options.context_window,
                max_commands_per_turn: options.max_commands_per_turn,
            }),
        }
    }

    /// Launches `command_line` (split with shell quoting rules) and talks over its stdio.
    pub fn spawn(command_line: &str, timeout: Duration, options: EpisodeOptions) -> Result<Self, HarnessError> {
        let words = shlex::split(command_line)
            .filter(|w| !w.is_empty())
            .ok_or_else(|| HarnessError::Transport(format!("cannot parse agent command `{command_line}`")))?;
        let mut child = Command::new(&words[0])
            .args(&words[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| HarnessError::Transport(format!("cannot start `{command_line}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut agent = LineAgent::new(command_line, stdout, stdin, timeout, options);
        agent.child = Some(child);
        Ok(agent)
    }

    /// Binds `path` and waits up to `timeout` for one agent to connect.
    pub fn listen(path: &Path, timeout: Duration, options: EpisodeOptions) -> Result<Self, HarnessError> {
        let transport = |e: std::io::Error| HarnessError::Transport(format!("socket {}: {e}", path.display()));
        let listener = UnixListener::bind(path).map_err(transport)?;
        listener.set_nonblocking(true).map_err(transport)?;
        let deadline = Instant::now() + timeout;
        let stream = loop {
            match listener.accept() {
                Ok((stream, _)) => break stream,
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock && Instant::now() < deadline => {
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(transport(e)),
            }
        };
        stream.set_nonblocking(false).map_err(transport)?;
        let reader = stream.try_clone().map_err(transport)?;
        Ok(LineAgent::new(&format!("socket:{}", path.display()), reader, stream, timeout, options))
    }

    fn send(&mut self, message: &HarnessMessage) -> Result<(), HarnessError> {
        let writer = self.writer.as_mut().ok_or_else(|| HarnessError::Transport("agent channel closed".into()))?;
        let mut line = serde_json::to_string(message).expect("wire messages serialize");
        line.push('\n');
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| HarnessError::Transport(format!("cannot write to agent: {e}")))
    }

    fn receive(&mut self, turn: u64) -> Result<AgentReply, HarnessError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(HarnessError::Transport(format!("cannot read from agent: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    let telemetry = Telemetry { note: Some(TIMEOUT_NOTE.into()), ..Telemetry::default() };
                    return Ok(AgentReply { commands: Vec::new(), telemetry });
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(HarnessError::Transport("agent closed its output".into()));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let message: AgentMessage =
                serde_json::from_str(&line).map_err(|e| HarnessError::Protocol(format!("{e}: {line}")))?;
            let AgentMessage::Reply { turn: got, commands, telemetry } = message;
            if got < turn {
                continue;
            }
            if got > turn {
                return Err(HarnessError::Protocol(format!("reply for turn {got} while waiting for turn {turn}")));
            }
            return Ok(AgentReply { commands, telemetry });
        }
    }
}

impl Agent for LineAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn act(&mut self, envelope: &TurnEnvelope, _console: &mut dyn Console) -> Result<AgentReply, HarnessError> {
        if let Some(hello) = self.hello.take() {
            self.send(&hello)?;
        }
        self.send(&HarnessMessage::Turn(envelope.clone()))?;
        self.receive(envelope.turn)
    }

    fn finish(&mut self, report: &EpisodeReport) -> Result<(), HarnessError> {
        // The agent may already be gone; ending is best effort.
        let _ = self.send(&HarnessMessage::EpisodeEnd { report: report.clone() });
        self.writer = None;
        if let Some(child) = &mut self.child {
            let deadline = Instant::now() + Duration::from_secs(2);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return Ok(());
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
        Ok(())
    }
}

impl Drop for LineAgent {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            if let Ok(None) = child.try_wait() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub agent: String,
    pub turns: u64,
    pub checks: Vec<Check>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Plays `turns` turns of a seeded episode against `agent` and checks protocol behaviour.
pub fn conformance(agent: &mut dyn Agent, seed: u64, turns: u64, config: &BenchConfig) -> ConformanceReport {
    let mut session = Session::in_memory("conformance", seed, config);
    let options = EpisodeOptions { max_turns: Some(turns), ..EpisodeOptions::from_config(config) };
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.into(), passed, detail });
    };
    let report = match super::run_episode(&mut session, agent, options) {
        Ok(report) => report,
        Err(err) => {
            check("episode", false, err.to_string());
            return ConformanceReport { agent: agent.name(), turns: 0, checks };
        }
    };
    let transport_ok = report.aborted.as_deref().is_none_or(|a| a.starts_with("stopped after"));
    check("transport", transport_ok, report.aborted.clone().unwrap_or_else(|| "no errors".into()));
    check(
        "one reply per turn",
        report.turn_telemetry.len() as u64 == report.turns,
        format!("{} replies over {} turns", report.turn_telemetry.len(), report.turns),
    );
    let late: Vec<u64> = report
        .turn_telemetry
        .iter()
        .filter(|t| t.agent.note.as_deref() == Some(TIMEOUT_NOTE))
        .map(|t| t.turn)
        .collect();
    check("replies in time", late.is_empty(), format!("timed out on turns {late:?}"));
    let bad: Vec<String> =
        report.turn_telemetry.iter().flat_map(|t| &t.commands).filter(|c| parse(c).is_err()).cloned().collect();
    check("commands parse", bad.is_empty(), format!("{} unparseable: {bad:?}", bad.len()));
    let negative = report.turn_telemetry.iter().any(|t| t.agent.cost_usd.is_some_and(|c| c < 0.0 || !c.is_finite()));
    check("telemetry", !negative, "costs are finite and non-negative".into());
    ConformanceReport { agent: report.agent, turns: report.turns, checks }
}
