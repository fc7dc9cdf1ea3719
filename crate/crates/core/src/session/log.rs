//! The append-only run log: one JSON record per line, numbered without gaps.
//!
//! | record        | written when                                   |
//! |---------------|------------------------------------------------|
//! | `header`      | once, at session creation (seq 0)              |
//! | `turn`        | a turn starts and the status is rendered       |
//! | `command`     | any command line is executed (forced or not)   |
//! | `event`       | the engine reports an occurrence               |
//! | `ledger`      | funds move                                     |
//! | `task_closed` | a booked task completes, fails, or is cancelled|
//! | `scratchpad`  | a scratchpad write or append succeeds          |
//! | `turn_end`    | a turn ends                                    |
//! | `telemetry`   | the harness records agent metadata for a turn  |
//! | `episode_end` | the episode terminates                         |

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::command::StatusObservation;
use crate::config::BenchConfig;
use crate::domain::LedgerEntry;
use crate::engine::events::{DigestEntry, TaskFacts};
use crate::error::SessionError;
use crate::money::Money;
use crate::state::{LogItem, Outcome};

pub const RUN_LOG_SCHEMA: &str = "yc-bench/runlog/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScratchpadOp {
    Write,
    Append,
}

/// Agent-supplied metadata for one turn. Absent figures stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub cost_usd: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header {
        schema: String,
        session_id: String,
        seed: u64,
        config: Box<BenchConfig>,
        start: Timestamp,
        state_hash: String,
    },
    Turn {
        turn: u64,
        status: StatusObservation,
    },
    Command {
        turn: u64,
        line: String,
        verb: Option<String>,
        ok: bool,
        error_code: Option<String>,
        forced: bool,
    },
    Event(DigestEntry),
    Ledger(LedgerEntry),
    TaskClosed(TaskFacts),
    Scratchpad {
        turn: u64,
        at: Timestamp,
        op: ScratchpadOp,
        content: String,
        bytes: usize,
    },
    TurnEnd {
        turn: u64,
        idle_turns: u32,
    },
    Telemetry {
        turn: u64,
        commands_issued: usize,
        commands_dropped: usize,
        wall_ms: u64,
        #[serde(flatten)]
        agent: Telemetry,
    },
    EpisodeEnd {
        outcome: Outcome,
        final_funds_cents: Money,
        turns: u64,
        /// Trust per client at termination.
        trust: BTreeMap<String, f64>,
        state_hash: String,
    },
}

impl From<LogItem> for Record {
    fn from(item: LogItem) -> Self {
        match item {
            LogItem::Event(e) => Record::Event(e),
            LogItem::Ledger(l) => Record::Ledger(l),
            LogItem::TaskClosed(t) => Record::TaskClosed(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub body: Record,
}

/// Appends records to a log file, numbering them.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    file: File,
    next_seq: u64,
    bytes: u64,
}

impl LogWriter {
    /// Opens `path` for appending, discarding anything past `bytes`.
    pub fn open(path: &Path, next_seq: u64, bytes: u64) -> Result<Self, SessionError> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| SessionError::io(path, e))?;
        let len = file.metadata().map_err(|e| SessionError::io(path, e))?.len();
        if len > bytes {
            // Records past the last committed snapshot belong to an interrupted command.
            file.set_len(bytes).map_err(|e| SessionError::io(path, e))?;
        } else if len < bytes {
            return Err(SessionError::Format {
                what: "run log",
                path: path.display().to_string(),
                message: format!("log holds {len} bytes but the snapshot expects {bytes}"),
            });
        }
        Ok(LogWriter { path: path.to_path_buf(), file, next_seq, bytes })
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, body: Record) -> Result<(), SessionError> {
        let record = LogRecord { seq: self.next_seq, body };
        let mut line = serde_json::to_string(&record).expect("log records serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| SessionError::io(&self.path, e))?;
        self.next_seq += 1;
        self.bytes += line.len() as u64;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), SessionError> {
        self.file.flush().and_then(|_| self.file.sync_data()).map_err(|e| SessionError::io(&self.path, e))
    }
}

/// Records read from a log, plus a note when the log ends in a torn or invalid line
/// or skips a sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct LogContents {
    pub records: Vec<LogRecord>,
    pub problem: Option<LogProblem>,
}

/// Why reading stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogProblem {
    /// A line that is not a record, typically a torn final write.
    Malformed { line: usize, message: String },
    Gap { expected: u64, found: u64 },
}

impl std::fmt::Display for LogProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogProblem::Malformed { line, message } => write!(f, "line {line}: {message}"),
            LogProblem::Gap { expected, found } => write!(f, "sequence gap: expected {expected}, found {found}"),
        }
    }
}

/// Reads every well-formed record, stopping at the first defect.
pub fn read_log(path: &Path) -> Result<LogContents, SessionError> {
    let file = File::open(path).map_err(|e| SessionError::io(path, e))?;
    let mut records = Vec::new();
    let mut problem = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| SessionError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                problem = Some(LogProblem::Malformed { line: n + 1, message: e.to_string() });
                break;
            }
        };
        let expected = records.len() as u64;
        if record.seq != expected {
            problem = Some(LogProblem::Gap { expected, found: record.seq });
            break;
        }
        records.push(record);
    }
    Ok(LogContents { records, problem })
}

/// Like [`read_log`] but treats any defect as an error.
pub fn read_log_strict(path: &Path) -> Result<Vec<LogRecord>, SessionError> {
    let contents = read_log(path)?;
    match contents.problem {
        None => Ok(contents.records),
        Some(problem) => {
            Err(SessionError::Format { what: "run log", path: path.display().to_string(), message: problem.to_string() })
        }
    }
}
