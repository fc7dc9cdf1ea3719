use thiserror::Error;

use crate::domain::{Domain, TaskStatus};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("cannot read config {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Errors raised by engine operations. These are surfaced to agents as data,
/// so messages must never mention hidden client attributes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown employee {0}")]
    UnknownEmployee(String),
    #[error("task {task} is {status}; expected {expected}")]
    WrongStatus { task: String, status: TaskStatus, expected: &'static str },
    #[error("task requires prestige {required} in {domain}, company has {current:.2}")]
    PrestigeGate { domain: Domain, required: u32, current: f64 },
    #[error("task requires trust {required:.1} with {client}, current trust is {current:.2}")]
    TrustGate { client: String, required: f64, current: f64 },
    #[error("task {0} has no assigned employees")]
    NoAssignees(String),
    #[error("the episode is over ({0})")]
    EpisodeOver(String),
    #[error("active task count must be at least 1")]
    NoActiveTasks,
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownTask(_) => "unknown_task",
            EngineError::UnknownEmployee(_) => "unknown_employee",
            EngineError::WrongStatus { .. } => "invalid_status",
            EngineError::PrestigeGate { .. } => "prestige_gate",
            EngineError::TrustGate { .. } => "trust_gate",
            EngineError::NoAssignees(_) => "no_assignees",
            EngineError::EpisodeOver(_) => "episode_over",
            EngineError::NoActiveTasks => "no_active_tasks",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("unbalanced quotes in command line")]
    Tokenize,
    #[error("unknown command `{got}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownVerb { got: String, suggestion: Option<String> },
    #[error("`{verb}` requires {flag}")]
    MissingFlag { verb: &'static str, flag: &'static str },
    #[error("`{verb}` does not accept {flag}")]
    UnknownFlag { verb: &'static str, flag: String },
    #[error("{flag} given more than once")]
    DuplicateFlag { flag: String },
    #[error("{flag} expects a value")]
    MissingValue { flag: String },
    #[error("invalid value `{value}` for {flag}: {reason}")]
    BadValue { flag: &'static str, value: String, reason: String },
    #[error("malformed employee list `{0}`: expected comma-separated employee ids")]
    MalformedEmployees(String),
    #[error("unexpected argument `{0}`")]
    UnexpectedArgument(String),
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::UnknownVerb { .. } => "unknown_command",
            ParseError::MissingFlag { .. } => "missing_flag",
            ParseError::MalformedEmployees(_) => "malformed_employees",
            _ => "parse_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("ledger is empty")]
    Empty,
    #[error("ledger does not begin with an initial_capital entry")]
    MissingInitialCapital,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("triangular parameters must satisfy min <= mode <= max (got {min}, {mode}, {max})")]
pub struct TriangularError {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed {what} in {path}: {message}")]
    Format { what: &'static str, path: String, message: String },
    #[error(
        "snapshot {path} failed its integrity check (expected {expected}, found {found}); \
         restore it from the run log with `yc-bench replay --log <session>/run.log.jsonl --rebuild`"
    )]
    Corrupt { path: String, expected: String, found: String },
    #[error("session {0} is locked by another process")]
    Locked(String),
    #[error("no session at {0}; create one with `yc-bench session open --seed N`")]
    NotFound(String),
    #[error("scratchpad would hold {size} bytes, above the {cap}-byte cap")]
    ScratchpadOverflow { size: usize, cap: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl SessionError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SessionError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("agent transport failed: {0}")]
    Transport(String),
    #[error("agent sent a malformed reply: {0}")]
    Protocol(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("cannot read run log {path}: {message}")]
    Read { path: String, message: String },
    #[error("run log has a sequence gap at {expected} (found {found})")]
    Gap { expected: u64, found: u64 },
    #[error("run log lacks a header record")]
    MissingHeader,
    #[error("cannot aggregate an empty group")]
    EmptyGroup,
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}
