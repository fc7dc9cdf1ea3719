//! The agent command language: parsing, canonical formatting, and execution.

mod exec;
mod views;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, TaskStatus};
use crate::error::ParseError;

pub use exec::{execute, execute_line, render_status, CommandResult, ErrorBody};
pub use views::*;

/// Filter accepted by `task list --status`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusFilter {
    Active,
    Is(TaskStatus),
}

impl StatusFilter {
    pub fn matches(self, status: TaskStatus) -> bool {
        match self {
            StatusFilter::Active => status.is_active(),
            StatusFilter::Is(s) => s == status,
        }
    }
}

impl fmt::Display for StatusFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatusFilter::Active => f.write_str("active"),
            StatusFilter::Is(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    CompanyStatus,
    EmployeeList,
    MarketBrowse { domain: Option<Domain>, reward_min_cents: Option<i64>, limit: Option<usize> },
    TaskList { status: Option<StatusFilter> },
    TaskInspect { task_id: String },
    ClientList,
    ClientHistory,
    FinanceLedger,
    TaskAccept { task_id: String },
    TaskAssign { task_id: String, employees: Vec<String> },
    TaskDispatch { task_id: String },
    TaskCancel { task_id: String, reason: String },
    SimResume,
    ScratchpadWrite { content: String },
    ScratchpadAppend { content: String },
}

/// Every verb of the action space, in table order.
pub const VERBS: [&str; 15] = [
    "company status",
    "employee list",
    "market browse",
    "task list",
    "task inspect",
    "client list",
    "client history",
    "finance ledger",
    "task accept",
    "task assign",
    "task dispatch",
    "task cancel",
    "sim resume",
    "scratchpad write",
    "scratchpad append",
];

fn allowed_flags(verb: &str) -> &'static [&'static str] {
    match verb {
        "market browse" => &["--domain", "--reward-min-cents", "--limit"],
        "task list" => &["--status"],
        "task inspect" | "task accept" | "task dispatch" => &["--task-id"],
        "task assign" => &["--task-id", "--employees"],
        "task cancel" => &["--task-id", "--reason"],
        "scratchpad write" | "scratchpad append" => &["--content"],
        _ => &[],
    }
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::CompanyStatus => "company status",
            Command::EmployeeList => "employee list",
            Command::MarketBrowse { .. } => "market browse",
            Command::TaskList { .. } => "task list",
            Command::TaskInspect { .. } => "task inspect",
            Command::ClientList => "client list",
            Command::ClientHistory => "client history",
            Command::FinanceLedger => "finance ledger",
            Command::TaskAccept { .. } => "task accept",
            Command::TaskAssign { .. } => "task assign",
            Command::TaskDispatch { .. } => "task dispatch",
            Command::TaskCancel { .. } => "task cancel",
            Command::SimResume => "sim resume",
            Command::ScratchpadWrite { .. } => "scratchpad write",
            Command::ScratchpadAppend { .. } => "scratchpad append",
        }
    }

    /// Observe commands never change the world.
    pub fn is_observe(&self) -> bool {
        matches!(
            self,
            Command::CompanyStatus
                | Command::EmployeeList
                | Command::MarketBrowse { .. }
                | Command::TaskList { .. }
                | Command::TaskInspect { .. }
                | Command::ClientList
                | Command::ClientHistory
                | Command::FinanceLedger
        )
    }

    pub fn is_scratchpad(&self) -> bool {
        matches!(self, Command::ScratchpadWrite { .. } | Command::ScratchpadAppend { .. })
    }

    fn flags(&self) -> Vec<(&'static str, String)> {
        match self {
            Command::MarketBrowse { domain, reward_min_cents, limit } => {
                let mut out = Vec::new();
                if let Some(d) = domain {
                    out.push(("--domain", d.to_string()));
                }
                if let Some(r) = reward_min_cents {
                    out.push(("--reward-min-cents", r.to_string()));
                }
                if let Some(l) = limit {
                    out.push(("--limit", l.to_string()));
                }
                out
            }
            Command::TaskList { status } => status.iter().map(|s| ("--status", s.to_string())).collect(),
            Command::TaskInspect { task_id } | Command::TaskAccept { task_id } | Command::TaskDispatch { task_id } => {
                vec![("--task-id", task_id.clone())]
            }
            Command::TaskAssign { task_id, employees } => {
                vec![("--task-id", task_id.clone()), ("--employees", employees.join(","))]
            }
            Command::TaskCancel { task_id, reason } => vec![("--task-id", task_id.clone()), ("--reason", reason.clone())],
            Command::ScratchpadWrite { content } | Command::ScratchpadAppend { content } => {
                vec![("--content", content.clone())]
            }
            _ => Vec::new(),
        }
    }
}

fn quote(word: &str) -> String {
    if word.is_empty() {
        return "''".to_string();
    }
    shlex::try_quote(word).map(|q| q.into_owned()).unwrap_or_else(|_| format!("'{}'", word.replace('\0', "")))
}

/// Canonical command line (without the program name).
impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())?;
        for (flag, value) in self.flags() {
            write!(f, " {flag} {}", quote(&value))?;
        }
        Ok(())
    }
}

fn suggest(got: &str) -> Option<String> {
    VERBS
        .iter()
        .map(|v| (strsim::levenshtein(got, v), *v))
        .min()
        .filter(|(dist, _)| *dist <= 4)
        .map(|(_, v)| v.to_string())
}

fn id_value(flag: &'static str, value: &str) -> Result<String, ParseError> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(ParseError::BadValue { flag, value: value.into(), reason: "must not be empty".into() });
    }
    Ok(trimmed.to_string())
}

fn employee_list(value: &str) -> Result<Vec<String>, ParseError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| {
            let id = part.trim();
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                Err(ParseError::MalformedEmployees(value.to_string()))
            } else {
                Ok(id.to_string())
            }
        })
        .collect()
}

/// Parses one command line. A leading `yc-bench` program name is ignored.
pub fn parse(line: &str) -> Result<Command, ParseError> {
    let mut tokens = shlex::split(line).ok_or(ParseError::Tokenize)?;
    if tokens.first().map(String::as_str) == Some("yc-bench") {
        tokens.remove(0);
    }
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let head = tokens.iter().take(2).cloned().collect::<Vec<_>>().join(" ");
    let Some(&verb) = VERBS.iter().find(|v| **v == head) else {
        return Err(ParseError::UnknownVerb { suggestion: suggest(&head), got: head });
    };

    let allowed = allowed_flags(verb);
    let mut flags: BTreeMap<&'static str, String> = BTreeMap::new();
    let mut rest = tokens.into_iter().skip(2);
    while let Some(token) = rest.next() {
        let Some(stripped) = token.strip_prefix("--") else {
            return Err(ParseError::UnexpectedArgument(token));
        };
        let (name, inline) = match stripped.split_once('=') {
            Some((n, v)) => (format!("--{n}"), Some(v.to_string())),
            None => (format!("--{stripped}"), None),
        };
        let Some(&flag) = allowed.iter().find(|f| **f == name) else {
            return Err(ParseError::UnknownFlag { verb, flag: name });
        };
        let value = match inline {
            Some(v) => v,
            None => rest.next().ok_or_else(|| ParseError::MissingValue { flag: name.clone() })?,
        };
        if flags.insert(flag, value).is_some() {
            return Err(ParseError::DuplicateFlag { flag: name });
        }
    }

    let mut take = |flag: &'static str| flags.remove(flag);
    let require = |value: Option<String>, flag: &'static str| value.ok_or(ParseError::MissingFlag { verb, flag });

    let command = match verb {
        "company status" => Command::CompanyStatus,
        "employee list" => Command::EmployeeList,
        "market browse" => {
            let domain = take("--domain")
                .map(|v| v.parse::<Domain>().map_err(|reason| ParseError::BadValue { flag: "--domain", value: v, reason }))
                .transpose()?;
            let reward_min_cents = take("--reward-min-cents")
                .map(|v| {
                    v.trim().parse::<i64>().map_err(|e| ParseError::BadValue {
                        flag: "--reward-min-cents",
                        value: v.clone(),
                        reason: e.to_string(),
                    })
                })
                .transpose()?;
            let limit = take("--limit")
                .map(|v| match v.trim().parse::<usize>() {
                    Ok(n) if n > 0 => Ok(n),
                    Ok(_) => Err(ParseError::BadValue { flag: "--limit", value: v, reason: "must be positive".into() }),
                    Err(e) => Err(ParseError::BadValue { flag: "--limit", value: v, reason: e.to_string() }),
                })
                .transpose()?;
            Command::MarketBrowse { domain, reward_min_cents, limit }
        }
        "task list" => {
            let status = take("--status")
                .map(|v| {
                    if v == "active" {
                        return Ok(StatusFilter::Active);
                    }
                    v.parse::<TaskStatus>()
                        .map(StatusFilter::Is)
                        .map_err(|reason| ParseError::BadValue { flag: "--status", value: v, reason })
                })
                .transpose()?;
            Command::TaskList { status }
        }
        "task inspect" => Command::TaskInspect { task_id: id_value("--task-id", &require(take("--task-id"), "--task-id")?)? },
        "client list" => Command::ClientList,
        "client history" => Command::ClientHistory,
        "finance ledger" => Command::FinanceLedger,
        "task accept" => Command::TaskAccept { task_id: id_value("--task-id", &require(take("--task-id"), "--task-id")?)? },
        "task assign" => {
            let task_id = id_value("--task-id", &require(take("--task-id"), "--task-id")?)?;
            let employees = employee_list(&require(take("--employees"), "--employees")?)?;
            Command::TaskAssign { task_id, employees }
        }
        "task dispatch" => {
            Command::TaskDispatch { task_id: id_value("--task-id", &require(take("--task-id"), "--task-id")?)? }
        }
        "task cancel" => {
            let task_id = id_value("--task-id", &require(take("--task-id"), "--task-id")?)?;
            let reason = require(take("--reason"), "--reason")?;
            Command::TaskCancel { task_id, reason }
        }
        "sim resume" => Command::SimResume,
        "scratchpad write" => Command::ScratchpadWrite { content: require(take("--content"), "--content")? },
        "scratchpad append" => Command::ScratchpadAppend { content: require(take("--content"), "--content")? },
        _ => unreachable!("verb table and match arms agree"),
    };
    Ok(command)
}
