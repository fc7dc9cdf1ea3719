use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::views::{
    ClientHistoryView, ClientView, EmployeeView, LedgerView, MarketTaskView, StatusObservation, TaskDetailView,
    TaskSummaryView,
};
use super::{parse, Command};
use crate::error::{EngineError, SessionError};
use crate::scratchpad::Scratchpad;
use crate::state::WorldState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// The structured reply to one command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResult {
    pub ok: bool,
    pub command: String,
    pub data: Value,
    pub error: Option<ErrorBody>,
}

impl CommandResult {
    fn success(command: &Command, data: Value) -> Self {
        CommandResult { ok: true, command: command.to_string(), data, error: None }
    }

    fn failure(command: String, code: &str, message: String) -> Self {
        CommandResult { ok: false, command, data: Value::Null, error: Some(ErrorBody { code: code.into(), message }) }
    }

    /// Compact JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("command results serialize");
        serde_json::to_string(&value).expect("values serialize")
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("views serialize")
}

fn engine_failure(command: &Command, err: EngineError) -> CommandResult {
    CommandResult::failure(command.to_string(), err.code(), err.to_string())
}

/// Parses and executes one line; parse errors become error results.
pub fn execute_line(world: &mut WorldState, pad: &mut Scratchpad, line: &str) -> CommandResult {
    match parse(line) {
        Ok(command) => execute(world, pad, &command),
        Err(err) => CommandResult::failure(line.trim().to_string(), err.code(), err.to_string()),
    }
}

pub fn execute(world: &mut WorldState, pad: &mut Scratchpad, command: &Command) -> CommandResult {
    if command.is_observe() {
        return match observe(world, command) {
            Ok(data) => CommandResult::success(command, data),
            Err(err) => engine_failure(command, err),
        };
    }
    match act(world, pad, command) {
        Ok(data) => CommandResult::success(command, data),
        Err(result) => result,
    }
}

fn observe(world: &WorldState, command: &Command) -> Result<Value, EngineError> {
    let value = match command {
        Command::CompanyStatus => to_value(&StatusObservation::of(world)),
        Command::EmployeeList => {
            let load = world.dispatched_load();
            let views: Vec<_> = world.roster.iter().map(|e| EmployeeView::of(e, &load)).collect();
            json!({ "employees": views })
        }
        Command::MarketBrowse { domain, reward_min_cents, limit } => {
            let mut tasks: Vec<_> = world
                .market
                .iter()
                .filter(|t| meets_prestige(world, t))
                .filter(|t| domain.is_none_or(|d| t.domain_work.contains_key(&d)))
                .filter(|t| reward_min_cents.is_none_or(|min| t.advertised_reward.cents() >= min))
                .collect();
            tasks.sort_by(|a, b| b.advertised_reward.cmp(&a.advertised_reward).then_with(|| a.id.cmp(&b.id)));
            let cap = world.config.market.browse_limit;
            let shown = limit.unwrap_or(cap).min(cap);
            let total = tasks.len();
            let views: Vec<_> = tasks.into_iter().take(shown).map(|t| MarketTaskView::of(world, t)).collect();
            json!({ "matching": total, "tasks": views })
        }
        Command::TaskList { status } => {
            let views: Vec<_> = world
                .book
                .iter()
                .filter(|t| status.is_none_or(|s| s.matches(t.status)))
                .map(TaskSummaryView::of)
                .collect();
            json!({ "tasks": views })
        }
        Command::TaskInspect { task_id } => {
            let task = world.task(task_id).ok_or_else(|| EngineError::UnknownTask(task_id.clone()))?;
            to_value(&TaskDetailView::of(task))
        }
        Command::ClientList => {
            let views: Vec<_> = world
                .clients
                .iter()
                .map(|c| ClientView { client_id: c.id.clone(), trust: c.trust, tier: c.trust.floor() as u32 })
                .collect();
            json!({ "clients": views })
        }
        Command::ClientHistory => {
            let views: Vec<_> = world
                .clients
                .iter()
                .map(|c| ClientHistoryView {
                    client_id: c.id.clone(),
                    completions: c.completions,
                    failures: c.failures,
                    tasks: c.history.clone(),
                })
                .collect();
            json!({ "clients": views })
        }
        Command::FinanceLedger => to_value(&LedgerView { funds_cents: world.funds, entries: world.ledger.clone() }),
        _ => unreachable!("only observe commands reach here"),
    };
    Ok(value)
}

fn act(world: &mut WorldState, pad: &mut Scratchpad, command: &Command) -> Result<Value, CommandResult> {
    let fail = |err: EngineError| engine_failure(command, err);
    match command {
        Command::TaskAccept { task_id } => {
            world.accept_task(task_id).map_err(fail)?;
            let task = world.task(task_id).expect("accepted task is booked");
            Ok(json!({ "task_id": task_id, "status": task.status, "deadline": task.deadline }))
        }
        Command::TaskAssign { task_id, employees } => {
            world.assign(task_id, employees).map_err(fail)?;
            let task = world.task(task_id).expect("assigned task is booked");
            Ok(json!({ "task_id": task_id, "assignees": task.assignees }))
        }
        Command::TaskDispatch { task_id } => {
            world.dispatch(task_id).map_err(fail)?;
            Ok(json!({ "task_id": task_id, "status": "dispatched" }))
        }
        Command::TaskCancel { task_id, reason } => {
            world.cancel_task(task_id, reason).map_err(fail)?;
            Ok(json!({ "task_id": task_id, "status": "cancelled", "prestige": world.prestige }))
        }
        Command::SimResume => {
            let events = world.resume().map_err(fail)?;
            Ok(json!({
                "timestamp": world.clock.now,
                "funds_cents": world.funds,
                "events": events,
                "outcome": world.outcome,
            }))
        }
        Command::ScratchpadWrite { content } | Command::ScratchpadAppend { content } => {
            if let Some(outcome) = world.outcome {
                return Err(fail(EngineError::EpisodeOver(outcome.to_string())));
            }
            let written = match command {
                Command::ScratchpadWrite { .. } => pad.write(content),
                _ => pad.append(content),
            };
            written.map_err(|err: SessionError| {
                CommandResult::failure(command.to_string(), "scratchpad_overflow", err.to_string())
            })?;
            Ok(json!({ "bytes": pad.content().len(), "cap_bytes": pad.cap_bytes() }))
        }
        _ => unreachable!("observe commands are handled separately"),
    }
}

/// Browse lists only tasks whose prestige requirement the company already meets.
fn meets_prestige(world: &WorldState, task: &crate::domain::TaskRecord) -> bool {
    task.domains().all(|d| world.prestige.get(d) + crate::state::EPS >= f64::from(task.required_prestige))
}

/// The turn-start observation. Clears the event digest.
pub fn render_status(world: &mut WorldState) -> StatusObservation {
    let status = StatusObservation::of(world);
    world.digest.clear();
    status
}
