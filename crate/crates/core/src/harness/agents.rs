//! Built-in agents.

use super::{Agent, AgentReply, Console, TurnEnvelope};
use crate::error::HarnessError;

/// Each turn: take the highest-reward task the company may accept, put the whole
/// roster on it, and advance the clock.
#[derive(Debug, Clone)]
pub struct GreedyBaseline {
    employees: Vec<String>,
}

impl GreedyBaseline {
    pub fn new(roster_size: usize) -> Self {
        GreedyBaseline { employees: (1..=roster_size).map(|i| format!("Emp_{i}")).collect() }
    }

    /// The command lines for one turn given the browse result's `data` field.
    pub fn plan(&self, browse: &serde_json::Value) -> Vec<String> {
        let top = browse["tasks"]
            .as_array()
            .into_iter()
            .flatten()
            .find(|t| t["eligible"] == true)
            .and_then(|t| t["task_id"].as_str());
        let Some(task) = top else {
            return vec!["sim resume".into()];
        };
        vec![
            format!("task accept --task-id {task}"),
            format!("task assign --task-id {task} --employees {}", self.employees.join(",")),
            format!("task dispatch --task-id {task}"),
            "sim resume".into(),
        ]
    }
}

impl Agent for GreedyBaseline {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn act(&mut self, _envelope: &TurnEnvelope, console: &mut dyn Console) -> Result<AgentReply, HarnessError> {
        let Some(browse) = console.run("market browse") else {
            return Ok(AgentReply::default());
        };
        for line in self.plan(&browse.data) {
            match console.run(&line) {
                Some(result) if result.ok || line == "sim resume" => {}
                // A refused step means nothing is left to staff; just advance.
                Some(_) => {
                    console.run("sim resume");
                    break;
                }
                None => break,
            }
        }
        Ok(AgentReply::default())
    }
}

/// Never issues a command.
#[derive(Debug, Clone, Default)]
pub struct SilentAgent;

impl Agent for SilentAgent {
    fn name(&self) -> String {
        "silent".into()
    }

    fn act(&mut self, _envelope: &TurnEnvelope, _console: &mut dyn Console) -> Result<AgentReply, HarnessError> {
        Ok(AgentReply::default())
    }
}

/// Replays fixed per-turn batches, then stays silent.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAgent {
    turns: Vec<Vec<String>>,
    next: usize,
}

impl ScriptedAgent {
    pub fn new(turns: Vec<Vec<String>>) -> Self {
        ScriptedAgent { turns, next: 0 }
    }
}

impl Agent for ScriptedAgent {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn act(&mut self, _envelope: &TurnEnvelope, _console: &mut dyn Console) -> Result<AgentReply, HarnessError> {
        let commands = self.turns.get(self.next).cloned().unwrap_or_default();
        self.next += 1;
        Ok(AgentReply { commands, ..AgentReply::default() })
    }
}
