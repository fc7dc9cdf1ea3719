//! A reference agent for the wire protocol: reads harness messages on stdin and
//! answers every turn on stdout.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use yc_bench_core::harness::wire::{AgentMessage, HarnessMessage};
use yc_bench_core::session::Telemetry;

#[derive(Clone, Copy, ValueEnum)]
pub enum Policy {
    /// `sim resume` every turn.
    Resume,
    /// Never send a command; rely on auto-advance.
    Silent,
    /// Send the batches listed in `--script`, one JSON array per line, then go silent.
    Script,
}

#[derive(Args)]
pub struct AgentArgs {
    #[arg(long, value_enum, default_value = "resume")]
    policy: Policy,
    #[arg(long, required_if_eq("policy", "script"))]
    script: Option<PathBuf>,
    /// Cost reported for each turn, to exercise cost accounting.
    #[arg(long)]
    cost_per_turn: Option<f64>,
}

pub fn serve(args: AgentArgs) -> Result<ExitCode> {
    let mut script = match &args.script {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<Vec<String>>)
            .collect::<Result<Vec<_>, _>>()
            .context("script lines must be JSON arrays of command strings")?,
        None => Vec::new(),
    }
    .into_iter();
    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lines() {
        let message: HarnessMessage = serde_json::from_str(&line?).context("malformed harness message")?;
        let envelope = match message {
            HarnessMessage::Hello { .. } => continue,
            HarnessMessage::EpisodeEnd { .. } => break,
            HarnessMessage::Turn(envelope) => envelope,
        };
        let commands = match args.policy {
            Policy::Resume => vec!["sim resume".to_string()],
            Policy::Silent => Vec::new(),
            Policy::Script => script.next().unwrap_or_default(),
        };
        let telemetry = Telemetry { cost_usd: args.cost_per_turn, ..Telemetry::default() };
        let reply = AgentMessage::Reply { turn: envelope.turn, commands, telemetry };
        serde_json::to_writer(&mut stdout, &reply)?;
        writeln!(stdout)?;
        stdout.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}
