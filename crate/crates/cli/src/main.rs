//! `yc-bench`: the agent-facing command line, the episode harness, and analytics.
//!
//! Agent commands (`company status`, `market browse`, `task accept`, ...) run
//! against the session selected by `--session` or `YC_SESSION_DIR` and print one
//! JSON result. Everything else is for operators.

mod agent;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use yc_bench_core::analytics::{self, tables, LabelledRun};
use yc_bench_core::config::DEFAULT_PRESET;
use yc_bench_core::harness::wire::{conformance, LineAgent};
use yc_bench_core::harness::{run_episode, Agent, EpisodeOptions, GreedyBaseline, SilentAgent};
use yc_bench_core::session::{self, Record, Session};
use yc_bench_core::worldgen::generate_world;
use yc_bench_core::{BenchConfig, WorldState};

#[derive(Parser)]
#[command(name = "yc-bench", version, about = "A year-long startup simulation for evaluating agents")]
struct Cli {
    /// Session directory; defaults to $YC_SESSION_DIR.
    #[arg(long, global = true)]
    session: Option<PathBuf>,

    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Create or inspect the active session.
    #[command(subcommand)]
    Session(SessionCmd),
    /// Play whole episodes against a built-in or external agent.
    Run(RunArgs),
    /// Turn run logs into statistics tables.
    Stats(StatsArgs),
    /// Re-execute a run log and compare the final state.
    Replay(ReplayArgs),
    /// Check an external agent against the wire protocol.
    Conformance(ConformanceArgs),
    /// Print the default configuration.
    #[command(subcommand)]
    Config(ConfigCmd),
    /// A minimal wire-protocol agent on stdin/stdout.
    Agent(agent::AgentArgs),
    /// An agent command, e.g. `market browse --limit 5`.
    #[command(external_subcommand)]
    Command(Vec<String>),
}

#[derive(Subcommand)]
enum SessionCmd {
    /// Create the session (or reopen it) and start turn 1.
    Open {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// End the current turn (forcing `sim resume` after too many idle turns) and start the next.
    NextTurn,
    /// Print the session's bookkeeping.
    Show,
}

#[derive(Subcommand)]
enum ConfigCmd {
    Default,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Greedy,
    Silent,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AgentChoice {
    /// A built-in policy.
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Launch this command and talk to it over stdin/stdout.
    #[arg(long)]
    model_cmd: Option<String>,
    /// Wait for an agent to connect to this Unix socket.
    #[arg(long)]
    socket: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    agent: AgentChoice,
    /// Seeds to run, one episode each.
    #[arg(long = "seed", default_values_t = [1u64], num_args = 1..)]
    seeds: Vec<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    context_window: Option<usize>,
    /// Directory that receives one session directory per seed.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Seconds to wait for an external agent's reply.
    #[arg(long, default_value_t = 300.0)]
    timeout_secs: f64,
    #[arg(long)]
    max_turns: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    /// Run logs or session directories, optionally as LABEL=PATH.
    #[arg(required = true)]
    logs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Skip adversarial attribution even when the world is available.
    #[arg(long)]
    public_only: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Rewrite the session snapshot from the replayed state.
    #[arg(long)]
    rebuild: bool,
}

#[derive(Args)]
struct ConformanceArgs {
    #[arg(long, conflicts_with = "socket", required_unless_present = "socket")]
    model_cmd: Option<String>,
    #[arg(long)]
    socket: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    turns: u64,
    #[arg(long, default_value_t = 30.0)]
    timeout_secs: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<BenchConfig> {
    Ok(match path {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    })
}

fn session_dir(flag: Option<&Path>) -> Result<PathBuf> {
    session::resolve_dir(flag).context("no session selected; pass --session DIR or set YC_SESSION_DIR")
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Top::Command(words) => agent_command(cli.session.as_deref(), &words),
        Top::Session(cmd) => session_command(cli.session.as_deref(), cmd),
        Top::Run(args) => run(args),
        Top::Stats(args) => stats(args),
        Top::Replay(args) => replay(args),
        Top::Conformance(args) => check_conformance(args),
        Top::Config(ConfigCmd::Default) => {
            print!("{DEFAULT_PRESET}");
            Ok(ExitCode::SUCCESS)
        }
        Top::Agent(args) => agent::serve(args),
    }
}

fn agent_command(flag: Option<&Path>, words: &[String]) -> Result<ExitCode> {
    let line = shlex::try_join(words.iter().map(String::as_str)).context("argument contains a NUL byte")?;
    let mut s = Session::open(&session_dir(flag)?)?;
    let result = s.execute(&line)?;
    println!("{}", result.to_json());
    Ok(if result.ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn session_command(flag: Option<&Path>, cmd: SessionCmd) -> Result<ExitCode> {
    let dir = session_dir(flag)?;
    match cmd {
        SessionCmd::Open { seed, config } => {
            let config = load_config(config.as_deref())?;
            let mut s = Session::open_or_create(&dir, seed, &config)?;
            if s.meta().turn == 0 {
                s.begin_turn()?;
            }
            print_json(&json!({"session": dir, "seed": seed, "turn": s.meta().turn, "state_hash": s.state_hash()}))?;
        }
        SessionCmd::NextTurn => {
            let mut s = Session::open(&dir)?;
            if s.is_over() {
                print_json(&json!({"turn": s.meta().turn, "outcome": s.world().outcome}))?;
                return Ok(ExitCode::from(2));
            }
            let forced = s.end_turn()?;
            let status = if s.is_over() { None } else { Some(s.begin_turn()?) };
            print_json(&json!({
                "turn": s.meta().turn,
                "forced_resume": forced.is_some(),
                "status": status,
                "outcome": s.world().outcome,
            }))?;
        }
        SessionCmd::Show => {
            let (meta, scratchpad, world) = session::load_snapshot(&dir)?;
            print_json(&json!({
                "meta": meta,
                "scratchpad_bytes": scratchpad.content().len(),
                "state_hash": world.state_hash(),
                "outcome": world.outcome,
            }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn make_agent(choice: &AgentChoice, timeout: Duration, options: EpisodeOptions, roster: usize) -> Result<Box<dyn Agent>> {
    Ok(match (&choice.builtin, &choice.model_cmd, &choice.socket) {
        (Some(Builtin::Greedy), _, _) => Box::new(GreedyBaseline::new(roster)),
        (Some(Builtin::Silent), _, _) => Box::new(SilentAgent),
        (_, Some(cmd), _) => Box::new(LineAgent::spawn(cmd, timeout, options)?),
        (_, _, Some(path)) => Box::new(LineAgent::listen(path, timeout, options)?),
        _ => bail!("choose an agent with --builtin, --model-cmd, or --socket"),
    })
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(k) = args.context_window {
        config.memory.context_window = k;
    }
    config.check()?;
    let timeout = Duration::from_secs_f64(args.timeout_secs);
    let mut failed = false;
    for &seed in &args.seeds {
        let dir = args.out.join(format!("seed-{seed}"));
        let mut s = Session::create(&dir, seed, &config)?;
        s.autosave = false;
        let options = EpisodeOptions { max_turns: args.max_turns, ..EpisodeOptions::from_config(&config) };
        let mut agent = make_agent(&args.agent, timeout, options, config.workforce.employees)?;
        let report = run_episode(&mut s, agent.as_mut(), options)?;
        let path = dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
        failed |= report.aborted.as_deref().is_some_and(|a| !a.starts_with("stopped after"));
        print_json(&json!({
            "seed": seed,
            "session": dir,
            "agent": report.agent,
            "outcome": report.outcome,
            "final_funds_cents": report.final_funds_cents,
            "turns": report.turns,
            "aborted": report.aborted,
            "state_hash": report.final_state_hash,
        }))?;
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

/// The world whose hidden client flags attribute adversarial tasks: the session's
/// snapshot when present, else the world regenerated from the log header.
fn privileged_world(log: &Path, records: &[session::LogRecord]) -> Option<WorldState> {
    let Some(Record::Header { seed, config, .. }) = records.first().map(|r| &r.body) else {
        return None;
    };
    let from_snapshot = log
        .parent()
        .and_then(|dir| session::load_snapshot(dir).ok())
        .map(|(_, _, world)| world)
        .filter(|w| w.seed == *seed);
    Some(from_snapshot.unwrap_or_else(|| generate_world(*seed, config)))
}

fn stats(args: StatsArgs) -> Result<ExitCode> {
    let mut runs = Vec::new();
    for arg in &args.logs {
        let (label, path) = match arg.split_once('=') {
            Some((label, path)) if !label.is_empty() => (Some(label), PathBuf::from(path)),
            _ => (None, PathBuf::from(arg)),
        };
        let log = if path.is_dir() { path.join(session::LOG_FILE) } else { path };
        let world = if args.public_only {
            None
        } else {
            let records = analytics::load_run(&log)?.records;
            privileged_world(&log, &records)
        };
        let run = LabelledRun::from_log(&log, label, world.as_ref()).with_context(|| format!("reading {}", log.display()))?;
        runs.push(run);
    }
    let groups = analytics::aggregate(&runs)?;
    tables::write_tables(&args.out, &runs, &groups)?;
    for g in &groups {
        print_json(&json!({
            "rank": g.rank,
            "label": g.label,
            "runs": g.runs,
            "final_funds_mean_cents": g.final_funds_cents.mean,
            "bankrupt": g.bankrupt,
        }))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let replayed = session::replay(&args.log)?;
    let hash = replayed.session.state_hash();
    let records = replayed.records;
    let logged = replayed.logged_final_hash.clone();
    let dir = args.log.parent().unwrap_or(Path::new("."));
    let snapshot = dir.join(session::SNAPSHOT_FILE);
    let snapshot_hash = match session::load_snapshot(dir) {
        Ok((_, _, w)) => Some(w.state_hash()),
        Err(_) if snapshot.exists() => Some("unreadable".to_string()),
        Err(_) => None,
    };
    if args.rebuild {
        drop(replayed.rebuild_into(dir)?);
    } else {
        drop(replayed);
    }
    let matches_log = logged.as_ref().is_none_or(|h| *h == hash);
    let matches_snapshot = snapshot_hash.as_ref().map(|h| *h == hash);
    print_json(&json!({
        "records": records,
        "state_hash": hash,
        "logged_final_hash": logged,
        "snapshot_hash": snapshot_hash,
        "matches_log": matches_log,
        "matches_snapshot": matches_snapshot,
        "rebuilt": args.rebuild,
    }))?;
    let consistent = matches_log && (args.rebuild || matches_snapshot != Some(false));
    Ok(if consistent { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn check_conformance(args: ConformanceArgs) -> Result<ExitCode> {
    let config = BenchConfig::default();
    let options = EpisodeOptions::from_config(&config);
    let timeout = Duration::from_secs_f64(args.timeout_secs);
    let mut agent = match (&args.model_cmd, &args.socket) {
        (Some(cmd), _) => LineAgent::spawn(cmd, timeout, options)?,
        (None, Some(path)) => LineAgent::listen(path, timeout, options)?,
        (None, None) => bail!("pass --model-cmd or --socket"),
    };
    let report = conformance(&mut agent, args.seed, args.turns, &config);
    print_json(&report)?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
