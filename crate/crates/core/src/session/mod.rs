//! Persistence of one world between CLI invocations.
//!
//! A session is a directory:
//!
//! ```text
//! <session>/
//!   snapshot.json     world, scratchpad, and counters, with a sha256 over the body
//!   run.log.jsonl     append-only run log (see [`log`])
//!   scratchpad.txt    plain-text mirror of the scratchpad
//!   config.toml       the configuration the world was generated from
//!   lock              advisory single-writer lock
//! ```
//!
//! The snapshot is replaced by write-then-rename after each persisted command, and it
//! records how many log bytes it covers; log records past that point are dropped on
//! the next open.

pub mod log;

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::command::{execute, execute_line, parse, render_status, Command, CommandResult, StatusObservation};
use crate::config::BenchConfig;
use crate::error::SessionError;
use crate::scratchpad::Scratchpad;
use crate::state::WorldState;
use crate::worldgen::generate_world;

pub use log::{
    read_log, read_log_strict, LogContents, LogProblem, LogRecord, LogWriter, Record, ScratchpadOp, Telemetry,
};

pub const SESSION_SCHEMA: &str = "yc-bench/session/v1";
pub const SNAPSHOT_SCHEMA: &str = "yc-bench/snapshot/v1";
pub const SESSION_ENV: &str = "YC_SESSION_DIR";

pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const LOG_FILE: &str = "run.log.jsonl";
pub const SCRATCHPAD_FILE: &str = "scratchpad.txt";
pub const CONFIG_FILE: &str = "config.toml";
pub const LOCK_FILE: &str = "lock";

/// Counters that live alongside the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub schema: String,
    pub session_id: String,
    pub seed: u64,
    /// Turns started so far; 0 before the first status render.
    pub turn: u64,
    /// Consecutive finished turns without a `sim resume`.
    pub idle_turns: u32,
    pub resumed_this_turn: bool,
    pub episode_end_logged: bool,
    pub log_seq: u64,
    pub log_bytes: u64,
}

#[derive(Serialize, Deserialize)]
struct SnapshotBody {
    meta: SessionMeta,
    scratchpad: Scratchpad,
    state: WorldState,
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile<'a> {
    schema: String,
    sha256: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

struct Store {
    dir: PathBuf,
    log: LogWriter,
    _lock: File,
}

pub struct Session {
    meta: SessionMeta,
    world: WorldState,
    scratchpad: Scratchpad,
    store: Option<Store>,
    /// Write the snapshot after every command.
    pub autosave: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn lock(dir: &Path) -> Result<File, SessionError> {
    let path = dir.join(LOCK_FILE);
    let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(|e| SessionError::io(&path, e))?;
    match file.try_lock() {
        Ok(()) => Ok(file),
        Err(std::fs::TryLockError::WouldBlock) => Err(SessionError::Locked(dir.display().to_string())),
        Err(std::fs::TryLockError::Error(e)) => Err(SessionError::io(&path, e)),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SessionError> {
    let tmp = path.with_extension("tmp");
    let mut file = File::create(&tmp).map_err(|e| SessionError::io(&tmp, e))?;
    file.write_all(bytes).and_then(|_| file.sync_all()).map_err(|e| SessionError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SessionError::io(path, e))
}

/// Resolves the session directory: an explicit flag wins over the environment.
pub fn resolve_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf).or_else(|| std::env::var_os(SESSION_ENV).map(PathBuf::from))
}

/// Reads and verifies a snapshot without taking the lock.
pub fn load_snapshot(dir: &Path) -> Result<(SessionMeta, Scratchpad, WorldState), SessionError> {
    let path = dir.join(SNAPSHOT_FILE);
    if !path.exists() {
        return Err(SessionError::NotFound(dir.display().to_string()));
    }
    let text = fs::read_to_string(&path).map_err(|e| SessionError::io(&path, e))?;
    let format = |message: String| SessionError::Format { what: "snapshot", path: path.display().to_string(), message };
    let file: SnapshotFile = serde_json::from_str(&text).map_err(|e| format(e.to_string()))?;
    if file.schema != SNAPSHOT_SCHEMA {
        return Err(format(format!("unsupported schema {}", file.schema)));
    }
    let found = sha256_hex(file.body.get().as_bytes());
    if found != file.sha256 {
        return Err(SessionError::Corrupt { path: path.display().to_string(), expected: file.sha256, found });
    }
    let body: SnapshotBody = serde_json::from_str(file.body.get()).map_err(|e| format(e.to_string()))?;
    Ok((body.meta, body.scratchpad, body.state))
}

impl Session {
    /// A session that lives only in memory: nothing is logged or saved.
    pub fn in_memory(session_id: &str, seed: u64, config: &BenchConfig) -> Self {
        let world = generate_world(seed, config);
        let meta = SessionMeta {
            schema: SESSION_SCHEMA.into(),
            session_id: session_id.into(),
            seed,
            turn: 0,
            idle_turns: 0,
            resumed_this_turn: false,
            episode_end_logged: false,
            log_seq: 0,
            log_bytes: 0,
        };
        Session {
            meta,
            scratchpad: Scratchpad::new(config.memory.scratchpad_cap_bytes),
            world,
            store: None,
            autosave: false,
        }
    }

    /// Creates a new session directory holding a freshly generated world.
    pub fn create(dir: &Path, seed: u64, config: &BenchConfig) -> Result<Self, SessionError> {
        config.check()?;
        fs::create_dir_all(dir).map_err(|e| SessionError::io(dir, e))?;
        let lock = lock(dir)?;
        if dir.join(SNAPSHOT_FILE).exists() {
            return Err(SessionError::Format {
                what: "session",
                path: dir.display().to_string(),
                message: "a session already exists here".into(),
            });
        }
        let session_id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "session".into());
        let mut session = Session::in_memory(&session_id, seed, config);
        let log_path = dir.join(LOG_FILE);
        fs::write(&log_path, b"").map_err(|e| SessionError::io(&log_path, e))?;
        let config_path = dir.join(CONFIG_FILE);
        fs::write(&config_path, config.to_toml()).map_err(|e| SessionError::io(&config_path, e))?;
        session.store = Some(Store { dir: dir.to_path_buf(), log: LogWriter::open(&log_path, 0, 0)?, _lock: lock });
        session.log(Record::Header {
            schema: log::RUN_LOG_SCHEMA.into(),
            session_id,
            seed,
            config: Box::new(config.clone()),
            start: session.world.clock.horizon_start,
            state_hash: session.world.state_hash(),
        })?;
        session.flush_engine_log()?;
        session.autosave = true;
        session.save()?;
        Ok(session)
    }

    /// Opens an existing session, taking the single-writer lock.
    pub fn open(dir: &Path) -> Result<Self, SessionError> {
        if !dir.join(SNAPSHOT_FILE).exists() {
            return Err(SessionError::NotFound(dir.display().to_string()));
        }
        let lock = lock(dir)?;
        let (meta, scratchpad, world) = load_snapshot(dir)?;
        let log = LogWriter::open(&dir.join(LOG_FILE), meta.log_seq, meta.log_bytes)?;
        Ok(Session { meta, world, scratchpad, store: Some(Store { dir: dir.to_path_buf(), log, _lock: lock }), autosave: true })
    }

    /// Opens the session at `dir`, creating it from `seed` and `config` if absent.
    pub fn open_or_create(dir: &Path, seed: u64, config: &BenchConfig) -> Result<Self, SessionError> {
        if !dir.join(SNAPSHOT_FILE).exists() {
            return Session::create(dir, seed, config);
        }
        let session = Session::open(dir)?;
        if session.meta.seed != seed {
            return Err(SessionError::Format {
                what: "session",
                path: dir.display().to_string(),
                message: format!("session was created with seed {}, not {seed}", session.meta.seed),
            });
        }
        Ok(session)
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn scratchpad(&self) -> &Scratchpad {
        &self.scratchpad
    }

    pub fn dir(&self) -> Option<&Path> {
        self.store.as_ref().map(|s| s.dir.as_path())
    }

    pub fn log_path(&self) -> Option<PathBuf> {
        self.store.as_ref().map(|s| s.log.path().to_path_buf())
    }

    pub fn is_over(&self) -> bool {
        self.world.is_over()
    }

    fn log(&mut self, body: Record) -> Result<(), SessionError> {
        if let Some(store) = &mut self.store {
            store.log.append(body)?;
            self.meta.log_seq = store.log.next_seq();
            self.meta.log_bytes = store.log.bytes();
        }
        Ok(())
    }

    fn flush_engine_log(&mut self) -> Result<(), SessionError> {
        for item in self.world.drain_log() {
            self.log(item.into())?;
        }
        if self.world.is_over() && !self.meta.episode_end_logged {
            self.meta.episode_end_logged = true;
            self.log(Record::EpisodeEnd {
                outcome: self.world.outcome.expect("episode is over"),
                final_funds_cents: self.world.funds,
                turns: self.meta.turn,
                trust: self.world.clients.iter().map(|c| (c.id.clone(), c.trust)).collect(),
                state_hash: self.world.state_hash(),
            })?;
        }
        Ok(())
    }

    fn run(&mut self, line: &str, forced: bool) -> Result<CommandResult, SessionError> {
        let command = parse(line).ok();
        let result = match &command {
            Some(command) => execute(&mut self.world, &mut self.scratchpad, command),
            None => execute_line(&mut self.world, &mut self.scratchpad, line),
        };
        if result.ok && command == Some(Command::SimResume) {
            self.meta.resumed_this_turn = true;
        }
        self.log(Record::Command {
            turn: self.meta.turn,
            line: line.trim().to_string(),
            verb: command.as_ref().map(|c| c.verb().to_string()),
            ok: result.ok,
            error_code: result.error.as_ref().map(|e| e.code.clone()),
            forced,
        })?;
        if let (true, Some(Command::ScratchpadWrite { content } | Command::ScratchpadAppend { content })) =
            (result.ok, &command)
        {
            let op = match command {
                Some(Command::ScratchpadWrite { .. }) => ScratchpadOp::Write,
                _ => ScratchpadOp::Append,
            };
            self.log(Record::Scratchpad {
                turn: self.meta.turn,
                at: self.world.clock.now,
                op,
                content: content.clone(),
                bytes: self.scratchpad.content().len(),
            })?;
        }
        self.flush_engine_log()?;
        if self.autosave {
            self.save()?;
        }
        Ok(result)
    }

    /// Executes one command line. Invalid commands come back as error results.
    pub fn execute(&mut self, line: &str) -> Result<CommandResult, SessionError> {
        self.run(line, false)
    }

    /// Starts a turn: renders the status observation and clears the event digest.
    pub fn begin_turn(&mut self) -> Result<StatusObservation, SessionError> {
        self.meta.turn += 1;
        self.meta.resumed_this_turn = false;
        let status = render_status(&mut self.world);
        self.log(Record::Turn { turn: self.meta.turn, status: status.clone() })?;
        if self.autosave {
            self.save()?;
        }
        Ok(status)
    }

    /// Ends a turn. After `auto_advance_turns` consecutive turns without a resume,
    /// forces one and returns its result.
    pub fn end_turn(&mut self) -> Result<Option<CommandResult>, SessionError> {
        if self.meta.resumed_this_turn {
            self.meta.idle_turns = 0;
        } else {
            self.meta.idle_turns += 1;
        }
        self.meta.resumed_this_turn = false;
        let mut forced = None;
        if self.meta.idle_turns >= self.world.config.simulation.auto_advance_turns && !self.world.is_over() {
            forced = Some(self.run("sim resume", true)?);
            self.meta.idle_turns = 0;
            self.meta.resumed_this_turn = false;
        }
        self.log(Record::TurnEnd { turn: self.meta.turn, idle_turns: self.meta.idle_turns })?;
        if self.autosave {
            self.save()?;
        }
        Ok(forced)
    }

    pub fn record_telemetry(
        &mut self,
        commands_issued: usize,
        commands_dropped: usize,
        wall_ms: u64,
        agent: Telemetry,
    ) -> Result<(), SessionError> {
        self.log(Record::Telemetry { turn: self.meta.turn, commands_issued, commands_dropped, wall_ms, agent })
    }

    /// Writes the snapshot (and the scratchpad mirror) for the current state.
    pub fn save(&mut self) -> Result<(), SessionError> {
        let Some(store) = &mut self.store else { return Ok(()) };
        store.log.sync()?;
        let body = SnapshotBody { meta: self.meta.clone(), scratchpad: self.scratchpad.clone(), state: self.world.clone() };
        let body = serde_json::to_string(&body).expect("snapshot serializes");
        let raw = RawValue::from_string(body).expect("serialized JSON is valid");
        let file = SnapshotFile { schema: SNAPSHOT_SCHEMA.into(), sha256: sha256_hex(raw.get().as_bytes()), body: &raw };
        let text = serde_json::to_string(&file).expect("snapshot file serializes");
        write_atomic(&store.dir.join(SNAPSHOT_FILE), text.as_bytes())?;
        write_atomic(&store.dir.join(SCRATCHPAD_FILE), self.scratchpad.content().as_bytes())
    }

    /// Hash of the world state alone.
    pub fn state_hash(&self) -> String {
        self.world.state_hash()
    }
}

/// The result of re-executing a run log through a fresh engine.
pub struct Replay {
    pub session: Session,
    pub records: usize,
    /// Hash recorded by the log's `episode_end`, if it has one.
    pub logged_final_hash: Option<String>,
}

/// Rebuilds a session from the commands and turn boundaries of a run log.
pub fn replay(path: &Path) -> Result<Replay, SessionError> {
    replay_to(path, None)
}

/// Like [`replay`], but when `dir` is given the replay runs as a new persisted
/// session there and writes its own run log.
pub fn replay_to(path: &Path, dir: Option<&Path>) -> Result<Replay, SessionError> {
    let records = read_log_strict(path)?;
    let format = |message: String| SessionError::Format { what: "run log", path: path.display().to_string(), message };
    let Some(LogRecord { body: Record::Header { session_id, seed, config, state_hash, .. }, .. }) = records.first() else {
        return Err(format("missing header record".into()));
    };
    let mut session = match dir {
        Some(dir) => {
            let mut s = Session::create(dir, *seed, config)?;
            s.autosave = false;
            s
        }
        None => Session::in_memory(session_id, *seed, config),
    };
    if &session.state_hash() != state_hash {
        return Err(format("initial world differs from the header hash".into()));
    }
    let mut pending_forced = 0usize;
    let mut logged_final_hash = None;
    for record in &records[1..] {
        match &record.body {
            Record::Turn { .. } => {
                session.begin_turn()?;
            }
            Record::Command { line, forced: false, .. } => {
                session.execute(line)?;
            }
            Record::Command { forced: true, .. } => pending_forced += 1,
            Record::TurnEnd { turn, .. } => {
                if *turn != session.meta.turn {
                    return Err(format(format!("turn_end for turn {turn} during turn {}", session.meta.turn)));
                }
                let forced = session.end_turn()?;
                if forced.is_some() as usize != pending_forced {
                    return Err(format(format!("forced resume mismatch at turn {turn}")));
                }
                pending_forced = 0;
            }
            Record::Telemetry { commands_issued, commands_dropped, wall_ms, agent, .. } => {
                session.record_telemetry(*commands_issued, *commands_dropped, *wall_ms, agent.clone())?;
            }
            Record::EpisodeEnd { state_hash, .. } => logged_final_hash = Some(state_hash.clone()),
            _ => {}
        }
    }
    if dir.is_some() {
        session.autosave = true;
        session.save()?;
    }
    Ok(Replay { session, records: records.len(), logged_final_hash })
}

impl Replay {
    /// Writes the replayed state as the snapshot of `dir`, keeping its run log.
    pub fn rebuild_into(mut self, dir: &Path) -> Result<Session, SessionError> {
        let lock = lock(dir)?;
        let log_path = dir.join(LOG_FILE);
        let bytes = fs::metadata(&log_path).map_err(|e| SessionError::io(&log_path, e))?.len();
        self.session.meta.log_seq = self.records as u64;
        self.session.meta.log_bytes = bytes;
        self.session.meta.episode_end_logged = self.logged_final_hash.is_some();
        let log = LogWriter::open(&log_path, self.records as u64, bytes)?;
        self.session.store = Some(Store { dir: dir.to_path_buf(), log, _lock: lock });
        self.session.autosave = true;
        self.session.save()?;
        Ok(self.session)
    }
}
