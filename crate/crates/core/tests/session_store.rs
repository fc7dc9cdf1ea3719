use std::fs;
use std::io::Write;
use std::path::Path;

use proptest::prelude::*;
use tempfile::TempDir;

use yc_bench_core::error::SessionError;
use yc_bench_core::session::{self, read_log, read_log_strict, replay, LogRecord, Record, Session};
use yc_bench_core::BenchConfig;

fn create(dir: &Path, seed: u64) -> Session {
    Session::create(dir, seed, &BenchConfig::default()).unwrap()
}

#[test]
fn reopen_preserves_the_snapshot() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s1");
    let hash = {
        let mut s = create(&dir, 11);
        s.begin_turn().unwrap();
        let task = s.world().market[0].id.clone();
        s.execute(&format!("task accept --task-id {task}")).unwrap();
        s.state_hash()
    };
    let s = Session::open(&dir).unwrap();
    assert_eq!(s.state_hash(), hash);
    assert_eq!(s.meta().turn, 1);
}

#[test]
fn same_seed_gives_identical_initial_worlds() {
    let tmp = TempDir::new().unwrap();
    let a = create(&tmp.path().join("a"), 5);
    let b = create(&tmp.path().join("b"), 5);
    assert_eq!(a.state_hash(), b.state_hash());
    let c = create(&tmp.path().join("c"), 6);
    assert_ne!(a.state_hash(), c.state_hash());
}

#[test]
fn tampered_snapshot_is_refused() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    drop(create(&dir, 3));
    let path = dir.join(session::SNAPSHOT_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("\"funds\":20000000", "\"funds\":20000001", 1);
    assert_ne!(text, tampered);
    fs::write(&path, tampered).unwrap();
    match Session::open(&dir) {
        Err(err @ SessionError::Corrupt { .. }) => assert!(err.to_string().contains("replay --log")),
        Err(other) => panic!("unexpected error {other}"),
        Ok(_) => panic!("tampered snapshot was accepted"),
    }
}

#[test]
fn second_writer_is_locked_out() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let _first = create(&dir, 1);
    assert!(matches!(Session::open(&dir), Err(SessionError::Locked(_))));
    // Readers do not need the lock.
    assert!(session::load_snapshot(&dir).is_ok());
}

#[test]
fn missing_session_names_the_fix() {
    let tmp = TempDir::new().unwrap();
    let err = Session::open(&tmp.path().join("nope")).err().unwrap();
    assert!(err.to_string().contains("session open --seed"));
}

#[test]
fn open_or_create_checks_the_seed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let config = BenchConfig::default();
    drop(Session::open_or_create(&dir, 9, &config).unwrap());
    drop(Session::open_or_create(&dir, 9, &config).unwrap());
    assert!(Session::open_or_create(&dir, 10, &config).is_err());
}

#[test]
fn scratchpad_persists_and_mirrors() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    {
        let mut s = create(&dir, 2);
        assert!(s.execute("scratchpad write --content A").unwrap().ok);
        assert!(s.execute("scratchpad append --content B").unwrap().ok);
    }
    let mut s = Session::open(&dir).unwrap();
    assert_eq!(s.scratchpad().content(), "A\nB");
    assert_eq!(fs::read_to_string(dir.join(session::SCRATCHPAD_FILE)).unwrap(), "A\nB");
    assert!(s.execute("scratchpad write --content ''").unwrap().ok);
    assert_eq!(s.scratchpad().content(), "");
}

#[test]
fn torn_log_tail_is_discarded_on_open() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    {
        let mut s = create(&dir, 4);
        s.begin_turn().unwrap();
        s.execute("sim resume").unwrap();
    }
    let log_path = dir.join(session::LOG_FILE);
    let clean = fs::read(&log_path).unwrap();
    let mut f = fs::OpenOptions::new().append(true).open(&log_path).unwrap();
    f.write_all(b"{\"seq\":999,\"record\":\"comm").unwrap();
    drop(f);
    assert!(read_log(&log_path).unwrap().problem.is_some());

    let mut s = Session::open(&dir).unwrap();
    assert_eq!(fs::read(&log_path).unwrap(), clean);
    s.execute("company status").unwrap();
    drop(s);
    let records = read_log_strict(&log_path).unwrap();
    assert!(records.iter().enumerate().all(|(i, r)| r.seq == i as u64));
}

#[test]
fn log_records_round_trip() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    {
        let mut s = create(&dir, 8);
        for _ in 0..30 {
            s.begin_turn().unwrap();
            let w = s.world();
            let task = w.market.iter().find(|t| t.required_trust == 0.0 && t.required_prestige == 1).unwrap().id.clone();
            let emps: Vec<String> = s.world().roster.iter().map(|e| e.id.clone()).collect();
            s.execute(&format!("task accept --task-id {task}")).unwrap();
            s.execute(&format!("task assign --task-id {task} --employees {}", emps.join(","))).unwrap();
            s.execute(&format!("task dispatch --task-id {task}")).unwrap();
            s.execute("scratchpad append --content 'note'").unwrap();
            s.end_turn().unwrap();
        }
    }
    let text = fs::read_to_string(dir.join(session::LOG_FILE)).unwrap();
    let mut kinds = std::collections::BTreeSet::new();
    for line in text.lines() {
        let record: LogRecord = serde_json::from_str(line).unwrap();
        assert_eq!(serde_json::to_string(&record).unwrap(), line);
        kinds.insert(serde_json::to_value(&record).unwrap()["record"].as_str().unwrap().to_string());
    }
    for kind in ["header", "turn", "command", "event", "ledger", "task_closed", "scratchpad", "turn_end"] {
        assert!(kinds.contains(kind), "no {kind} record in {kinds:?}");
    }
    for hidden in ["\"adversarial\":true", "\"adversarial\":false", "scope_creep_factor"] {
        assert!(!text.contains(hidden), "log exposes {hidden}");
    }
}

#[test]
fn silent_turns_force_a_resume_every_fifth_turn() {
    let mut s = Session::in_memory("mem", 1, &BenchConfig::default());
    let mut forced_at = Vec::new();
    for _ in 0..15 {
        s.begin_turn().unwrap();
        if s.end_turn().unwrap().is_some() {
            forced_at.push(s.meta().turn);
        }
    }
    assert_eq!(forced_at, vec![5, 10, 15]);

    // Observing does not count as progress.
    let mut s = Session::in_memory("mem", 1, &BenchConfig::default());
    for turn in 1..=5 {
        s.begin_turn().unwrap();
        s.execute("company status").unwrap();
        let forced = s.end_turn().unwrap();
        assert_eq!(forced.is_some(), turn == 5);
    }
}

fn line_for(s: &Session, pick: usize, salt: usize) -> String {
    let w = s.world();
    let market = w.market.get(salt % w.market.len().max(1)).map(|t| t.id.clone()).unwrap_or_default();
    let booked = w.book.get(salt % w.book.len().max(1)).map(|t| t.id.clone()).unwrap_or(market.clone());
    let emps: Vec<String> = w.roster.iter().skip(salt % 5).take(1 + salt % 4).map(|e| e.id.clone()).collect();
    match pick % 9 {
        0 => format!("task accept --task-id {market}"),
        1 => format!("task assign --task-id {booked} --employees {}", emps.join(",")),
        2 => format!("task dispatch --task-id {booked}"),
        3 => "sim resume".into(),
        4 => format!("task cancel --task-id {booked} --reason 'slow'"),
        5 => "scratchpad append --content 'x'".into(),
        6 => "market browse --limit 3".into(),
        7 => "task accpt --task-id nope".into(),
        _ => "END_TURN".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Replaying the log reproduces the snapshot, even across process restarts.
    #[test]
    fn replay_reproduces_snapshot(seed in 0u64..500, script in prop::collection::vec((0usize..9, 0usize..1000, any::<bool>()), 1..80)) {
        let tmp = TempDir::new().unwrap();
        let dir = tmp.path().join("s");
        let mut s = create(&dir, seed);
        s.begin_turn().unwrap();
        for (pick, salt, restart) in script {
            if s.is_over() {
                break;
            }
            let line = line_for(&s, pick, salt);
            if line == "END_TURN" {
                s.end_turn().unwrap();
                s.begin_turn().unwrap();
            } else {
                s.execute(&line).unwrap();
            }
            if restart {
                drop(s);
                s = Session::open(&dir).unwrap();
            }
        }
        let expected = s.state_hash();
        let meta = s.meta().clone();
        drop(s);
        let replayed = replay(&dir.join(session::LOG_FILE)).unwrap();
        prop_assert_eq!(replayed.session.state_hash(), expected);
        prop_assert_eq!(replayed.session.meta().turn, meta.turn);
        prop_assert_eq!(replayed.session.meta().idle_turns, meta.idle_turns);
        let (_, _, world) = session::load_snapshot(&dir).unwrap();
        prop_assert_eq!(world.state_hash(), replayed.session.state_hash());
    }
}

#[test]
fn rebuild_restores_a_damaged_snapshot() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let expected = {
        let mut s = create(&dir, 12);
        s.begin_turn().unwrap();
        let task = s.world().market[3].id.clone();
        s.execute(&format!("task accept --task-id {task}")).unwrap();
        s.execute("scratchpad write --content 'keep me'").unwrap();
        s.execute("sim resume").unwrap();
        s.end_turn().unwrap();
        s.state_hash()
    };
    fs::write(dir.join(session::SNAPSHOT_FILE), b"{garbage").unwrap();
    assert!(Session::open(&dir).is_err());
    let rebuilt = replay(&dir.join(session::LOG_FILE)).unwrap().rebuild_into(&dir).unwrap();
    assert_eq!(rebuilt.state_hash(), expected);
    drop(rebuilt);
    let mut s = Session::open(&dir).unwrap();
    assert_eq!(s.scratchpad().content(), "keep me");
    s.execute("sim resume").unwrap();
    drop(s);
    let records = read_log_strict(&dir.join(session::LOG_FILE)).unwrap();
    assert!(matches!(records[0].body, Record::Header { .. }));
    assert!(records.iter().enumerate().all(|(i, r)| r.seq == i as u64));
}

