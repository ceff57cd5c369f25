use std::path::Path;
use std::process::{Command, Output};

fn tsrl(args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tsrl"));
    cmd.args(args)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped());
    let mut child = cmd.spawn().expect("spawn tsrl");
    let mut pipe = child.stdin.take().unwrap();
    if let Some(text) = stdin {
        pipe.write_all(text.as_bytes()).unwrap();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tsrl(args, None);
    assert!(
        out.status.success(),
        "tsrl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn micro_suite(dir: &Path, count: &str) {
    ok(&[
        "generate-games",
        "--genre",
        "cooking",
        "--count",
        count,
        "--profile",
        "micro",
        "--out-dir",
        s(dir),
    ]);
}

#[test]
fn missing_checkpoint_reports_its_category() {
    let tmp = tempfile::tempdir().unwrap();
    let games = tmp.path().join("games");
    micro_suite(&games, "1");
    let missing = tmp.path().join("no-such-checkpoint");
    let out = tsrl(
        &["evaluate", "--checkpoint", s(&missing), "--games-dir", s(&games), "--out-dir", s(&tmp.path().join("e"))],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: io.checkpoint: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn usage_errors_exit_two_on_one_line() {
    let out = tsrl(&["evaluate", "--games-dir", "x"], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: usage: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    let out = tsrl(&["evaluate", "--agent", "oracle", "--games-dir", "x", "--out-dir", "y", "--policy", "softest"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_policy_parameters_are_range_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let games = tmp.path().join("games");
    micro_suite(&games, "1");
    let out = tsrl(
        &[
            "evaluate", "--agent", "constant", "--games-dir", s(&games), "--out-dir", s(&tmp.path().join("e")),
            "--policy", "sample", "--temperature", "0",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: range: "));
}

#[test]
fn seeded_evaluations_write_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let games = tmp.path().join("games");
    micro_suite(&games, "3");
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        ok(&[
            "evaluate", "--agent", "oracle", "--games-dir", s(&games), "--out-dir", s(&dir), "--policy", "sample",
            "--temperature", "1", "--seed", "1",
        ]);
        (
            std::fs::read(dir.join("report.json")).unwrap(),
            std::fs::read(dir.join("episodes.jsonl")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn solve_and_play_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let games = tmp.path().join("games");
    micro_suite(&games, "1");
    let game = games.join("cooking-micro-d1-s0.json");
    let solved: serde_json::Value = serde_json::from_str(&ok(&["solve", "--game", s(&game)])).unwrap();
    let path: Vec<&str> = solved["path"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(solved["path_score"], solved["max_score"]);

    let transcript = tmp.path().join("t.txt");
    let out = tsrl(
        &["play", "--game", s(&game), "--transcript", s(&transcript)],
        Some(&(path.join("\n") + "\n")),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let max = solved["max_score"].as_u64().unwrap();
    assert!(stdout.contains(&format!("score {max} of {max}, Won")), "{stdout}");
    let text = std::fs::read_to_string(&transcript).unwrap();
    assert!(path.iter().all(|a| text.contains(a)));
}

#[test]
fn tiny_pipeline_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name);
    micro_suite(&p("games"), "2");
    std::fs::write(
        p("teacher.json"),
        r#"{"total_steps": 300, "observe_steps": 50, "checkpoint_every": 150, "batch_size": 8}"#,
    )
    .unwrap();
    ok(&[
        "train-teacher", "--games-dir", s(&p("games")), "--config", s(&p("teacher.json")), "--out-dir",
        s(&p("teacher")),
    ]);
    assert!(p("teacher/final").is_dir());
    assert!(p("teacher/metrics.csv").is_file());

    ok(&[
        "collect-curriculum", "--teacher-ckpt", s(&p("teacher/final")), "--games-dir", s(&p("games")),
        "--episodes", "3", "--step-cap", "10", "--out", s(&p("pool.jsonl")),
    ]);
    let records = std::fs::read_to_string(p("pool.jsonl")).unwrap().lines().count();
    assert!((3..=30).contains(&records), "{records} records");

    std::fs::write(p("student.json"), r#"{"total_steps": 20, "checkpoint_every": 10, "batch_size": 4}"#).unwrap();
    ok(&[
        "train-student", "--variant", "nlu_ce", "--pool", s(&p("pool.jsonl")), "--config", s(&p("student.json")),
        "--in-domain-dir", s(&p("games")), "--out-dir", s(&p("student")),
    ]);
    let metrics = std::fs::read_to_string(p("student/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3, "{metrics}");

    ok(&[
        "evaluate", "--checkpoint", s(&p("student/final")), "--games-dir", s(&p("games")), "--out-dir",
        s(&p("eval")),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p("eval/report.json")).unwrap()).unwrap();
    assert_eq!(report["agent"], "nlu_ce");

    let csv = ok(&["analyze", "--run", s(&p("eval")), "--out", s(&p("kl.csv"))]);
    assert!(csv.starts_with("agent,count,"));
    assert_eq!(std::fs::read_to_string(p("kl.csv")).unwrap(), csv);
}
