use std::io::Write;
use std::process::{Command, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_dialoglab");

fn config(name: &str) -> String {
    format!("{}/examples/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_then_report() {
    let out = tempfile::tempdir().unwrap();
    let run = Command::new(BIN)
        .args(["run", &config("rule_acts.json"), "--episodes", "30", "--seed", "3", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("success_rate"));

    let dir = out.path().join("rule_acts");
    let trial: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("trial_0/trial.json")).unwrap()).unwrap();
    assert_eq!(trial["seeds"], serde_json::json!([3]));

    let report = Command::new(BIN).arg("report").arg(&dir).output().unwrap();
    assert!(report.status.success());
    let table = String::from_utf8(report.stdout).unwrap();
    assert_eq!(table.lines().next(), stdout.lines().next());
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"x": {"agent": [], "env": []}}"#).unwrap();
    let out = Command::new(BIN).arg("run").arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn terminal_chat_saves_a_rated_transcript() {
    let runs = tempfile::tempdir().unwrap();
    let mut child = Command::new(BIN)
        .args(["chat", &config("human_eval.json"), "--runs"])
        .arg(runs.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"I want a cheap restaurant\nthanks, bye\nn\n3\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("saved"), "{stdout}");
    let day = std::fs::read_dir(runs.path().join("human")).unwrap().next().unwrap().unwrap().path();
    let file = std::fs::read_dir(day).unwrap().next().unwrap().unwrap().path();
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(record["rating"]["stars"], 3);
    assert_eq!(record["human_success"], false);
    assert!(record.get("auto_success").is_some());
}
