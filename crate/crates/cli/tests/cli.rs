use std::path::Path;
use std::process::{Command, Output};

fn privsynth(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privsynth"))
        .args(args)
        .current_dir(dir)
        .env_remove("PRIVSYNTH_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(privsynth(&["generate", "--bogus"], dir.path()).status.code(), Some(1));
    let out = privsynth(&["generate", "--mechanism", "pmm", "--dim", "1", "--eps", "-1", "--n", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = privsynth(&["audit", "--mechanism", "pmm", "--eps", "1", "--window", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = ["generate", "--mechanism", "pmm", "--dim", "2", "--eps", "1", "--input", "nope.csv"];
    assert_eq!(privsynth(&missing, dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.csv"), "0.1,0.2\n0.3,x\n").unwrap();
    let out = privsynth(&["eval", "bad.csv", "bad.csv", "--dim", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn audit_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = privsynth(&["audit", "--mechanism", "pmm", "--eps", "1", "--window", "40"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    let out = privsynth(&["audit", "--mechanism", "pmm", "--eps", "1", "--sigmas", "3,1.5,3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["passed"], false);
    let out = privsynth(&["audit", "--mechanism", "psmm", "--eps", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn generate_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..500).map(|i| format!("{},{}\n", i % 37, (i * 7) % 101)).collect();
    std::fs::write(dir.path().join("raw.csv"), format!("x,y\n{rows}")).unwrap();
    let out = privsynth(
        &["generate", "--mechanism", "pmm", "--dim", "2", "--eps", "1", "--seed", "5", "--input", "raw.csv", "--normalize", "--output", "syn.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("syn.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["result"]["n"], 500);
    let synth = std::fs::read_to_string(dir.path().join("syn.csv")).unwrap();
    assert_eq!(synth.lines().count() as u64, meta["result"]["synthetic_size"].as_u64().unwrap());

    let same = privsynth(&["eval", "syn.csv", "syn.csv", "--dim", "2"], dir.path());
    assert_eq!(json(&same)["value"].as_f64(), Some(0.0));
    let diff = privsynth(&["eval", "raw.csv", "syn.csv", "--dim", "2", "--normalize", "--method", "snapped"], dir.path());
    assert_eq!(diff.status.code(), Some(0), "{}", String::from_utf8_lossy(&diff.stderr));
    let v = json(&diff)["value"].as_f64().unwrap();
    assert!(v > 0.0 && v < 0.5, "W1 {v}");
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--mechanism", "psmm", "--dim", "1", "--eps", "1", "--n", "200", "--format", "csv"];
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_privsynth"))
            .args(args)
            .current_dir(dir.path())
            .env("PRIVSYNTH_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}
