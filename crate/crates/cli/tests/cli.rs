//! End-to-end runs of the `tlaloop` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// The binary with every configuration environment variable cleared.
fn tlaloop() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tlaloop"));
    for var in [
        "TLALOOP_BACKEND",
        "TLALOOP_CHECKER",
        "TLALOOP_MAX_ITERS",
        "TLALOOP_TIMEOUT_S",
        "TLALOOP_CONFIG",
        "TLALOOP_ENDPOINT",
        "TLALOOP_MODEL",
        "TLA2TOOLS_JAR",
        "RUST_LOG",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Compares against `tests/golden/<name>`; set `UPDATE_GOLDEN=1` to rewrite.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from golden file");
}

#[test]
fn help_texts_match_golden_files() {
    for (args, name) in [
        (vec!["--help"], "help.txt"),
        (vec!["verify", "--help"], "verify_help.txt"),
        (vec!["parse", "--help"], "parse_help.txt"),
        (vec!["oracle", "--help"], "oracle_help.txt"),
    ] {
        let out = tlaloop().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        golden(name, &stdout(&out));
    }
}

fn replay_verify(out_dir: &Path, extra: &[&str], target: &str, fixture: &str) -> Output {
    tlaloop()
        .args(["verify", "--backend", "replay", "--checker", "recorded", "--out"])
        .arg(out_dir)
        .arg(repo(&format!("corpus/{target}.md")))
        .arg("--fixture")
        .arg(repo(&format!("fixtures/{fixture}")))
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn verify_replays_and_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = tlaloop()
        .args(["verify", "--backend", "replay", "--checker", "recorded", "--out"])
        .arg(dir.path())
        .arg(repo("corpus/t3.md"))
        .arg(repo("corpus/t2.md"))
        .arg("--fixture")
        .arg(repo("fixtures/t3_compile_recovery"))
        .arg("--fixture")
        .arg(repo("fixtures/t2_first_shot"))
        .output()
        .unwrap();
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("t3: BUG_FOUND after 2 iterations, trace depth 3"), "{text}");
    assert!(text.contains("t2: BUG_FOUND after 1 iteration, trace depth 4"), "{text}");

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t3.run.json")).unwrap()).unwrap();
    assert_eq!(record["schema_version"], 1);
    assert_eq!(record["terminal"]["status"], "BUG_FOUND");
    assert_eq!(record["metrics"]["iterations"], 2);
    assert_eq!(record["iterations"][0]["verdict"]["class"], "COMPILE_ERROR");
    assert!(dir.path().join("T3.tla").is_file());
    assert!(dir.path().join("T2.cfg").is_file());
}

#[test]
fn exit_code_reflects_the_terminal_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = replay_verify(dir.path(), &["--max-iters", "2"], "t1", "no_fences");
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    assert!(stdout(&out).contains("BUDGET_EXHAUSTED after 2 iterations"));

    let out = replay_verify(dir.path(), &["--max-iters", "3"], "t1", "no_fences");
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert!(stdout(&out).contains("ABORTED"));
}

#[test]
fn precedence_is_flag_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tlaloop.toml");
    fs::write(&config, "[loop]\nmax_iterations = 1\n").unwrap();
    let iterations = |cmd: &mut Command| {
        let out = cmd.output().unwrap();
        let text = stdout(&out);
        // The terminal line ends with "after N iteration(s)".
        text.lines().next().unwrap().rsplit(" after ").next().unwrap().split(' ').next().unwrap().to_string()
    };
    let base = |extra: &[&str]| {
        let mut cmd = tlaloop();
        cmd.args(["verify", "--backend", "replay", "--checker", "recorded", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path())
            .arg(repo("corpus/t1.md"))
            .arg("--fixture")
            .arg(repo("fixtures/no_fences"))
            .args(extra);
        cmd
    };
    assert_eq!(iterations(&mut base(&[])), "1");
    assert_eq!(iterations(base(&[]).env("TLALOOP_MAX_ITERS", "2")), "2");
    assert_eq!(iterations(base(&["--max-iters", "3"]).env("TLALOOP_MAX_ITERS", "2")), "3");
}

#[test]
fn usage_errors_exit_64() {
    let out = tlaloop().args(["verify", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = tlaloop().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    // Replay without a fixture.
    let out = tlaloop()
        .args(["verify", "--backend", "replay"])
        .arg(repo("corpus/t1.md"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = tlaloop().args(["oracle", "t4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = tlaloop().args(["verify", "--backend", "carrier-pigeon"]).arg(repo("corpus/t1.md")).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("known: http, replay"));
}

#[test]
fn parse_reads_the_sidecar_exit_code() {
    let out = tlaloop().arg("parse").arg(repo("fixtures/tlc/t1_violation.out")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("class: VIOLATION"), "{text}");
    assert!(text.contains("actions: INITIAL -> Lock -> Reorg -> RelayMint"), "{text}");

    let out = tlaloop()
        .args(["parse", "--json"])
        .arg(repo("fixtures/tlc/t3_semantic_error.out"))
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "COMPILE_ERROR");
    assert!(v["diagnostic"]["message_excerpt"].as_str().unwrap().contains("Unknown operator"));

    let dir = tempfile::tempdir().unwrap();
    let bare = dir.path().join("out.txt");
    fs::write(&bare, "nothing\n").unwrap();
    let out = tlaloop().arg("parse").arg(&bare).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = tlaloop().args(["parse", "--exit-code", "0"]).arg(&bare).output().unwrap();
    assert!(stdout(&out).contains("class: SAFE"));
}

#[test]
fn oracle_reports_shortest_traces() {
    let out = tlaloop().args(["oracle", "t1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("steps: Lock(1) -> Reorg(1) -> RelayMint"));

    let out = tlaloop().args(["oracle", "t2", "--variant", "finality-check"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = tlaloop().args(["oracle", "t3", "--max-messages", "2", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outcome"], "violation");
    assert_eq!(v["states"].as_array().unwrap().len(), 3);

    let out = tlaloop().args(["oracle", "t1", "--max-states", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
