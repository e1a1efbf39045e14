use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hdlbugs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdlbugs")).current_dir(root()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn rouge_identical_texts() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "assign y = a & b;\nassign z = ~y;\n");
    let o = hdlbugs(&["rouge", &a, &a]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1.000000000 1.000000000 1.000000000 1.000000000");
}

#[test]
fn rouge_whitespace_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.txt", "the cat sat");
    let r = write(dir.path(), "r.txt", "the cat ate");
    let o = hdlbugs(&["rouge", &c, &r, "--tokens", "whitespace"]);
    assert!(o.status.success());
    // WLCS with f(k) = k^1.2: one run of length 2 over 3 tokens each side
    let w = 2f64.powf(1.2);
    let p = (w / 3f64.powf(1.2)).powf(1.0 / 1.2);
    let expected = format!("0.666666667 0.500000000 0.666666667 {p:.9}");
    assert_eq!(stdout(&o).trim(), expected);

    let empty = write(dir.path(), "e.txt", "");
    let o = hdlbugs(&["rouge", &empty, &r]);
    assert_eq!(stdout(&o).trim(), "0.000000000 0.000000000 0.000000000 0.000000000");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(hdlbugs(&["train-demo", "--iters", "0"]).status.code(), Some(64));
    assert_eq!(hdlbugs(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(hdlbugs(&["eval", "--task", "localize", "--adapter", "carrier-pigeon:x"]).status.code(), Some(64));
    assert_eq!(hdlbugs(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_token_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hdlbugs"))
        .current_dir(root())
        .env_remove("GITHUB_TOKEN")
        .args(["--out-dir", &dir.path().display().to_string(), "mine"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("GITHUB_TOKEN"));
}

#[test]
fn replay_of_unknown_repo_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = hdlbugs(&["--out-dir", &out, "--set", "repos=nobody/nothing", "mine", "--replay", "fixtures/mini"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreadable_input_exits_3() {
    let o = hdlbugs(&["rouge", "/nonexistent/a", "/nonexistent/b"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn mine_then_build_on_the_mini_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let base = ["--config", "fixtures/mini/mini.conf", "--out-dir", &out];
    let o = hdlbugs(&[&base[..], &["mine", "--replay", "fixtures/mini"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("commits=8 pull_requests=2 issues=1"));
    let o = hdlbugs(&[&base[..], &["build"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("pairs: extracted=6 after_dedup=5 after_length=4"), "{text}");
    assert!(text.contains("samples: 9"));
    assert!(text.contains("split: train=7 validation=1 test=1"));
    let first = std::fs::read(dir.path().join("dataset.jsonl")).unwrap();
    let o = hdlbugs(&[&base[..], &["--sequential", "build"]].concat());
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("dataset.jsonl")).unwrap(), first);
}

#[test]
fn eval_with_replay_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    let o = hdlbugs(&[
        "eval",
        "--task",
        "localize",
        "--adapter",
        "replay:fixtures/eval/replay.jsonl",
        "--model",
        "replay-mixed",
        "--dataset",
        "fixtures/eval/dataset.jsonl",
        "--report",
        &report.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(root().join("fixtures/eval/expected-localize.csv")).unwrap());
}

#[test]
fn train_demo_writes_four_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let o = hdlbugs(&["train-demo", "--iters", "200", "--eval-interval", "50", "--out", &out.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).matches("checkpoint: ").count(), 4);
    for it in [50, 100, 150, 200] {
        assert!(out.join(format!("adapter-iter{it:06}.ckpt")).is_file());
    }
}
