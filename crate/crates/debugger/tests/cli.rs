mod support;

use std::path::Path;
use std::process::{Command, Output};

use support::{fixture, read, write_model_runs};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adaptive-debug"));
    cmd.env_remove("EXECUTOR_CMD").env_remove("LLM_API_KEY");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn scripted_debug(dir: &Path, rules: &Path) -> Command {
    let code = dir.join("program.py");
    std::fs::copy(fixture("syntax/program.py"), &code).unwrap();
    let mut cmd = bin();
    cmd.arg("debug")
        .arg("--code")
        .arg(&code)
        .arg("--tests")
        .arg(fixture("syntax/tests.json"))
        .args(["--backend", "scripted", "--script"])
        .arg(fixture("syntax/script.json"))
        .args(["--executor", "scripted", "--executor-rules"])
        .arg(rules);
    cmd
}

fn bench5(out: &Path, extra: &[&str]) -> Command {
    let mut cmd = bin();
    cmd.arg("bench")
        .arg("--dataset")
        .arg(fixture("bench5/dataset.jsonl"))
        .arg("--out")
        .arg(out)
        .args(["--backend", "scripted", "--script"])
        .arg(fixture("bench5/script.json"))
        .args(["--executor", "scripted", "--executor-rules"])
        .arg(fixture("bench5/executor.json"))
        .args(extra);
    cmd
}

#[test]
fn debug_fixes_the_syntax_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(&mut scripted_debug(dir.path(), &fixture("syntax/executor.json")));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("verdict: fixed"), "{stdout}");
    let fixed = stdout.split("--- final code ---\n").nth(1).unwrap();
    assert!(fixed.contains("def add(a, b):"), "{fixed}");
    let transcript = read(&dir.path().join("program.py.transcript.jsonl"));
    assert!(transcript.lines().next().unwrap().contains("session_start"));
    assert!(transcript.lines().last().unwrap().contains("session_end"));
}

#[test]
fn debug_not_fixed_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    std::fs::write(&rules, "{}").unwrap();
    let (code, stdout, _) = run(&mut scripted_debug(dir.path(), &rules));
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("verdict: not fixed"), "{stdout}");
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = bin();
    cmd.args(["bench", "--dataset"])
        .arg(dir.path().join("nope.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out"));
    let (code, _, stderr) = run(&mut cmd);
    assert_eq!(code, 2);
    assert!(stderr.contains("nope.jsonl"), "{stderr}");
    assert!(stderr.contains("Usage:"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _, stderr) = run(bin().args(["report", "--frobnicate"]));
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn http_backend_without_key_is_an_environment_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(bin()
        .arg("bench")
        .arg("--dataset")
        .arg(fixture("bench5/dataset.jsonl"))
        .arg("--out")
        .arg(dir.path())
        .args(["--executor", "scripted", "--executor-rules"])
        .arg(fixture("bench5/executor.json")));
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("LLM_API_KEY"), "{stderr}");
}

#[test]
fn process_executor_without_runner_is_an_environment_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(bin()
        .arg("bench")
        .arg("--dataset")
        .arg(fixture("bench5/dataset.jsonl"))
        .arg("--out")
        .arg(dir.path())
        .args(["--backend", "scripted", "--script"])
        .arg(fixture("bench5/script.json")));
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("EXECUTOR_CMD"), "{stderr}");
}

#[test]
fn report_prints_the_model_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = bin();
    cmd.arg("report");
    for (label, adaptive, baseline) in write_model_runs(dir.path()) {
        cmd.arg("--outcomes")
            .arg(adaptive)
            .arg("--baseline-outcomes")
            .arg(baseline)
            .args(["--label", &label]);
    }
    let out = dir.path().join("report");
    cmd.arg("--out").arg(&out);
    let (code, stdout, stderr) = run(&mut cmd);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("| Llama3 | 50 | 26 | 52 | 35 | 70 | 18 |"), "{stdout}");
    assert!(stdout.contains("| GPT-4 | 50 | 41 | 82 | 44 | 88 | 6 |"), "{stdout}");
    assert!(stdout.ends_with("Mean gain: 11 points\n"), "{stdout}");
    assert_eq!(read(&out.join("report.md")), stdout);
    assert!(out.join("figures/Mistral/agents_by_complexity.csv").exists());
}

#[test]
fn bench_then_replay_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, stderr) = run(&mut bench5(&out, &["--baseline", "--concurrency", "2"]));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("| 5 | 1 | 20 | 3 | 60 | 40 |"), "{stdout}");

    // A second invocation resumes without redoing anything.
    let (code, _, stderr) = run(&mut bench5(&out, &["--baseline"]));
    assert_eq!(code, 0, "{stderr}");

    // A different selection may not reuse the directory.
    let (code, _, stderr) = run(&mut bench5(&out, &["--limit", "2"]));
    assert_eq!(code, 2, "{stderr}");

    let again = dir.path().join("again");
    let (code, stdout, stderr) = run(bin()
        .arg("replay")
        .arg("--transcript")
        .arg(&out)
        .arg("--out")
        .arg(&again));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("replayed 5 instances"), "{stdout}");
    let strip = |text: String| -> String {
        text.lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("wall_time_ms");
                v.to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(read(&out.join("outcomes.jsonl"))),
        strip(read(&again.join("outcomes.jsonl")))
    );
    assert_eq!(read(&out.join("baseline_outcomes.jsonl")), read(&again.join("baseline_outcomes.jsonl")));
    assert_eq!(read(&out.join("summary.json")), read(&again.join("summary.json")));
}

#[test]
fn replay_single_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(&mut scripted_debug(dir.path(), &fixture("syntax/executor.json")));
    assert_eq!(code, 0, "{stderr}");
    let transcript = dir.path().join("program.py.transcript.jsonl");

    let copy = dir.path().join("replayed.jsonl");
    let (code, stdout, stderr) = run(bin()
        .arg("replay")
        .arg("--transcript")
        .arg(&transcript)
        .arg("--out")
        .arg(&copy));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("verdict: fixed"), "{stdout}");
    assert_eq!(read(&copy).lines().count(), read(&transcript).lines().count());

    let tampered = dir.path().join("tampered.jsonl");
    std::fs::write(&tampered, read(&transcript).replace("\"id\":\"program\"", "\"id\":\"other\"")).unwrap();
    assert_ne!(read(&tampered), read(&transcript));
    let (code, _, stderr) = run(bin().arg("replay").arg("--transcript").arg(&tampered));
    assert_eq!(code, 1);
    assert!(stderr.contains("diverged"), "{stderr}");

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let (code, _, _) = run(bin().arg("replay").arg("--transcript").arg(&empty));
    assert_eq!(code, 1);
}
