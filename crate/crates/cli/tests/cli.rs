use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn teamharness(workspace: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamharness"))
        .arg("--workspace")
        .arg(workspace)
        .args(args)
        .env_remove("TEAMHARNESS_ENDPOINT")
        .env_remove("TEAMHARNESS_BASE_URL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_answers_file_names_the_ranking_violation() {
    let dir = tempfile::tempdir().unwrap();
    let answers = fixture("a05_fs10/answers.txt");
    let out = teamharness(dir.path(), &["validate", "--answers", answers.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("column 4 is not a ranking"), "{text}");
    let strict = teamharness(
        dir.path(),
        &["validate", "--strict", "--answers", answers.to_str().unwrap()],
    );
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn wilcoxon_marks_seven_models() {
    let dir = tempfile::tempdir().unwrap();
    let table = fixture("published_totals.csv");
    let out = teamharness(dir.path(), &["stats", "wilcoxon", "--scores", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    let yes: Vec<&str> = text.lines().filter(|l| l.ends_with("\tyes")).collect();
    assert_eq!(yes.len(), 7, "{text}");
    assert!(
        text.lines().any(|l| l.starts_with("qwen3-instruct\t10\t55\t0.001953")),
        "{text}"
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = teamharness(dir.path(), &["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage:"));
    assert_eq!(teamharness(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(teamharness(dir.path(), &["validate"]).status.code(), Some(2));
    let missing = teamharness(dir.path(), &["validate", "NO_SUCH_RUN"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn stub_runs_replay_and_report_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    for (mode, model) in [("teamllm", "model-a"), ("baseline", "model-a")] {
        let out = teamharness(
            ws,
            &["run", "--stub", "--mode", mode, "--model", model, "--scenario", "FS10"],
        );
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    assert!(ws.join("runs/teamllm_FS10_001/answers.txt").exists());
    let replay = teamharness(ws, &["replay", "teamllm_FS10_001"]);
    assert_eq!(replay.status.code(), Some(0), "{replay:?}");
    assert!(stdout(&replay).contains("reproduced 34 exchanges"));
    assert_eq!(
        teamharness(ws, &["validate", "baseline_FS10_001"]).status.code(),
        Some(0)
    );

    let sheets = fixture("a05_fs10/sheets.json");
    let import = teamharness(ws, &["score", "import", sheets.to_str().unwrap()]);
    assert_eq!(import.status.code(), Some(0), "{import:?}");
    let export = teamharness(ws, &["score", "export"]);
    assert!(stdout(&export).starts_with("response_id,rater_id,s1_fluency"));

    let first = teamharness(ws, &["report"]);
    assert_eq!(first.status.code(), Some(0), "{first:?}");
    let files: Vec<String> = stdout(&first).lines().map(str::to_string).collect();
    assert!(files.iter().any(|f| f.ends_with("metrics.json")));
    let before: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(teamharness(ws, &["report"]).status.code(), Some(0));
    for (f, b) in files.iter().zip(before) {
        assert_eq!(fs::read(f).unwrap(), b, "{f} differs between report runs");
    }
    let metrics = teamharness(ws, &["metrics"]);
    assert!(stdout(&metrics).contains("model-a\tteamllm\t1"), "{}", stdout(&metrics));
}

#[test]
fn published_totals_feed_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let table = fixture("published_totals.csv");
    assert_eq!(
        teamharness(ws, &["score", "import", table.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(teamharness(ws, &["report"]).status.code(), Some(0));
    let aggregate = fs::read_to_string(ws.join("reports/aggregate.csv")).unwrap();
    assert!(
        aggregate.lines().any(|l| l.starts_with("qwen3-instruct,teamllm,")),
        "{aggregate}"
    );
    let out = teamharness(ws, &["stats", "wilcoxon", "--csv"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert_eq!(stdout(&out).lines().count(), 11);
}
