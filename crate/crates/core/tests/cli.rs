use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgecachesim"))
        .args(args)
        .env_remove("EDGECACHESIM_SEED")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in [
        "paper_fig2.scenario",
        "desk_small.scenario",
        "oracle_sweep.scenario",
    ] {
        let out = cli(&["validate", scenario_file(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    }
}

#[test]
fn validation_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    std::fs::write(&path, "population.alpha_shares = 1.5:1\n").unwrap();
    let out = cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("population.alpha_shares"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        cli(&["summarize", "x.csv", "--figure", "fig9"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_file_exits_two() {
    let out = cli(&["run", "/nonexistent/x.scenario"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("/nonexistent/x.scenario"));
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "run",
        scenario_file("desk_small.scenario").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = out_dir.join("results.csv");
    let out = cli(&["summarize", csv.to_str().unwrap(), "--figure", "fig2b"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("[fig2b]") && !stdout.contains("[fig5]"));
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_file("desk_small.scenario");
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_edgecachesim"));
        cmd.arg("run").arg(&scenario).arg("--out").arg(&out_dir);
        cmd.env_remove("EDGECACHESIM_SEED");
        if let Some(e) = env {
            cmd.env("EDGECACHESIM_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(out_dir.join("results.csv")).unwrap()
    };
    let flag = run("flag", None, Some("5"));
    let env = run("env", Some("5"), None);
    let both = run("both", Some("6"), Some("5"));
    let default = run("default", None, None);
    assert_eq!(flag, env);
    assert_eq!(flag, both);
    assert_ne!(flag, default);
}

#[test]
fn empty_csv_summarizes_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    let out = cli(&["summarize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("warning"));
}

#[test]
fn malformed_csv_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "scenario_id,algorithm,size\n").unwrap();
    let out = cli(&["summarize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("capacity"));
}

#[test]
fn oracle_check_reports_no_mismatches() {
    let out = cli(&[
        "oracle-check",
        scenario_file("oracle_sweep.scenario").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("1000 instances, 0 mismatches"));
}
