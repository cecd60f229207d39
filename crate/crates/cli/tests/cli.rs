use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn appstress(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_appstress"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn appstress")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = appstress(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn default_cohort_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth"]);
    ok(dir, &["featurize"]);
    ok(dir, &["evaluate"]);
    let report = fs::read_to_string(dir.join("out/report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 24);
    assert!(rows[..22].iter().all(|r| r.starts_with('u')));
    assert!(rows[22].starts_with("average,"));
    assert!(rows[23].starts_with("pooled,"));
}

#[test]
fn missing_taxonomy_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = appstress(tmp.path(), &["featurize", "--taxonomy", "no/such/file.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config:"));
}

#[test]
fn bad_config_values_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "reducer = \"median\"\n").unwrap();
    assert_eq!(appstress(tmp.path(), &["synth", "--config", "c.toml"]).status.code(), Some(2));
    fs::write(tmp.path().join("c.toml"), "colour = \"blue\"\n").unwrap();
    assert_eq!(appstress(tmp.path(), &["synth", "--config", "c.toml"]).status.code(), Some(2));
    assert_eq!(appstress(tmp.path(), &["evaluate", "--k", "1"]).status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = appstress(tmp.path(), &["ingest"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_rows_reported_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--users", "2", "--days", "3"]);
    let events = fs::read_to_string(dir.join("out/app_events.csv")).unwrap();
    let mut lines: Vec<&str> = events.lines().take(3).collect();
    lines.push("u001,com.x,yesterday,2013-11-04T10:00:00Z");
    fs::write(dir.join("ev.csv"), lines.join("\n") + "\n").unwrap();
    let out = appstress(dir, &["ingest", "--events", "ev.csv"]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("ev.csv line:4 "), "{stderr}");
    assert!(dir.join("out/clean/app_events.csv").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("grid.toml"),
        "c_values = [0.1, 10.0]\n\n[[kernels]]\nkind = \"linear\"\n\n[[kernels]]\nkind = \"rbf\"\ngamma = 0.1\n",
    )
    .unwrap();
    fs::write(
        dir.join("run.toml"),
        "grid = \"grid.toml\"\nk = 5\nseed = 7\n\n[synth]\nusers = 4\ndays = 20\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for _ in 0..2 {
        ok(dir, &["synth", "--config", "run.toml"]);
        ok(dir, &["featurize", "--config", "run.toml"]);
        let table = ok(dir, &["train", "--config", "run.toml"]);
        assert!(table.contains("selected"));
        ok(dir, &["evaluate", "--config", "run.toml"]);
        reports.push((
            fs::read(dir.join("out/features.csv")).unwrap(),
            fs::read(dir.join("out/report.csv")).unwrap(),
            fs::read(dir.join("out/models/u001.json")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn report_plot_writes_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--users", "2", "--days", "5"]);
    ok(dir, &["featurize"]);
    let table = ok(dir, &["report", "--plot"]);
    assert!(table.contains("game"));
    let svg = fs::read_to_string(dir.join("out/usage.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 5);
}
