use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const XTTC: &str = env!("CARGO_BIN_EXE_xttc");

fn model_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models/thermostat.json")
}

fn xttc(args: &[&str]) -> Output {
    Command::new(XTTC)
        .args(args)
        .env_remove("XTTC_STATE_BOUND")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn model() -> String {
    model_path().display().to_string()
}

#[test]
fn validate_ok() {
    let o = xttc(&["validate", &model()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "thermostat: ok\n");
}

#[test]
fn validate_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    let text = fs::read_to_string(model_path())
        .unwrap()
        .replace("\"lo\": 9,\n", "\"lo\": 19,\n");
    fs::write(&broken, text).unwrap();
    let o = xttc(&["validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error[invalid-interval]"), "{}", stdout(&o));
}

#[test]
fn run_prints_sorted_valuation() {
    let o = xttc(&["run", &model(), "--set", "today=workday", "--set", "hour=18"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "hour=18\noperation=nbizhrs\ntoday=workday\n");
}

#[test]
fn run_with_trace_and_goal() {
    let o = xttc(&[
        "run",
        &model(),
        "--set",
        "today=weekend",
        "--set",
        "hour=1",
        "--goal",
        "operation",
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "hour=1\noperation=nbizhrs\ntoday=weekend\n1 start entered\n2 thermostat entered\n3 thermostat fired-rows(2)\n4 end entered\n"
    );

    let o = xttc(&["run", &model(), "--goal", "hour"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown-goal"));
}

#[test]
fn out_of_domain_binding_fails() {
    let o = xttc(&["run", &model(), "--set", "hour=99"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("value-out-of-domain"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["run"],
        vec!["run", "m.json", "--scenario", "table-map"],
        vec!["validate", "m.json", "--goal", "x"],
        vec!["export-bpmn", "m.json", "--scenario", "diagonal"],
    ] {
        let o = xttc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = xttc(&["export-bpmn", &model(), "--scenario", "rule-level"]);
    assert_eq!(o.status.code(), Some(2));
    let o = xttc(&["run", &model(), "--set", "hour"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(xttc(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_fails() {
    let o = xttc(&["validate", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: cannot read"));
}

#[test]
fn export_drools_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let before = fs::read(model_path()).unwrap();
    let o = xttc(&["export-drools", &model(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["Workspace.java", "thermostat.dtable.csv", "thermostat.rf.xml"]);
    assert_eq!(
        fs::read_to_string(dir.path().join("thermostat.dtable.csv")).unwrap(),
        include_str!("golden/thermostat.dtable.csv")
    );
    assert_eq!(fs::read(model_path()).unwrap(), before);
}

#[test]
fn export_drools_refusal_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let text = fs::read_to_string(model_path())
        .unwrap()
        .replace("\"op\": \"lt\"", "\"op\": \"neq\"");
    fs::write(&model, text).unwrap();
    let out = dir.path().join("out");
    let o = xttc(&["export-drools", model.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("neq-unsupported"));
    assert!(!out.exists());
}

#[test]
fn export_bpmn_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = xttc(&["export-bpmn", &model(), "--out", d]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("thermostat.bpmn")).unwrap(),
        include_str!("golden/thermostat.bpmn")
    );

    let o = xttc(&[
        "export-bpmn",
        &model(),
        "--scenario",
        "rule-level",
        "--table",
        "thermostat",
        "--out",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("thermostat.thermostat.bpmn")).unwrap(),
        include_str!("golden/thermostat.rulelevel.bpmn")
    );

    let file = dir.path().join("nested/custom.bpmn");
    let o = xttc(&["export-bpmn", &model(), "--out-file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(file.exists());

    let o = xttc(&[
        "export-bpmn",
        &model(),
        "--scenario",
        "rule-level",
        "--table",
        "nope",
        "--out",
        d,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown-table"));
}

#[test]
fn analyze_reports_defects() {
    let o = xttc(&["analyze", &model()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");

    let dir = tempfile::tempdir().unwrap();
    let mut m = xtt_core::samples::thermostat();
    m.tables[0].rows.remove(1);
    m.tables[0].renumber();
    let path = dir.path().join("gap.json");
    fs::write(&path, xtt_core::serialize_model(&m).unwrap()).unwrap();
    let o = xttc(&["analyze", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 24);
    assert!(out.starts_with("thermostat incomplete hour=0,today=weekend\n"), "{out}");

    let o = Command::new(XTTC)
        .args(["analyze", &model()])
        .env("XTTC_STATE_BOUND", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("state-space-too-large"));
    let o = Command::new(XTTC)
        .args(["analyze", &model()])
        .env("XTTC_STATE_BOUND", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn commands_are_deterministic() {
    let args = ["run", &model(), "--set", "today=workday", "--set", "hour=12", "--trace"];
    assert_eq!(xttc(&args).stdout, xttc(&args).stdout);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    xttc(&["export-drools", &model(), "--out", a.path().to_str().unwrap()]);
    xttc(&["export-drools", &model(), "--out", b.path().to_str().unwrap()]);
    for name in ["Workspace.java", "thermostat.dtable.csv", "thermostat.rf.xml"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}
