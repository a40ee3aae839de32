use std::path::Path;
use std::process::Command;

fn cmcm(out: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_cmcm"))
        .env_remove("SOURCE_DATE_EPOCH")
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = data("synthetic_cdcp.csv");
    assert_eq!(cmcm(dir.path(), &["forecast", "--input", &csv, "--horizon", "0"]), 2);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cmcm(dir.path(), &["ingest", "--input", "/nonexistent/cdcp.csv"]), 3);
}

#[test]
fn report_without_upstream_outputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cmcm(dir.path(), &["report"]), 3);
}

#[test]
fn ingest_then_report_partial_run_still_fails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = data("synthetic_cdcp.csv");
    assert_eq!(cmcm(dir.path(), &["ingest", "--input", &csv]), 0);
    assert!(dir.path().join("ingest.json").exists());
    assert_eq!(cmcm(dir.path(), &["report"]), 3);
}
