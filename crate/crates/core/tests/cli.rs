use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulsive-iss")).args(args).output().unwrap()
}

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn missing_job_flag() {
    let out = bin(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--job"));
}

#[test]
fn unknown_flag() {
    let out = bin(&["--job", &example("example1.json"), "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_under_regular_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let target = file.join("out");
    let out = bin(&["--job", &example("example1.json"), "--out-dir", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("directory") || stderr.contains("os error"), "{stderr}");
}

#[test]
fn dangling_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    fs::write(
        &job,
        r#"{"systems": {"s": {"n": 1, "flow": ["-x1"], "jumps": []}},
            "tasks": [{"kind": "certify", "system": "s", "certificate": "nowhere",
                       "region": {"state_radius": 1, "points_per_axis": 5}, "output": "c.json"}]}"#,
    )
    .unwrap();
    let out = bin(&["--job", job.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    assert!(!dir.path().join("c.json").exists());
}

#[test]
fn unparsable_job() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    fs::write(&job, "{ not json").unwrap();
    let out = bin(&["--job", job.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prints_one_line_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["--job", &example("example1.json"), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}
