use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starklab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sums_table() {
    let o = run(&["sums", "--q", "4", "--p", "1"]);
    assert!(o.status.success());
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(2).take(3).map(|v| v.parse().unwrap()).collect())
        .collect();
    let want = [2.0, 2.0, 2.0, -2.0];
    assert_eq!(rows.len(), 4);
    for (m, r) in rows.iter().enumerate() {
        assert_eq!(r[0], m as f64);
        assert!((r[1] - want[m]).abs() < 1e-12 && r[2].abs() < 1e-12);
    }
}

#[test]
fn fourier_law_row() {
    let o = run(&["--eps", "1", "--format", "json", "pm", "--m", "1..8"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let abs: f64 = rows[0]["abs_p"].as_str().unwrap().parse().unwrap();
    assert!((abs - 0.831560970858430).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["sums", "--q", "4", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--omega", "1/0", "pm"]).status.code(), Some(2));
    assert_eq!(run(&["pm", "--m", "1..8"]).status.code(), Some(2));
}

#[test]
fn artifact_and_manifest_are_reproducible() {
    let dir = std::env::temp_dir().join(format!("starklab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out: PathBuf = dir.join("ladder.csv");
    let args = ["ladder", "--q", "4", "--m1", "1", "--m2", "2", "--k", "1..20", "--out", out.to_str().unwrap()];
    assert!(run(&args).status.success());
    let first = std::fs::read(&out).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&out).unwrap());
    let manifests: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path() != out)
        .collect();
    assert_eq!(manifests.len(), 1);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(manifests[0].path()).unwrap()).unwrap();
    assert_eq!(m["command"], "ladder");
    std::fs::remove_dir_all(&dir).unwrap();
}
