use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kochergin"));
    c.env_remove("KOCHERGIN_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn header(bytes: &[u8]) -> serde_json::Value {
    let text = std::str::from_utf8(bytes).unwrap();
    match text.strip_prefix('#') {
        Some(rest) => serde_json::from_str(rest.lines().next().unwrap()).unwrap(),
        None => serde_json::from_str::<serde_json::Value>(text).unwrap()["header"].clone(),
    }
}

fn replay(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["replay", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn cf_prints_json_table() {
    let o = run(&["cf", "--nmax", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["header"]["format"], "kochergin-artifact/1");
    assert_eq!(v["header"]["config"]["alpha"], "periodic:1");
    assert_eq!(v["header"]["config_hash"].as_str().unwrap().len(), 64);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("89"), "q_10 of the golden mean should appear");
}

#[test]
fn malformed_roof_is_a_config_error() {
    let o = run(&["cf", "--roof", r#"{"family":"PowerSym","gamma":"x"}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));

    let o = run(&["cf", "--roof", r#"{"family":"PowerSym","gamma":0.5,"A_plus":1,"A_minus":1,"c":1,"lambda":0.2,"bogus":1}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn bad_alpha_is_a_config_error() {
    let o = run(&["cf", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["cf", "--alpha", "nonsense"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn flow_rejects_point_above_roof() {
    let o = run(&["flow", "--x", "0.3", "--r", "100", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn small_flow_props_suite_passes() {
    let o = run(&["verify", "flow-props", "--trials", "50", "--measure-samples", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("pass"));
}

#[test]
fn replay_file_artifacts_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--out", out, "--seed", "7", "correlate", "--times", "50,100,200", "--samples", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = dir.path().join("correlate.csv");
    let fit = dir.path().join("correlate-fit.json");
    assert!(csv.exists() && fit.exists());
    assert_eq!(header(&std::fs::read(&csv).unwrap())["seed"], 7);

    let r = replay(&csv, &[]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert!(stderr(&r).contains("identical"));
    let r = replay(&fit, &["--workers", "2"]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
}

#[test]
fn replay_stdout_capture() {
    let o = run(&["birkhoff", "--n", "5000", "--rows", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("capture.csv");
    std::fs::write(&path, &o.stdout).unwrap();
    let r = replay(&path, &[]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert!(stderr(&r).contains("stdout"));
}

#[test]
fn tampered_artifact_fails_replay() {
    let o = run(&["birkhoff", "--n", "5000", "--rows", "6"]);
    let dir = tempfile::tempdir().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let changed = lines[2].replacen('2', "3", 1);
    lines[2] = &changed;
    let path = dir.path().join("tampered.csv");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let r = replay(&path, &[]);
    assert_eq!(r.status.code(), Some(1), "{}", stderr(&r));
    assert!(stderr(&r).contains("differs"));

    // editing the stored config breaks the hash
    let edited = text.replacen("\"x\":0.317", "\"x\":0.318", 1);
    std::fs::write(&path, edited).unwrap();
    let r = replay(&path, &[]);
    assert_eq!(r.status.code(), Some(2), "{}", stderr(&r));
}

#[test]
fn random_seed_is_reported() {
    let o = run(&["--seed", "random", "cf", "--nmax", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("seed: ")).expect("seed line");
    let seed: u64 = line["seed: ".len()..].trim().parse().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["header"]["seed"], seed);
}

#[test]
fn workers_env_and_flag() {
    let o = bin().args(["cf", "--nmax", "5"]).env("KOCHERGIN_WORKERS", "3").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["header"]["config"]["workers"], 3);

    let o = bin().args(["--workers", "2", "cf", "--nmax", "5"]).env("KOCHERGIN_WORKERS", "3").output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["header"]["config"]["workers"], 2);

    let o = bin().args(["cf"]).env("KOCHERGIN_WORKERS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn results_do_not_depend_on_workers() {
    let a = run(&["--workers", "1", "birkhoff", "--n", "20000", "--rows", "8"]);
    let b = run(&["--workers", "4", "birkhoff", "--n", "20000", "--rows", "8"]);
    let body = |o: &Output| String::from_utf8_lossy(&o.stdout).lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&a), body(&b));
}

#[test]
fn correlate_writes_series_and_fit() {
    let o = run(&["correlate", "--grid", "geometric:10,1000,10", "--samples", "2000"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("t,estimate,stderr,dropped"), "{text}");
    assert!(text.contains("\"k\": 2"), "{text}");
    let o = run(&["correlate", "--k", "1", "--times", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["correlate", "--times", "0,10"]);
    assert_eq!(o.status.code(), Some(2));
}
