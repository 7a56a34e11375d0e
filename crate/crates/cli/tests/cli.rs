use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tdlob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdlob")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/csco_synthetic.csv")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn survival_writes_three_columns() {
    let o = tdlob(&["survival", "--lambda", "0.9", "--mu", "1.1", "--x", "3", "--tmax", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["T", "survival", "tail_asymptote"]);
    assert_eq!(rows.len(), 51);
    let last: f64 = rows[50][1].parse().unwrap();
    assert!(last > 0.0 && last < 1.0);
}

#[test]
fn zero_depth_is_a_parameter_error() {
    let o = tdlob(&["survival", "--lambda", "0.9", "--mu", "1.1", "--x", "0", "--tmax", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("x must be ≥ 1"));
}

#[test]
fn time_changed_column_equals_constant_rate_at_internal_time() {
    let o = tdlob(&["survival", "--lambda", "0.8", "--mu", "1", "--x", "2", "--alpha", "power:1,-0.5", "--tmax", "20", "--points", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["T", "A_T", "survival", "tail_asymptote"]);
    let internal: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    let reference = tdlob(&["survival", "--lambda", "0.8", "--mu", "1", "--x", "2", "--times", &internal.join(",")]);
    let constant = csv_rows(&stdout(&reference));
    for (a, b) in rows[1..].iter().zip(&constant[1..]) {
        let (x, y): (f64, f64) = (a[2].parse().unwrap(), b[1].parse().unwrap());
        assert!((x - y).abs() <= 1e-14, "{x} vs {y}");
    }
}

#[test]
fn oracle_check_agrees() {
    let o = tdlob(&["survival", "--lambda", "0.99", "--mu", "1", "--x", "5", "--times", "0.5,1,5,10", "--oracle-check", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    for r in rows {
        let gap = (r["survival"].as_f64().unwrap() - r["oracle"].as_f64().unwrap()).abs();
        assert!(gap < 1e-6);
    }
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--lambda", "0.9", "--mu", "1.1", "--depth", "point:1,1", "--start", "1,1"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--seed", "42", "--out", out.to_str().unwrap()]);
        let o = tdlob(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("a", &["--paths", "1", "--changes", "20"]);
    let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files, ["paths.csv", "summary.json"]);
    let b = run("b", &["--paths", "1", "--changes", "20"]);
    for f in ["paths.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let par = run("par", &["--paths", "64", "--horizon", "50"]);
    let seq = run("seq", &["--paths", "64", "--horizon", "50", "--sequential"]);
    assert_eq!(fs::read(par.join("paths.csv")).unwrap(), fs::read(seq.join("paths.csv")).unwrap());

    let replay = dir.path().join("replay");
    let o = tdlob(&[
        "simulate", "--config", a.join("summary.json").to_str().unwrap(), "--paths", "1", "--changes", "20",
        "--seed", "42", "--out", replay.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a.join("paths.csv")).unwrap(), fs::read(replay.join("paths.csv")).unwrap());
}

#[test]
fn randomized_commands_need_a_seed() {
    let o = tdlob(&["simulate", "--lambda", "0.9", "--mu", "1.1", "--changes", "3", "--out", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"clock":{"spec":{"form":"constant","params":{"c":1},"lambda":1.5,"mu":1}},"depth":[[[1,1],1.0]],"x0":1,"y0":1}"#).unwrap();
    let o = tdlob(&["simulate", "--config", cfg.to_str().unwrap(), "--changes", "3", "--seed", "1", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn limit_reports_slope_and_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lim");
    let o = tdlob(&["limit", "--lambda", "0.9", "--mu", "1.1", "--n-ladder", "256,1024", "--paths", "2000", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("limit.json")).unwrap()).unwrap();
    assert_eq!(report["regime"]["regime"], "subcritical_standard");
    assert_eq!(report["expected_slope"].as_f64(), Some(1.0));
    let rungs = report["rungs"].as_array().unwrap();
    assert_eq!(rungs.len(), 2);
    for r in rungs {
        assert!((r["slope"].as_f64().unwrap() - 1.0).abs() < 0.1);
    }
    assert!(out.join("variance_n256.csv").exists() && out.join("variance_n1024.csv").exists());
}

#[test]
fn limit_without_convergence_skips_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lim");
    let o = tdlob(&["limit", "--lambda", "1", "--mu", "1", "--alpha", "power:1,-1.5", "--n-ladder", "100", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("limit.json")).unwrap()).unwrap();
    assert_eq!(report["schedule"]["kind"], "none");
    assert!(report["rungs"].as_array().unwrap().is_empty());
}

#[test]
fn limit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lim");
    let o = tdlob(&["limit", "--lambda", "0.9", "--mu", "1.1", "--n-ladder", "100,10", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = tdlob(&["limit", "--lambda", "0.9", "--mu", "1.1", "--n-ladder", "100", "--paths", "10", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fit_recovers_generator_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let o = tdlob(&["fit", "--events", fixture().to_str().unwrap(), "--name", "CSCO", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let row = &report["table"]["rows"][0];
    for (flow, expected) in [("ask_lambda", 0.4560), ("ask_mu", 0.4412), ("bid_lambda", 0.4149), ("bid_mu", 0.4509)] {
        let e = row[flow]["exponent"].as_f64().unwrap();
        assert!((e - expected).abs() <= 0.05, "{flow}: {e}");
    }
    assert!(out.join("curves/ask_lambda_day0.csv").exists());
    assert!(stdout(&o).contains("CSCO"));
}

#[test]
fn synth_reproduces_the_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("csco.csv");
    let o = tdlob(&["synth", "--stock", "CSCO", "--scale", "100", "--seed", "2014", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(out).unwrap(), fs::read(fixture()).unwrap());
}

#[test]
fn fit_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(tdlob(&["fit", "--events", empty.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t_seconds,side,kind,price_ticks,size\n1,A,L,100,1\n2,A,X,100,1\n").unwrap();
    let o = tdlob(&["fit", "--events", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"));
}

#[test]
fn published_fixture_grouping() {
    let o = tdlob(&["fit", "--published"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let regime = |name: &str| text.lines().rev().find(|l| l.starts_with(name)).unwrap().to_owned();
    for name in ["CSCO", "INTC", "VOD"] {
        assert!(regime(name).contains("SubcriticalStandard"));
    }
    for name in ["MSFT", "LBTYK"] {
        assert!(regime(name).contains("CriticalTimeDependent"));
    }
    assert!(regime("FB").contains("(boundary)"));
}

#[test]
fn classify_reports_moments() {
    let o = tdlob(&["classify", "--lambda", "0.9", "--mu", "1.1", "--moments", "3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["regime"], "subcritical_standard");
    assert_eq!(v["tau_moments"].as_array().unwrap().len(), 3);
    assert_eq!(v["tau_moments"][0]["moment"], "finite");
}
