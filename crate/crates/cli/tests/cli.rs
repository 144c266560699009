use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nvlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn census_writes_consistent_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvlab(&["census", "--Q", "200", "--theta1", "0.2", "--theta2", "0.2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert!(s["moments"]["cs_bound"].as_f64().unwrap() <= s["weighted_nonvanishing"].as_f64().unwrap());
    assert_eq!(s["empty"], false);
    let text = fs::read_to_string(dir.path().join("census.csv")).unwrap();
    assert!(text.starts_with("q,parity,primitive_count,nonvanishing_count,weight\n"));
}

#[test]
fn invalid_eta_is_refused_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["census", "moments"] {
        let out = nvlab(&[cmd, "--eta1", "0.01", "--eta2", "0.03"], dir.path());
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("7η₁+η₂<1/12"), "{err}");
    }
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn force_runs_despite_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvlab(&["moments", "--Q", "100", "--D", "3", "--a", "2", "--force"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("moments.json"));
    assert_eq!(m["config"]["forced"], true);
    assert!(!m["config"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn empty_window_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    // The window around Q = 2 holds no q ≡ 5 mod 7.
    let out = nvlab(&["census", "--Q", "2", "--D", "7", "--a", "5", "--force"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("census.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(json(&dir.path().join("summary.json"))["empty"], true);
}

#[test]
fn optimize_reports_one_third_at_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvlab(&["optimize", "--theta1", "0.25", "--theta2", "0.25", "--degree", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let o = json(&dir.path().join("optimize.json"));
    assert!((o["ratio"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(o["p1"]["exact"], serde_json::json!(["0", "1"]));

    let out = nvlab(&["optimize", "--theta1", "0.6"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = nvlab(&["optimize", "--degree", "9"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = nvlab(&["optimize", "--eta1", "0.005", "--theta1", "0.4", "--theta2", "0.2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let o = json(&dir.path().join("optimize.json"));
    assert_eq!(o["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# recipe\nQ = 120\ntheta1 = 0.1\nformat = json\n").unwrap();
    let out = nvlab(&["moments", "--config", cfg.to_str().unwrap(), "--Q", "90"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("moments.json"));
    assert_eq!(m["config"]["Q"], 90.0);
    assert_eq!(m["config"]["theta1"], 0.1);
    let rows = m["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows[0]["q"].is_u64());
    assert!(!dir.path().join("moments.csv").exists());

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = nvlab(&["moments", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cache_is_reused_and_corruption_fails_selftest() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("lv.jsonl");
    let c = cache.to_str().unwrap();
    let first = nvlab(&["moments", "--Q", "60", "--cache", c], dir.path());
    assert_eq!(first.status.code(), Some(0));
    let a = fs::read(dir.path().join("moments.csv")).unwrap();
    let m = json(&dir.path().join("moments.json"));
    assert_eq!(m["cache"]["hits"], 0);

    let second = nvlab(&["moments", "--Q", "60", "--cache", c], dir.path());
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("moments.csv")).unwrap(), a);
    let m = json(&dir.path().join("moments.json"));
    assert_eq!(m["cache"]["misses"], 0);

    let ok = nvlab(&["selftest", "--suite", "cache", "--cache", c], dir.path());
    assert_eq!(ok.status.code(), Some(0));

    let mut text = fs::read_to_string(&cache).unwrap();
    text.push_str("{\"q\": oops\n");
    fs::write(&cache, text).unwrap();
    let bad = nvlab(&["selftest", "--suite", "cache", "--cache", c], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL cache"));
}

#[test]
fn selftest_suite_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvlab(&["selftest", "--suite", "expsums"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS expsums"));

    let out = nvlab(&["selftest", "--suite", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kernel_table_and_bench_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvlab(&["kernel-table", "--points", "20", "--x-max", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("kernel_table.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 0.001).abs() < 1e-15);

    let args = ["expsum-bench", "--bench-sizes", "2,4", "--bench-trials", "2", "--seed", "5"];
    let out = nvlab(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read(dir.path().join("expsum_bench.csv")).unwrap();
    nvlab(&args, dir.path());
    assert_eq!(fs::read(dir.path().join("expsum_bench.csv")).unwrap(), a);
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 5);
}
