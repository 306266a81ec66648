mod common;

use std::time::Instant;

use common::{run_cmd, snapshot, tiny_config, write};
use serde_json::Value;

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tiny_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &tiny_config("out"));
    let t0 = Instant::now();
    let o = run_cmd("simulate", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(t0.elapsed().as_secs_f64() < 10.0);
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["absent_count"], 0);
    assert_eq!(manifest["absent"].as_array().unwrap().len(), 0);

    let o = run_cmd("report", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/summary.json")).unwrap()).unwrap();
    let rules = summary["rules"].as_array().unwrap();
    assert_eq!(rules.len(), 4);
    for r in rules {
        for k in ["average_error_rate", "average_heuristic", "average_relative_score"] {
            assert!(r[k].as_f64().is_some_and(f64::is_finite), "{k} in {r}");
        }
    }
    assert!(dir.path().join("out/report.csv").is_file());
}

#[test]
fn rerun_and_thread_count_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &tiny_config("out"));
    let out = dir.path().join("out");
    let mut shots = Vec::new();
    for threads in ["1", "1", "3"] {
        assert_eq!(run_cmd("simulate", &cfg, &["--threads", threads]).status.code(), Some(0));
        assert_eq!(run_cmd("report", &cfg, &["--threads", threads]).status.code(), Some(0));
        shots.push(snapshot(&out));
    }
    assert!(shots[0].len() > 4);
    assert_eq!(shots[0], shots[1]);
    assert_eq!(shots[0], shots[2]);
}

#[test]
fn garch_on_short_window_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let text = tiny_config("out").replace(
        r#"{"type": "fq-al", "window": 250}"#,
        r#"{"type": "ccc-garch", "window": 250}"#,
    );
    let cfg = write(dir.path(), "run.json", &text);
    let o = run_cmd("simulate", &cfg, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("CCC-GARCH250"));
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert!(m["absent_count"].as_u64().unwrap() > 0);
    assert!(m["entry_count"].as_u64().unwrap() > 0);
    let o = run_cmd("report", &cfg, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn all_cells_absent_is_total_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = tiny_config("out")
        .replace(r#"{"type": "fq-al", "window": 250}"#, r#"{"type": "dcc-garch", "window": 250}"#)
        .replace(r#"{"type": "edf", "window": 250}"#, r#"{"type": "ccc-garch", "window": 250}"#);
    let cfg = write(dir.path(), "run.json", &text);
    let o = run_cmd("simulate", &cfg, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn report_without_tensor_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &tiny_config("out"));
    let o = run_cmd("report", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("manifest") || stderr(&o).contains("tensor"), "{}", stderr(&o));
}

#[test]
fn ingest_reports_bad_rows_and_prints_stats() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "good.csv", "date,a,b\n2020-01-01,1.0,2.0\n2020-01-02,1.1,2.1\n2020-01-03,1.05,2.2\n2020-01-06,1.2,2.15\n2020-01-07,1.15,2.3\n2020-01-08,1.3,2.25\n");
    write(dir.path(), "bad.csv", "date,a,b\n2020-01-01,1.0,2.0\n2020-13-02,1.1,2.1\n");
    let cfg = |file: &str| {
        format!(r#"{{"data": {{"panels": [{{"source": "csv", "name": "p", "path": "{file}"}}]}}, "output": {{"directory": "out"}}}}"#)
    };
    let good = write(dir.path(), "good.json", &cfg("good.csv"));
    let o = run_cmd("ingest", &good, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("kurtosis") || stdout.contains("Kurt"), "{stdout}");
    assert!(dir.path().join("out/panels/p.csv").is_file());
    assert!(dir.path().join("out/panels/manifest.json").is_file());

    let bad = write(dir.path(), "bad.json", &cfg("bad.csv"));
    let o = run_cmd("ingest", &bad, &[]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));
}

#[test]
fn synthetic_ingest_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &tiny_config("out"));
    assert_eq!(run_cmd("ingest", &cfg, &[]).status.code(), Some(0));
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/panels/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["panels"][0]["seed"], 11);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"data": {"panels": []}, "output": {"directory": "o"}, "extra": 1}"#);
    assert_eq!(run_cmd("simulate", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn synthetic_scales_multiply_columns() {
    let dir = tempfile::tempdir().unwrap();
    let base = tiny_config("plain");
    let scaled = tiny_config("scaled").replace(r#""seed": 11}"#, r#""seed": 11, "scales": [1.0, 2.0, 0.5]}"#);
    let a = write(dir.path(), "a.json", &base);
    let b = write(dir.path(), "b.json", &scaled);
    assert_eq!(run_cmd("ingest", &a, &[]).status.code(), Some(0));
    assert_eq!(run_cmd("ingest", &b, &[]).status.code(), Some(0));
    let load = |p: &str| {
        scorebench::csv_io::load_csv(&dir.path().join(p), &scorebench::csv_io::CsvSchema::default()).unwrap()
    };
    let x = load("plain/panels/tiny.csv");
    let y = load("scaled/panels/tiny.csv");
    for i in 0..x.rows() {
        assert_eq!(y.values()[(i, 0)], x.values()[(i, 0)]);
        assert_eq!(y.values()[(i, 1)], 2.0 * x.values()[(i, 1)]);
        assert_eq!(y.values()[(i, 2)], 0.5 * x.values()[(i, 2)]);
    }
}
