#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn scorebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scorebench"))
        .args(args)
        .env_remove("SCOREBENCH_THREADS")
        .output()
        .expect("binary runs")
}

pub fn run_cmd(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    scorebench(&args)
}

/// Every file under `dir`, keyed by its relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// One 3-dim synthetic panel, two models, one evaluation date, 50 draws.
pub fn tiny_config(out: &str) -> String {
    format!(
        r#"{{
  "data": {{"panels": [{{"source": "synthetic", "name": "tiny", "generator": {{"type": "gaussian", "correlation": 0.4}},
                         "rows": 400, "dim": 3, "seed": 11}}]}},
  "models": {{"roster": [{{"type": "edf", "window": 250}}, {{"type": "fq-al", "window": 250}}]}},
  "grid": {{"n_draws": 50, "subsample": 10, "root_seed": 5, "max_dates": 1}},
  "metrics": {{"bootstrap_reps": 100}},
  "output": {{"directory": "{out}"}}
}}"#
    )
}
