mod common;

use scorebench::app::{simulate, ExitStatus, RunOptions};
use scorebench::config::load_config;
use scorebench::tensor_io::{read_manifest, read_tensor, TensorIoError};

#[test]
fn written_tensor_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let p = common::write(dir.path(), "run.json", &common::tiny_config("out"));
    let cfg = load_config(&p).unwrap();
    let opts = RunOptions { output: None, threads: Some(1), verbose: false };
    let o = simulate(&cfg, &opts).unwrap();
    assert_eq!(o.status(), ExitStatus::Ok);
    let out = cfg.output_dir();
    let m = read_manifest(&out).unwrap();
    assert_eq!(m.entry_count, 4 * 2 * 2 * 50);
    assert_eq!(m.absent_count, 0);
    let t = read_tensor(&out, &m).unwrap();
    assert_eq!(t, o.run.tensor);
}

#[test]
fn missing_tensor_is_named() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_manifest(dir.path()), Err(TensorIoError::MissingTensor(_))));
}
