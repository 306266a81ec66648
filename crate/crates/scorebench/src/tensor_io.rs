//! On-disk score tensor: `scores/<panel>/<dgp>/<date>.csv` partitions with
//! columns `draw_index, rule, model, score`, plus `manifest.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use scorebench_core::harness::{AbsentCell, CellKey, CellScores, ScoreTensor};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum TensorIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("no score tensor at {0} (run `simulate` first)")]
    MissingTensor(PathBuf),
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelInfo {
    pub name: String,
    pub rows: usize,
    pub labels: Vec<String>,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub evaluation_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFile {
    pub panel: String,
    pub dgp: String,
    pub date: NaiveDate,
    /// Relative to the output directory, `/`-separated.
    pub file: String,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub root_seed: u64,
    pub config: RunConfig,
    pub panels: Vec<PanelInfo>,
    pub rules: Vec<String>,
    pub models: Vec<String>,
    pub dgps: Vec<String>,
    /// Functional forms that the model keys do not spell out.
    pub model_notes: BTreeMap<String, String>,
    pub cells: Vec<CellFile>,
    pub entry_count: usize,
    pub absent_count: usize,
    pub absent: Vec<AbsentCell>,
}

/// Filesystem-safe form of a model key.
pub fn path_component(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

pub fn cell_path(key: &CellKey) -> String {
    format!("scores/{}/{}/{}.csv", path_component(&key.panel), path_component(&key.dgp), key.date)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TensorIoError + '_ {
    move |source| TensorIoError::Io { path: path.to_path_buf(), source }
}

/// Writes every cell partition and returns the manifest entries.
pub fn write_cells(tensor: &ScoreTensor, out_dir: &Path) -> Result<Vec<CellFile>, TensorIoError> {
    let mut files = Vec::with_capacity(tensor.cells.len());
    for (key, cell) in &tensor.cells {
        let rel = cell_path(key);
        let path = out_dir.join(&rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let csv_err = |source| TensorIoError::Csv { path: path.clone(), source };
        w.write_record(["draw_index", "rule", "model", "score"]).map_err(csv_err)?;
        let mut entries = 0;
        for rule in &tensor.rules {
            for model in &tensor.models {
                let Some(scores) = cell.get(rule, model) else { continue };
                for (i, s) in scores.iter().enumerate() {
                    w.write_record([i.to_string(), rule.clone(), model.clone(), format!("{s}")])
                        .map_err(|source| TensorIoError::Csv { path: path.clone(), source })?;
                }
                entries += scores.len();
            }
        }
        w.flush().map_err(io_err(&path))?;
        files.push(CellFile { panel: key.panel.clone(), dgp: key.dgp.clone(), date: key.date, file: rel, entries });
    }
    Ok(files)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), TensorIoError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| TensorIoError::Json { path: path.into(), source })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_manifest(out_dir: &Path) -> Result<Manifest, TensorIoError> {
    let path = out_dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(TensorIoError::MissingTensor(out_dir.to_path_buf()));
    }
    let file = File::open(&path).map_err(io_err(&path))?;
    let m: Manifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|source| TensorIoError::Json { path: path.clone(), source })?;
    if m.format_version != MANIFEST_VERSION {
        return Err(TensorIoError::Corrupt { path, reason: format!("unsupported manifest version {}", m.format_version) });
    }
    Ok(m)
}

/// Rebuilds the tensor described by a manifest.
pub fn read_tensor(out_dir: &Path, manifest: &Manifest) -> Result<ScoreTensor, TensorIoError> {
    let mut tensor = ScoreTensor {
        cells: BTreeMap::new(),
        absent: manifest.absent.clone(),
        rules: manifest.rules.clone(),
        models: manifest.models.clone(),
    };
    for cf in &manifest.cells {
        let path = out_dir.join(&cf.file);
        if !path.is_file() {
            return Err(TensorIoError::MissingTensor(path));
        }
        let mut r = csv::Reader::from_path(&path).map_err(|source| TensorIoError::Csv { path: path.clone(), source })?;
        let mut cell = CellScores::default();
        for rec in r.records() {
            let rec = rec.map_err(|source| TensorIoError::Csv { path: path.clone(), source })?;
            let corrupt = |reason: &str| TensorIoError::Corrupt { path: path.clone(), reason: reason.into() };
            let idx: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| corrupt("bad draw_index"))?;
            let rule = rec.get(1).ok_or_else(|| corrupt("missing rule"))?;
            let model = rec.get(2).ok_or_else(|| corrupt("missing model"))?;
            let score: f64 = rec.get(3).and_then(|v| v.parse().ok()).ok_or_else(|| corrupt("bad score"))?;
            let v = cell.scores.entry((rule.to_string(), model.to_string())).or_default();
            if v.len() != idx {
                return Err(corrupt("draw indices out of order"));
            }
            v.push(score);
        }
        tensor.cells.insert(CellKey { panel: cf.panel.clone(), dgp: cf.dgp.clone(), date: cf.date }, cell);
    }
    Ok(tensor)
}
