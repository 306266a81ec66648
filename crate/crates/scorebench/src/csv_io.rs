//! CSV import and export of dated panels.
//!
//! Layout: a header row, a date column (ISO-8601, named `date` by
//! default), then one numeric column per series. Row numbers in errors
//! count data rows from 1, the header excluded.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use scorebench_core::panel::{PanelError, PanelKind, SeriesPanel};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: cannot read: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed CSV: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: cannot parse date `{value}`")]
    UnparseableDate { path: PathBuf, row: usize, value: String },
    #[error("{path}: row {row}, column `{column}`: non-finite or missing value `{value}`")]
    NonFiniteValue { path: PathBuf, row: usize, column: String, value: String },
    #[error("{path}: row {row}: date {date} does not follow the previous row's date")]
    NonMonotoneDates { path: PathBuf, row: usize, date: NaiveDate },
    #[error("{path}: {source}")]
    Panel { path: PathBuf, source: PanelError },
}

/// Which columns to read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    #[serde(default = "default_date_column")]
    pub date_column: String,
    /// Value columns in output order; `None` takes every other column.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
}

fn default_date_column() -> String {
    "date".into()
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema { date_column: default_date_column(), columns: None }
    }
}

/// Reads a panel of levels.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<SeriesPanel, IngestError> {
    load_csv_as(path, schema, PanelKind::Levels)
}

/// Reads a panel and tags it with `kind`.
pub fn load_csv_as(path: &Path, schema: &CsvSchema, kind: PanelKind) -> Result<SeriesPanel, IngestError> {
    let p = || path.to_path_buf();
    let file = File::open(path).map_err(|source| IngestError::Io { path: p(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|source| IngestError::Csv { path: p(), source })?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn { path: p(), column: name.into() })
    };
    let date_idx = find(&schema.date_column)?;
    let (labels, value_idx): (Vec<String>, Vec<usize>) = match &schema.columns {
        Some(cols) => {
            let mut idx = Vec::with_capacity(cols.len());
            for c in cols {
                idx.push(find(c)?);
            }
            (cols.clone(), idx)
        }
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(i, h)| (h.to_string(), i))
            .unzip(),
    };

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|source| IngestError::Csv { path: p(), source })?;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|_| IngestError::UnparseableDate { path: p(), row, value: raw_date.into() })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(IngestError::NonMonotoneDates { path: p(), row, date });
            }
        }
        dates.push(date);
        for (k, &c) in value_idx.iter().enumerate() {
            let raw = rec.get(c).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(IngestError::NonFiniteValue {
                        path: p(),
                        row,
                        column: labels[k].clone(),
                        value: raw.into(),
                    })
                }
            }
        }
    }
    let d = labels.len();
    let m = DMatrix::from_row_slice(dates.len(), d, &values);
    SeriesPanel::new(dates, m, labels, kind).map_err(|source| IngestError::Panel { path: p(), source })
}

/// Writes a panel with the shortest representation that reads back to
/// the same `f64`.
pub fn write_csv(panel: &SeriesPanel, path: &Path) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "date")?;
    for l in panel.labels() {
        write!(w, ",{}", quote(l))?;
    }
    writeln!(w)?;
    let v = panel.values();
    for (i, d) in panel.dates().iter().enumerate() {
        write!(w, "{d}")?;
        for k in 0..panel.dim() {
            write!(w, ",{}", v[(i, k)])?;
        }
        writeln!(w)?;
    }
    w.flush()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
