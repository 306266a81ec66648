//! Writers for `report.csv`, `figures/*.csv` and `summary.json`.

use std::path::Path;

use scorebench_core::metrics::{FigureTable, MetricReport};

use crate::tensor_io::{write_json, TensorIoError};

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FIGURE_DIR: &str = "figures";

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, TensorIoError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| TensorIoError::Io { path: dir.into(), source })?;
    }
    csv::Writer::from_path(path).map_err(|source| TensorIoError::Csv { path: path.into(), source })
}

pub fn write_report_csv(report: &MetricReport, path: &Path) -> Result<(), TensorIoError> {
    let mut w = csv_writer(path)?;
    let err = |source| TensorIoError::Csv { path: path.into(), source };
    w.write_record(["panel", "rule", "dgp", "model", "date", "metric", "value"]).map_err(err)?;
    for r in &report.rows {
        let date = r.date.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([&r.panel, &r.rule, &r.dgp, &r.model, &date, r.metric, &format!("{}", r.value)])
            .map_err(|source| TensorIoError::Csv { path: path.into(), source })?;
    }
    w.flush().map_err(|source| TensorIoError::Io { path: path.into(), source })
}

pub fn write_figure(table: &FigureTable, path: &Path) -> Result<(), TensorIoError> {
    let mut w = csv_writer(path)?;
    let err = |source| TensorIoError::Csv { path: path.into(), source };
    w.write_record(&table.columns).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(|source| TensorIoError::Csv { path: path.into(), source })?;
    }
    w.flush().map_err(|source| TensorIoError::Io { path: path.into(), source })
}

/// Writes the whole report under `out_dir`.
pub fn write_report(report: &MetricReport, out_dir: &Path) -> Result<(), TensorIoError> {
    write_report_csv(report, &out_dir.join(REPORT_FILE))?;
    for (stem, table) in &report.figures {
        write_figure(table, &out_dir.join(FIGURE_DIR).join(format!("{stem}.csv")))?;
    }
    write_json(&report.summary, &out_dir.join(SUMMARY_FILE))
}
