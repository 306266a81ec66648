//! Builds the modelled panels from a config and caches them under
//! `<output>/panels/`.

use std::path::{Path, PathBuf};

use scorebench_core::harness::NamedPanel;
use scorebench_core::panel::{
    default_start_date, generate_synthetic_panel, summary_statistics, to_changes, ChangeMode, PanelError, PanelKind,
    SeriesPanel, SummaryStats,
};
use serde::{Deserialize, Serialize};

use crate::config::{DataSection, LoadedConfig, PanelSource, Transform};
use crate::csv_io::{load_csv_as, write_csv, CsvSchema, IngestError};
use crate::tensor_io::{write_json, TensorIoError};

pub const PANEL_DIR: &str = "panels";
pub const PANEL_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedPanel {
    pub name: String,
    pub kind: PanelKind,
    pub rows: usize,
    pub labels: Vec<String>,
    /// Relative to the output directory.
    pub file: String,
    /// Generator seed for synthetic panels.
    pub seed: Option<u64>,
    pub summary: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelManifest {
    pub format_version: u32,
    /// The `data` section the cache was built from.
    pub data: DataSection,
    pub panels: Vec<CachedPanel>,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("panel `{name}`: {source}")]
    Panel { name: String, source: PanelError },
    #[error(transparent)]
    Write(#[from] TensorIoError),
}

fn panel_err(name: &str) -> impl FnOnce(PanelError) -> BuildError + '_ {
    move |source| BuildError::Panel { name: name.into(), source }
}

/// Builds one panel of returns or changes.
pub fn build_panel(cfg: &LoadedConfig, source: &PanelSource) -> Result<SeriesPanel, BuildError> {
    match source {
        PanelSource::Csv { name, path, date_column, columns, transform } => {
            let schema = CsvSchema { date_column: date_column.clone(), columns: columns.clone() };
            let path = cfg.resolve(path);
            match transform {
                Transform::None => Ok(load_csv_as(&path, &schema, PanelKind::LogReturns)?),
                Transform::LogReturn | Transform::Difference => {
                    let levels = load_csv_as(&path, &schema, PanelKind::Levels)?;
                    let mode =
                        if *transform == Transform::LogReturn { ChangeMode::LogReturn } else { ChangeMode::Difference };
                    to_changes(&levels, mode).map_err(panel_err(name))
                }
            }
        }
        PanelSource::Synthetic { name, generator, rows, dim, seed, start, scales } => {
            let panel =
                generate_synthetic_panel(generator, *rows, *dim, *seed, false, start.unwrap_or_else(default_start_date))
                    .map_err(panel_err(name))?;
            let Some(scales) = scales else { return Ok(panel) };
            let mut values = panel.values().clone();
            for (k, s) in scales.iter().enumerate() {
                values.column_mut(k).iter_mut().for_each(|v| *v *= s);
            }
            SeriesPanel::new(panel.dates().to_vec(), values, panel.labels().to_vec(), panel.kind()).map_err(panel_err(name))
        }
    }
}

pub fn panel_file(name: &str) -> String {
    format!("{PANEL_DIR}/{name}.csv")
}

/// Builds every panel, writes the cache and returns the panels with their
/// summary statistics.
pub fn ingest(cfg: &LoadedConfig, out_dir: &Path) -> Result<(Vec<NamedPanel>, PanelManifest), BuildError> {
    let mut panels = Vec::new();
    let mut cached = Vec::new();
    for src in &cfg.config.data.panels {
        let panel = build_panel(cfg, src)?;
        let summary = summary_statistics(&panel).map_err(panel_err(src.name()))?;
        let file = panel_file(src.name());
        let path = out_dir.join(&file);
        write_csv(&panel, &path).map_err(|source| TensorIoError::Io { path: path.clone(), source })?;
        cached.push(CachedPanel {
            name: src.name().into(),
            kind: panel.kind(),
            rows: panel.rows(),
            labels: panel.labels().to_vec(),
            file,
            seed: match src {
                PanelSource::Synthetic { seed, .. } => Some(*seed),
                PanelSource::Csv { .. } => None,
            },
            summary,
        });
        panels.push(NamedPanel { name: src.name().into(), panel });
    }
    let manifest =
        PanelManifest { format_version: PANEL_MANIFEST_VERSION, data: cfg.config.data.clone(), panels: cached };
    write_json(&manifest, &manifest_path(out_dir))?;
    Ok((panels, manifest))
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join(PANEL_DIR).join("manifest.json")
}

/// Loads the cached panels when the cache was built from the same `data`
/// section; `Ok(None)` means the cache is missing or stale.
pub fn load_cached(cfg: &LoadedConfig, out_dir: &Path) -> Result<Option<Vec<NamedPanel>>, BuildError> {
    let path = manifest_path(out_dir);
    let Ok(text) = std::fs::read_to_string(&path) else { return Ok(None) };
    let Ok(manifest) = serde_json::from_str::<PanelManifest>(&text) else { return Ok(None) };
    if manifest.format_version != PANEL_MANIFEST_VERSION || manifest.data != cfg.config.data {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(manifest.panels.len());
    for p in &manifest.panels {
        let file = out_dir.join(&p.file);
        if !file.is_file() {
            return Ok(None);
        }
        let panel = load_csv_as(&file, &CsvSchema::default(), p.kind)?;
        out.push(NamedPanel { name: p.name.clone(), panel });
    }
    Ok(Some(out))
}

/// Plain-text table of the per-column summary statistics.
pub fn format_summary(name: &str, s: &SummaryStats) -> String {
    let mut out = format!("{name}\n{:<16} {:>12} {:>12} {:>10} {:>10}\n", "series", "mean", "volatility", "skewness", "kurtosis");
    for c in &s.columns {
        out.push_str(&format!(
            "{:<16} {:>12.3e} {:>12.3e} {:>10.3} {:>10.3}\n",
            c.label, c.mean, c.volatility, c.skewness, c.kurtosis
        ));
    }
    out
}
