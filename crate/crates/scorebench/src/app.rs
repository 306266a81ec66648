//! The three commands as library functions, with the exit-code mapping
//! used by the binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scorebench_core::harness::{grid_units, HarnessError, NamedPanel};
use scorebench_core::metrics::{compute_report, MetricReport};
use scorebench_core::ModelSpec;

use crate::config::{ConfigError, LoadedConfig};
use crate::ingest::{self, BuildError, PanelManifest};
use crate::model_io::{ModelDocument, DCC_FORM, EGARCH_FORM};
use crate::report_io::write_report;
use crate::runner::{build_pool, run_grid_parallel, GridRun};
use crate::tensor_io::{
    read_manifest, read_tensor, write_cells, write_json, Manifest, PanelInfo, TensorIoError, MANIFEST_FILE,
    MANIFEST_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Partial = 1,
    Config = 2,
    Io = 3,
    /// Every cell of the grid is absent.
    TotalFailure = 4,
}

fn cell_status(present: usize, absent: usize) -> ExitStatus {
    match (present, absent) {
        (_, 0) => ExitStatus::Ok,
        (0, _) => ExitStatus::TotalFailure,
        _ => ExitStatus::Partial,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] HarnessError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Io(#[from] TensorIoError),
    #[error("cannot start thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl AppError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            AppError::Config(_) | AppError::Grid(_) => ExitStatus::Config,
            AppError::Build(BuildError::Panel { .. }) => ExitStatus::Config,
            AppError::Build(_) | AppError::Io(_) | AppError::Pool(_) => ExitStatus::Io,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub verbose: bool,
}

impl RunOptions {
    pub fn output_dir(&self, cfg: &LoadedConfig) -> PathBuf {
        self.output.clone().unwrap_or_else(|| cfg.output_dir())
    }
}

pub fn ingest(cfg: &LoadedConfig, opts: &RunOptions) -> Result<PanelManifest, AppError> {
    let out = opts.output_dir(cfg);
    let (_, manifest) = ingest::ingest(cfg, &out)?;
    Ok(manifest)
}

fn panels_for(cfg: &LoadedConfig, out: &Path, verbose: bool) -> Result<Vec<NamedPanel>, AppError> {
    if let Some(p) = ingest::load_cached(cfg, out)? {
        if verbose {
            eprintln!("using cached panels in {}", out.join(ingest::PANEL_DIR).display());
        }
        return Ok(p);
    }
    Ok(ingest::ingest(cfg, out)?.0)
}

/// Free-form notes on functional forms, keyed by model.
fn model_notes(models: &[ModelSpec]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for m in models {
        match m {
            ModelSpec::CccGarch { .. } => {
                out.insert(m.key(), EGARCH_FORM.to_string());
            }
            ModelSpec::DccGarch { .. } => {
                out.insert(m.key(), format!("{EGARCH_FORM}. {DCC_FORM}"));
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub manifest: Manifest,
    pub run: GridRun,
}

impl SimulateOutcome {
    pub fn status(&self) -> ExitStatus {
        cell_status(self.manifest.entry_count, self.manifest.absent.len())
    }
}

pub fn simulate(cfg: &LoadedConfig, opts: &RunOptions) -> Result<SimulateOutcome, AppError> {
    let out = opts.output_dir(cfg);
    let panels = panels_for(cfg, &out, opts.verbose)?;
    let settings = cfg.config.grid_settings();
    let units = grid_units(&panels, &settings)?;
    let pool = build_pool(opts.threads)?;
    let verbose = opts.verbose;
    let progress = move |done: usize, total: usize| {
        if verbose {
            eprintln!("unit {done}/{total}");
        }
    };
    let run = run_grid_parallel(&panels, &settings, &pool, cfg.config.output.save_models, &progress)?;

    let scores = out.join("scores");
    if scores.exists() {
        std::fs::remove_dir_all(&scores).map_err(|source| TensorIoError::Io { path: scores.clone(), source })?;
    }
    let cells = write_cells(&run.tensor, &out)?;
    let specs = settings.unique_models();
    if cfg.config.output.save_models {
        for fm in &run.models {
            let p = &panels[fm.panel];
            let spec = specs.iter().find(|s| s.key() == fm.key).cloned();
            let window_end = p.panel.dates()[fm.unit.row.saturating_sub(1)];
            ModelDocument::new(&fm.key, spec, &p.name, fm.unit.date, window_end, settings.root_seed, fm.model.clone())
                .write(&out)?;
        }
    }
    let panel_info = panels
        .iter()
        .enumerate()
        .map(|(i, p)| PanelInfo {
            name: p.name.clone(),
            rows: p.panel.rows(),
            labels: p.panel.labels().to_vec(),
            first_date: p.panel.dates().first().copied(),
            last_date: p.panel.dates().last().copied(),
            evaluation_dates: units.iter().filter(|u| u.panel == i).map(|u| u.date).collect(),
        })
        .collect();
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        root_seed: settings.root_seed,
        config: cfg.config.clone(),
        panels: panel_info,
        rules: run.tensor.rules.clone(),
        models: run.tensor.models.clone(),
        dgps: settings.dgp_keys(),
        model_notes: model_notes(&specs),
        entry_count: run.tensor.entry_count(),
        cells,
        absent_count: run.tensor.absent.len(),
        absent: run.tensor.absent.clone(),
    };
    write_json(&manifest, &out.join(MANIFEST_FILE))?;
    Ok(SimulateOutcome { manifest, run })
}

#[derive(Debug)]
pub struct ReportOutcome {
    pub report: MetricReport,
    pub absent: usize,
    pub present: usize,
}

impl ReportOutcome {
    pub fn status(&self) -> ExitStatus {
        cell_status(self.present, self.absent)
    }
}

pub fn report(cfg: &LoadedConfig, opts: &RunOptions) -> Result<ReportOutcome, AppError> {
    let out = opts.output_dir(cfg);
    let manifest = read_manifest(&out)?;
    let tensor = read_tensor(&out, &manifest)?;
    let report = compute_report(&tensor, manifest.config.grid.subsample, manifest.root_seed, &cfg.config.metrics);
    write_report(&report, &out)?;
    Ok(ReportOutcome { report, absent: manifest.absent.len(), present: manifest.entry_count })
}
