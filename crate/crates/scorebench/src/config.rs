//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use scorebench_core::harness::GridSettings;
use scorebench_core::metrics::MetricSettings;
use scorebench_core::panel::SyntheticSpec;
use scorebench_core::{ModelSpec, MultivariateRule};
use serde::{Deserialize, Serialize};

/// The JSON schema published for [`RunConfig`].
pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default = "standard_rules")]
    pub rules: Vec<MultivariateRule>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub metrics: MetricSettings,
    pub output: OutputSection,
}

fn standard_rules() -> Vec<MultivariateRule> {
    MultivariateRule::STANDARD.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub panels: Vec<PanelSource>,
}

/// How a CSV panel is turned into the modelled series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    LogReturn,
    Difference,
    /// The file already holds returns or changes.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PanelSource {
    Csv {
        name: String,
        path: PathBuf,
        #[serde(default = "default_date_column")]
        date_column: String,
        #[serde(default)]
        columns: Option<Vec<String>>,
        #[serde(default = "default_transform")]
        transform: Transform,
    },
    Synthetic {
        name: String,
        generator: SyntheticSpec,
        rows: usize,
        dim: usize,
        seed: u64,
        #[serde(default)]
        start: Option<NaiveDate>,
        /// Per-column multipliers applied to the generated series.
        #[serde(default)]
        scales: Option<Vec<f64>>,
    },
}

fn default_date_column() -> String {
    "date".into()
}

fn default_transform() -> Transform {
    Transform::LogReturn
}

impl PanelSource {
    pub fn name(&self) -> &str {
        match self {
            PanelSource::Csv { name, .. } | PanelSource::Synthetic { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsSection {
    #[serde(default = "ModelSpec::standard_roster")]
    pub roster: Vec<ModelSpec>,
    /// Model keys acting as DGP; empty means all.
    #[serde(default)]
    pub dgps: Vec<String>,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection { roster: ModelSpec::standard_roster(), dgps: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frequency {
    Quarterly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n_draws")]
    pub n_draws: usize,
    #[serde(default)]
    pub ensemble_size: Option<usize>,
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default = "default_frequency")]
    pub frequency: Frequency,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default)]
    pub max_dates: Option<usize>,
    #[serde(default)]
    pub min_history: Option<usize>,
}

fn default_n_draws() -> usize {
    5000
}
fn default_subsample() -> usize {
    100
}
fn default_frequency() -> Frequency {
    Frequency::Quarterly
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n_draws: default_n_draws(),
            ensemble_size: None,
            subsample: default_subsample(),
            frequency: default_frequency(),
            root_seed: 0,
            max_dates: None,
            min_history: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Also write every calibrated model as a JSON document.
    #[serde(default)]
    pub save_models: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn grid_settings(&self) -> GridSettings {
        GridSettings {
            models: self.models.roster.clone(),
            dgps: self.models.dgps.clone(),
            rules: self.rules.clone(),
            n_draws: self.grid.n_draws,
            ensemble_size: self.grid.ensemble_size,
            subsample: self.grid.subsample,
            root_seed: self.grid.root_seed,
            max_dates: self.grid.max_dates,
            min_history: self.grid.min_history,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.data.panels.is_empty() {
            return Err(ConfigError::Invalid("data.panels is empty".into()));
        }
        let mut names: Vec<&str> = self.data.panels.iter().map(|p| p.name()).collect();
        for n in &names {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(ConfigError::Invalid(format!(
                    "panel name `{n}` must be non-empty and use only letters, digits, `-`, `_` or `.`"
                )));
            }
        }
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("panel names must be unique".into()));
        }
        for p in &self.data.panels {
            if let PanelSource::Synthetic { rows, dim, scales, .. } = p {
                if *rows < 1 || *dim < 2 {
                    return Err(ConfigError::Invalid(format!("{}: synthetic panels need rows ≥ 1 and dim ≥ 2", p.name())));
                }
                if let Some(s) = scales {
                    if s.len() != *dim || !s.iter().all(|v| v.is_finite() && *v > 0.0) {
                        return Err(ConfigError::Invalid(format!(
                            "{}: scales must hold {dim} positive finite values",
                            p.name()
                        )));
                    }
                }
            }
        }
        self.grid_settings().validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// A validated config and the directory relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    /// As written in the file; echoed into manifests.
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.directory)
    }
}

/// Loads and validates a config file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let config = RunConfig::from_json(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
    config.validate()?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}
