//! Simulation grid: at every quarterly evaluation date each roster model is
//! calibrated, each designated DGP generates realisations, and every
//! model's ensemble is scored against those realisations under every rule.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::models::mvgarch::{fit_mv_garch_from_stage, fit_univariate_stage, UnivariateStage, MIN_MV_GARCH_WINDOW};
use crate::models::{fit_model, CalibratedModel, CorrelationKind, ModelError, ModelSpec};
use crate::panel::SeriesPanel;
use crate::rng::SeedPath;
use crate::scoring::{ForecastEnsemble, MultivariateRule, ScoreError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("no quarterly date has {needed} rows of history (panel has {rows} rows)")]
    InsufficientHistory { needed: usize, rows: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// A panel with the name used in outputs and seed derivation.
#[derive(Debug, Clone)]
pub struct NamedPanel {
    pub name: String,
    pub panel: SeriesPanel,
}

/// Grid settings that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub models: Vec<ModelSpec>,
    /// Keys of the models acting as DGP; empty means every model.
    #[serde(default)]
    pub dgps: Vec<String>,
    pub rules: Vec<MultivariateRule>,
    /// Realisations drawn from each DGP.
    pub n_draws: usize,
    /// Draws in each candidate ensemble; defaults to `n_draws`.
    #[serde(default)]
    pub ensemble_size: Option<usize>,
    pub subsample: usize,
    pub root_seed: u64,
    /// Keep only the first `max_dates` eligible evaluation dates.
    #[serde(default)]
    pub max_dates: Option<usize>,
    /// Rows required before the first date; defaults to the longest window.
    #[serde(default)]
    pub min_history: Option<usize>,
}

impl GridSettings {
    pub fn standard(root_seed: u64) -> Self {
        GridSettings {
            models: ModelSpec::standard_roster(),
            dgps: Vec::new(),
            rules: MultivariateRule::STANDARD.to_vec(),
            n_draws: 5000,
            ensemble_size: None,
            subsample: 100,
            root_seed,
            max_dates: None,
            min_history: None,
        }
    }

    pub fn ensemble_size(&self) -> usize {
        self.ensemble_size.unwrap_or(self.n_draws)
    }

    pub fn min_history(&self) -> usize {
        self.min_history
            .unwrap_or_else(|| self.models.iter().map(|m| m.window()).max().unwrap_or(0))
    }

    /// Roster with duplicate keys removed, first occurrence kept.
    pub fn unique_models(&self) -> Vec<ModelSpec> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for m in &self.models {
            if seen.insert(m.key(), ()).is_none() {
                out.push(m.clone());
            }
        }
        out
    }

    pub fn dgp_keys(&self) -> Vec<String> {
        let keys: Vec<String> = self.unique_models().iter().map(|m| m.key()).collect();
        if self.dgps.is_empty() {
            keys
        } else {
            keys.into_iter().filter(|k| self.dgps.contains(k)).collect()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.models.is_empty() {
            return Err(HarnessError::InvalidGrid("roster is empty".into()));
        }
        if self.rules.is_empty() {
            return Err(HarnessError::InvalidGrid("no scoring rules".into()));
        }
        for m in &self.models {
            m.validate().map_err(|e| HarnessError::InvalidGrid(e.to_string()))?;
        }
        for r in &self.rules {
            r.validate()?;
        }
        let keys: Vec<String> = self.models.iter().map(|m| m.key()).collect();
        for d in &self.dgps {
            if !keys.contains(d) {
                return Err(HarnessError::InvalidGrid(alloc::format!("DGP {d} is not in the roster")));
            }
        }
        if self.n_draws == 0 || self.ensemble_size() < 2 {
            return Err(HarnessError::InvalidGrid("n_draws must be positive and ensembles need 2 draws".into()));
        }
        if self.subsample == 0 || self.subsample > self.n_draws {
            return Err(HarnessError::InvalidGrid("subsample must lie in 1..=n_draws".into()));
        }
        let longest = self.models.iter().map(|m| m.window()).max().unwrap_or(0);
        if self.min_history() < longest {
            return Err(HarnessError::InvalidGrid(alloc::format!(
                "min_history {} is shorter than the longest window {longest}",
                self.min_history()
            )));
        }
        Ok(())
    }
}

fn quarter(d: NaiveDate) -> (i32, u32) {
    (d.year(), (d.month() - 1) / 3)
}

/// First panel date of each calendar quarter that has at least
/// `min_history` earlier rows, as `(row index, date)`.
pub fn evaluation_dates(panel: &SeriesPanel, min_history: usize) -> Result<Vec<(usize, NaiveDate)>, HarnessError> {
    let dates = panel.dates();
    let mut out = Vec::new();
    for (i, &d) in dates.iter().enumerate() {
        let first_of_quarter = i == 0 || quarter(dates[i - 1]) != quarter(d);
        if first_of_quarter && i >= min_history && i < dates.len() {
            out.push((i, d));
        }
    }
    if out.is_empty() || min_history >= dates.len() {
        return Err(HarnessError::InsufficientHistory { needed: min_history, rows: dates.len() });
    }
    Ok(out)
}

fn date_seed(d: NaiveDate) -> u64 {
    d.num_days_from_ce() as u64
}

pub fn fit_seed(root: u64, panel: &str, date: NaiveDate, key: &str) -> u64 {
    SeedPath::root(root).with_str(panel).with_u64(date_seed(date)).with_str(key).with_str("fit").seed()
}

pub fn ensemble_seed(root: u64, panel: &str, date: NaiveDate, key: &str) -> u64 {
    SeedPath::root(root).with_str(panel).with_u64(date_seed(date)).with_str(key).with_str("ensemble").seed()
}

pub fn realisation_seed(root: u64, panel: &str, date: NaiveDate, dgp: &str) -> u64 {
    SeedPath::root(root).with_str(panel).with_u64(date_seed(date)).with_str(dgp).with_str("realisations").seed()
}

/// Which part of the protocol failed for an absent cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureStage {
    Calibration,
    Sampling,
    Scoring,
}

/// A `(panel, date, model)` combination without scores.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbsentCell {
    pub panel: String,
    pub date: NaiveDate,
    pub model: String,
    pub stage: FailureStage,
    pub reason: String,
}

/// One `(panel, DGP, date)` slice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub panel: String,
    pub dgp: String,
    pub date: NaiveDate,
}

/// Scores of one slice: `(rule label, model key) → N values`, all against
/// the same realisations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellScores {
    pub scores: BTreeMap<(String, String), Vec<f64>>,
}

impl CellScores {
    pub fn get(&self, rule: &str, model: &str) -> Option<&[f64]> {
        self.scores.get(&(rule.into(), model.into())).map(|v| v.as_slice())
    }

    pub fn models(&self) -> Vec<String> {
        let mut m: Vec<String> = self.scores.keys().map(|(_, m)| m.clone()).collect();
        m.sort();
        m.dedup();
        m
    }
}

/// All scores of a grid run, ordered by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTensor {
    pub cells: BTreeMap<CellKey, CellScores>,
    pub absent: Vec<AbsentCell>,
    /// Rule labels in roster order.
    pub rules: Vec<String>,
    /// Model keys in roster order.
    pub models: Vec<String>,
}

impl ScoreTensor {
    pub fn entry_count(&self) -> usize {
        self.cells.values().flat_map(|c| c.scores.values()).map(|v| v.len()).sum()
    }

    /// Merges unit outputs; the result does not depend on merge order.
    pub fn insert(&mut self, out: UnitOutput) {
        for (k, v) in out.cells {
            self.cells.insert(k, v);
        }
        self.absent.extend(out.absent);
        self.absent.sort();
        self.absent.dedup();
    }
}

/// Independent work unit: one panel at one evaluation date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridUnit {
    pub panel: usize,
    pub row: usize,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, Default)]
pub struct UnitOutput {
    pub cells: Vec<(CellKey, CellScores)>,
    pub absent: Vec<AbsentCell>,
    /// Calibrated models by key; filled only by [`run_unit_keeping_models`].
    pub models: Vec<(String, CalibratedModel)>,
}

/// Enumerates the work units of a grid.
pub fn grid_units(panels: &[NamedPanel], settings: &GridSettings) -> Result<Vec<GridUnit>, HarnessError> {
    settings.validate()?;
    let mut names = BTreeMap::new();
    for p in panels {
        if names.insert(p.name.clone(), ()).is_some() {
            return Err(HarnessError::InvalidGrid(alloc::format!("duplicate panel name {}", p.name)));
        }
    }
    let mut out = Vec::new();
    for (pi, p) in panels.iter().enumerate() {
        let mut dates = evaluation_dates(&p.panel, settings.min_history())?;
        if let Some(k) = settings.max_dates {
            dates.truncate(k);
        }
        out.extend(dates.into_iter().map(|(row, date)| GridUnit { panel: pi, row, date }));
    }
    Ok(out)
}

/// Stage 1 for one unit: every roster model calibrated on the window
/// ending the row before the evaluation date. CCC and DCC fits on the same
/// window share their univariate stage.
pub fn calibrate_unit(
    panel: &NamedPanel,
    unit: GridUnit,
    models: &[ModelSpec],
    root_seed: u64,
) -> Vec<(ModelSpec, Result<CalibratedModel, ModelError>)> {
    let mut stages: BTreeMap<usize, Result<UnivariateStage, ModelError>> = BTreeMap::new();
    let mut out = Vec::with_capacity(models.len());
    for spec in models {
        let n = spec.window();
        let key = spec.key();
        let fitted = match panel.panel.window_before(unit.row, n) {
            None => Err(ModelError::WindowTooShort { needed: n, got: unit.row.min(panel.panel.rows()) }),
            Some(window) => match spec {
                ModelSpec::CccGarch { .. } | ModelSpec::DccGarch { .. } => {
                    let kind = if matches!(spec, ModelSpec::CccGarch { .. }) {
                        CorrelationKind::CCC
                    } else {
                        CorrelationKind::DCC
                    };
                    let stage = stages.entry(n).or_insert_with(|| shared_stage(&window));
                    match stage {
                        Ok(s) => fit_mv_garch_from_stage(s, kind).map(CalibratedModel::MvGarch),
                        Err(e) => Err(e.clone()),
                    }
                }
                _ => fit_model(spec, &window, fit_seed(root_seed, &panel.name, unit.date, &key)),
            },
        };
        out.push((spec.clone(), fitted));
    }
    out
}

fn shared_stage(window: &DMatrix<f64>) -> Result<UnivariateStage, ModelError> {
    if window.nrows() < MIN_MV_GARCH_WINDOW {
        return Err(ModelError::WindowTooShort { needed: MIN_MV_GARCH_WINDOW, got: window.nrows() });
    }
    crate::models::copula::check_columns(window)?;
    fit_univariate_stage(window)
}

/// `S(F_m, y_i)` for every row `y_i` of `realisations`.
pub fn scoring_inputs(
    ensemble: &ForecastEnsemble,
    realisations: &ForecastEnsemble,
    rule: &MultivariateRule,
) -> Result<Vec<f64>, ScoreError> {
    if ensemble.dim() != realisations.dim() {
        return Err(ScoreError::DimensionMismatch { ensemble: ensemble.dim(), observation: realisations.dim() });
    }
    let scorer = rule.scorer(ensemble)?;
    realisations.draws().map(|y| scorer.score(y)).collect()
}

/// Stages 1–3 for one unit.
pub fn run_unit(panel: &NamedPanel, unit: GridUnit, settings: &GridSettings) -> UnitOutput {
    run_unit_inner(panel, unit, settings, false)
}

/// [`run_unit`], also returning the calibrated models.
pub fn run_unit_keeping_models(panel: &NamedPanel, unit: GridUnit, settings: &GridSettings) -> UnitOutput {
    run_unit_inner(panel, unit, settings, true)
}

fn run_unit_inner(panel: &NamedPanel, unit: GridUnit, settings: &GridSettings, keep_models: bool) -> UnitOutput {
    let models = settings.unique_models();
    let root = settings.root_seed;
    let mut out = UnitOutput::default();
    let absent = |model: &str, stage: FailureStage, reason: String| AbsentCell {
        panel: panel.name.clone(),
        date: unit.date,
        model: model.into(),
        stage,
        reason,
    };

    let fitted = calibrate_unit(panel, unit, &models, root);
    let mut calibrated: Vec<(String, CalibratedModel)> = Vec::new();
    for (spec, r) in fitted {
        let key = spec.key();
        match r {
            Ok(m) => calibrated.push((key, m)),
            Err(e) => out.absent.push(absent(&key, FailureStage::Calibration, e.to_string())),
        }
    }

    let ens_size = settings.ensemble_size();
    let mut ensembles: Vec<(String, ForecastEnsemble)> = Vec::new();
    for (key, m) in &calibrated {
        match m.sample(ens_size, ensemble_seed(root, &panel.name, unit.date, key)) {
            Ok(e) => ensembles.push((key.clone(), e.with_id(key.clone(), Some(unit.date)))),
            Err(e) => out.absent.push(absent(key, FailureStage::Sampling, e.to_string())),
        }
    }

    // scorers cache ensemble-only terms once per (model, rule)
    let mut scorers = Vec::new();
    for (key, e) in &ensembles {
        for rule in &settings.rules {
            match rule.scorer(e) {
                Ok(s) => scorers.push((rule.label(), key.clone(), s)),
                Err(err) => out.absent.push(absent(key, FailureStage::Scoring, err.to_string())),
            }
        }
    }

    for dgp in settings.dgp_keys() {
        let Some((_, dgp_model)) = calibrated.iter().find(|(k, _)| *k == dgp) else {
            continue;
        };
        let realisations = match dgp_model.sample(settings.n_draws, realisation_seed(root, &panel.name, unit.date, &dgp)) {
            Ok(r) => r,
            Err(e) => {
                out.absent.push(absent(&dgp, FailureStage::Sampling, e.to_string()));
                continue;
            }
        };
        let mut cell = CellScores::default();
        for (rule, key, scorer) in &scorers {
            let scores: Result<Vec<f64>, ScoreError> = realisations.draws().map(|y| scorer.score(y)).collect();
            match scores {
                Ok(v) => {
                    cell.scores.insert((rule.clone(), key.clone()), v);
                }
                Err(e) => out.absent.push(absent(key, FailureStage::Scoring, e.to_string())),
            }
        }
        out.cells.push((CellKey { panel: panel.name.clone(), dgp: dgp.clone(), date: unit.date }, cell));
    }
    if keep_models {
        out.models = calibrated;
    }
    out
}

/// Empty tensor carrying the rule and model axes of `settings`.
pub fn empty_tensor(settings: &GridSettings) -> ScoreTensor {
    ScoreTensor {
        cells: BTreeMap::new(),
        absent: Vec::new(),
        rules: settings.rules.iter().map(|r| r.label()).collect(),
        models: settings.unique_models().iter().map(|m| m.key()).collect(),
    }
}

/// Runs every unit sequentially.
pub fn run_grid(panels: &[NamedPanel], settings: &GridSettings) -> Result<ScoreTensor, HarnessError> {
    let units = grid_units(panels, settings)?;
    let mut tensor = empty_tensor(settings);
    for u in units {
        tensor.insert(run_unit(&panels[u.panel], u, settings));
    }
    Ok(tensor)
}
