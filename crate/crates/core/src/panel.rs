//! Dated multivariate panels, change transforms, summary statistics and
//! synthetic panel generators.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::rng::SeedPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelKind {
    Levels,
    LogReturns,
    Differences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeMode {
    LogReturn,
    Difference,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PanelError {
    #[error("panel needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("panel has {rows} rows but {dates} dates")]
    ShapeMismatch { rows: usize, dates: usize },
    #[error("{labels} labels for {columns} columns")]
    LabelMismatch { labels: usize, columns: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },
    #[error("dates not strictly increasing at row {row}")]
    NonMonotoneDates { row: usize },
    #[error("non-positive level at row {row}, column {column}")]
    NonPositiveLevel { row: usize, column: usize },
    #[error("expected a panel of levels, got {0:?}")]
    NotLevels(PanelKind),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("column {0} is constant")]
    DegenerateColumn(usize),
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
}

/// `T × d` matrix of observations indexed by strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    dates: Vec<NaiveDate>,
    values: DMatrix<f64>,
    labels: Vec<String>,
    kind: PanelKind,
}

impl SeriesPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        values: DMatrix<f64>,
        labels: Vec<String>,
        kind: PanelKind,
    ) -> Result<Self, PanelError> {
        if values.ncols() < 2 {
            return Err(PanelError::TooFewColumns(values.ncols()));
        }
        if values.nrows() != dates.len() {
            return Err(PanelError::ShapeMismatch { rows: values.nrows(), dates: dates.len() });
        }
        if labels.len() != values.ncols() {
            return Err(PanelError::LabelMismatch { labels: labels.len(), columns: values.ncols() });
        }
        for row in 1..dates.len() {
            if dates[row] <= dates[row - 1] {
                return Err(PanelError::NonMonotoneDates { row });
            }
        }
        for row in 0..values.nrows() {
            for column in 0..values.ncols() {
                if !values[(row, column)].is_finite() {
                    return Err(PanelError::NonFiniteValue { row, column });
                }
            }
        }
        Ok(SeriesPanel { dates, values, labels, kind })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> PanelKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    /// The `n` rows strictly before row `end`.
    pub fn window_before(&self, end: usize, n: usize) -> Option<DMatrix<f64>> {
        if n == 0 || end < n || end > self.rows() {
            return None;
        }
        Some(self.values.rows(end - n, n).into_owned())
    }
}

/// Log returns or first differences; the output has one row fewer.
pub fn to_changes(panel: &SeriesPanel, mode: ChangeMode) -> Result<SeriesPanel, PanelError> {
    if panel.kind != PanelKind::Levels {
        return Err(PanelError::NotLevels(panel.kind));
    }
    let t = panel.rows();
    if t < 2 {
        return Err(PanelError::TooFewRows { needed: 2, got: t });
    }
    let d = panel.dim();
    let v = &panel.values;
    if mode == ChangeMode::LogReturn {
        for row in 0..t {
            for column in 0..d {
                if v[(row, column)] <= 0.0 {
                    return Err(PanelError::NonPositiveLevel { row, column });
                }
            }
        }
    }
    let out = DMatrix::from_fn(t - 1, d, |i, k| match mode {
        ChangeMode::LogReturn => (v[(i + 1, k)] / v[(i, k)]).ln(),
        ChangeMode::Difference => v[(i + 1, k)] - v[(i, k)],
    });
    let kind = match mode {
        ChangeMode::LogReturn => PanelKind::LogReturns,
        ChangeMode::Difference => PanelKind::Differences,
    };
    SeriesPanel::new(panel.dates[1..].to_vec(), out, panel.labels.clone(), kind)
}

/// Rebuilds levels from a change panel and the first row of levels.
pub fn cumulate_changes(
    changes: &SeriesPanel,
    first_date: NaiveDate,
    first_row: &[f64],
) -> Result<SeriesPanel, PanelError> {
    let d = changes.dim();
    let t = changes.rows();
    let mut out = DMatrix::<f64>::zeros(t + 1, d);
    for k in 0..d {
        out[(0, k)] = first_row[k];
        let mut acc = first_row[k];
        let mut log_acc = first_row[k].ln();
        for i in 0..t {
            let c = changes.values[(i, k)];
            out[(i + 1, k)] = match changes.kind {
                PanelKind::LogReturns => {
                    log_acc += c;
                    log_acc.exp()
                }
                _ => {
                    acc += c;
                    acc
                }
            };
        }
    }
    let mut dates = Vec::with_capacity(t + 1);
    dates.push(first_date);
    dates.extend_from_slice(&changes.dates);
    SeriesPanel::new(dates, out, changes.labels.clone(), PanelKind::Levels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub label: String,
    pub mean: f64,
    pub volatility: f64,
    pub skewness: f64,
    /// Raw standardized fourth moment (≈ 3 for a Gaussian).
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub columns: Vec<ColumnStats>,
}

pub fn summary_statistics(panel: &SeriesPanel) -> Result<SummaryStats, PanelError> {
    let t = panel.rows();
    if t < 4 {
        return Err(PanelError::TooFewRows { needed: 4, got: t });
    }
    let mut columns = Vec::with_capacity(panel.dim());
    for k in 0..panel.dim() {
        let col = panel.column(k);
        let n = col.len() as f64;
        let mean = math::mean(&col);
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in &col {
            let e = x - mean;
            let e2 = e * e;
            m2 += e2;
            m3 += e2 * e;
            m4 += e2 * e2;
        }
        if m2 <= 0.0 || col.iter().all(|&x| x == col[0]) {
            return Err(PanelError::DegenerateColumn(k));
        }
        let volatility = (m2 / (n - 1.0)).sqrt();
        m2 /= n;
        m3 /= n;
        m4 /= n;
        columns.push(ColumnStats {
            label: panel.labels[k].clone(),
            mean,
            volatility,
            skewness: m3 / m2.powf(1.5),
            kurtosis: m4 / (m2 * m2),
        });
    }
    Ok(SummaryStats { columns })
}

/// Parameters of the synthetic panel generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticSpec {
    /// i.i.d. Gaussian with equicorrelation.
    Gaussian {
        #[serde(default = "default_vol")]
        volatility: f64,
        #[serde(default)]
        correlation: f64,
    },
    /// GARCH(1,1) variances driven by a Student-t copula innovation.
    TCopulaGarch {
        #[serde(default = "default_nu")]
        nu: f64,
        #[serde(default = "default_omega")]
        omega: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_corr")]
        correlation: f64,
    },
    /// Two-state Markov switching between a calm and a stressed Gaussian.
    Regime {
        #[serde(default = "default_stay")]
        stay_probability: f64,
        #[serde(default = "default_vol")]
        calm_volatility: f64,
        #[serde(default = "default_stress_vol")]
        stress_volatility: f64,
        #[serde(default = "default_calm_corr")]
        calm_correlation: f64,
        #[serde(default = "default_stress_corr")]
        stress_correlation: f64,
    },
}

fn default_vol() -> f64 {
    0.01
}
fn default_nu() -> f64 {
    6.0
}
fn default_omega() -> f64 {
    2e-6
}
fn default_alpha() -> f64 {
    0.08
}
fn default_beta() -> f64 {
    0.9
}
fn default_corr() -> f64 {
    0.4
}
fn default_stay() -> f64 {
    0.99
}
fn default_stress_vol() -> f64 {
    0.025
}
fn default_calm_corr() -> f64 {
    0.2
}
fn default_stress_corr() -> f64 {
    0.7
}

impl SyntheticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticSpec::Gaussian { .. } => "gaussian",
            SyntheticSpec::TCopulaGarch { .. } => "t-copula-garch",
            SyntheticSpec::Regime { .. } => "regime",
        }
    }
}

/// Consecutive weekdays starting at (or after) `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

fn equicorrelation_factor(d: usize, rho: f64) -> Result<DMatrix<f64>, PanelError> {
    if !(rho < 1.0 && rho > -1.0 / (d as f64 - 1.0)) {
        return Err(PanelError::InvalidGenerator(alloc::format!(
            "equicorrelation {rho} is not positive definite for d={d}"
        )));
    }
    let c = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
    c.cholesky()
        .map(|ch| ch.l())
        .ok_or_else(|| PanelError::InvalidGenerator("correlation not positive definite".to_string()))
}

fn correlated_normal(l: &DMatrix<f64>, rng: &mut crate::rng::Rng, out: &mut [f64]) {
    let d = out.len();
    let mut z = vec![0.0; d];
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..=i {
            s += l[(i, j)] * z[j];
        }
        out[i] = s;
    }
}

/// Draws a synthetic panel of log returns (`levels = false`) or of the
/// corresponding price levels starting at 100 (`levels = true`). The
/// output is a pure function of its arguments.
pub fn generate_synthetic_panel(
    spec: &SyntheticSpec,
    t: usize,
    d: usize,
    seed: u64,
    levels: bool,
    start: NaiveDate,
) -> Result<SeriesPanel, PanelError> {
    if d < 2 {
        return Err(PanelError::TooFewColumns(d));
    }
    if t < 1 {
        return Err(PanelError::TooFewRows { needed: 1, got: t });
    }
    let mut rng = SeedPath::root(seed).with_str("synthetic").with_str(spec.name()).rng();
    let mut values = DMatrix::<f64>::zeros(t, d);
    let mut row = vec![0.0; d];
    match *spec {
        SyntheticSpec::Gaussian { volatility, correlation } => {
            let l = equicorrelation_factor(d, correlation)?;
            for i in 0..t {
                correlated_normal(&l, &mut rng, &mut row);
                for k in 0..d {
                    values[(i, k)] = volatility * row[k];
                }
            }
        }
        SyntheticSpec::TCopulaGarch { nu, omega, alpha, beta, correlation } => {
            if !(nu > 2.0 && omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
                return Err(PanelError::InvalidGenerator(
                    "need nu > 2, omega > 0, alpha, beta >= 0 and alpha + beta < 1".to_string(),
                ));
            }
            let l = equicorrelation_factor(d, correlation)?;
            let chi = ChiSquared::new(nu)
                .map_err(|_| PanelError::InvalidGenerator("bad degrees of freedom".to_string()))?;
            let scale = ((nu - 2.0) / nu).sqrt();
            let uncond = omega / (1.0 - alpha - beta);
            let mut var = vec![uncond; d];
            let mut eps = vec![0.0; d];
            for i in 0..t {
                correlated_normal(&l, &mut rng, &mut row);
                let w: f64 = chi.sample(&mut rng);
                let mix = scale / (w / nu).sqrt();
                for k in 0..d {
                    var[k] = if i == 0 { uncond } else { omega + alpha * eps[k] * eps[k] + beta * var[k] };
                    eps[k] = var[k].sqrt() * row[k] * mix;
                    values[(i, k)] = eps[k];
                }
            }
        }
        SyntheticSpec::Regime {
            stay_probability,
            calm_volatility,
            stress_volatility,
            calm_correlation,
            stress_correlation,
        } => {
            if !(stay_probability > 0.0 && stay_probability < 1.0) {
                return Err(PanelError::InvalidGenerator("stay_probability must be in (0,1)".to_string()));
            }
            let calm = equicorrelation_factor(d, calm_correlation)?;
            let stress = equicorrelation_factor(d, stress_correlation)?;
            let mut stressed = false;
            for i in 0..t {
                if rng.random::<f64>() >= stay_probability {
                    stressed = !stressed;
                }
                let (l, vol) = if stressed { (&stress, stress_volatility) } else { (&calm, calm_volatility) };
                correlated_normal(l, &mut rng, &mut row);
                for k in 0..d {
                    values[(i, k)] = vol * row[k];
                }
            }
        }
    }
    let labels: Vec<String> = (0..d).map(|k| alloc::format!("{}{}", spec.name(), k + 1)).collect();
    if levels {
        let mut lv = DMatrix::<f64>::zeros(t, d);
        for k in 0..d {
            let mut acc = 100.0f64.ln();
            for i in 0..t {
                if i > 0 {
                    acc += values[(i, k)];
                }
                lv[(i, k)] = acc.exp();
            }
        }
        SeriesPanel::new(business_days(start, t), lv, labels, PanelKind::Levels)
    } else {
        SeriesPanel::new(business_days(start, t), values, labels, PanelKind::LogReturns)
    }
}
