//! Discrimination statistics over a score tensor: relative scores, score
//! differences and error rates, the discrimination heuristic, bootstrap
//! bands, kernel density curves and the figure-level aggregations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::harness::{CellKey, ScoreTensor};
use crate::math::{self, sorted_quantile};
use crate::rng::SeedPath;

pub const RATIO_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("every DGP score is below the ratio guard ({0} pairs)")]
    AllPairsExcluded(usize),
    #[error("score vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("DGP mean score {0} is too close to zero")]
    DegenerateDgpScore(f64),
    #[error("subsample {subsample} exceeds the {n} available scores")]
    SubsampleExceedsN { subsample: usize, n: usize },
    #[error("density estimate needs at least 10 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeScore {
    pub value: f64,
    pub used: usize,
    pub excluded: usize,
}

/// `(1/N) Σ_i S_i(m) / S_i(m*)` over pairs with `|S_i(m*)| ≥ guard`.
pub fn mean_relative_score(scores_m: &[f64], scores_dgp: &[f64], guard: f64) -> Result<RelativeScore, MetricError> {
    if scores_m.len() != scores_dgp.len() {
        return Err(MetricError::LengthMismatch(scores_m.len(), scores_dgp.len()));
    }
    let mut sum = 0.0;
    let mut used = 0;
    for (a, b) in scores_m.iter().zip(scores_dgp) {
        if b.abs() >= guard {
            sum += a / b;
            used += 1;
        }
    }
    let excluded = scores_m.len() - used;
    if used == 0 {
        return Err(MetricError::AllPairsExcluded(excluded));
    }
    Ok(RelativeScore { value: sum / used as f64, used, excluded })
}

/// Per-draw ratios with guarded pairs dropped.
pub fn relative_scores(scores_m: &[f64], scores_dgp: &[f64], guard: f64) -> Result<Vec<f64>, MetricError> {
    if scores_m.len() != scores_dgp.len() {
        return Err(MetricError::LengthMismatch(scores_m.len(), scores_dgp.len()));
    }
    Ok(scores_m.iter().zip(scores_dgp).filter(|(_, b)| b.abs() >= guard).map(|(a, b)| a / b).collect())
}

/// `S_i(m) − S_i(m*)`.
pub fn score_differences(scores_m: &[f64], scores_dgp: &[f64]) -> Result<Vec<f64>, MetricError> {
    if scores_m.len() != scores_dgp.len() {
        return Err(MetricError::LengthMismatch(scores_m.len(), scores_dgp.len()));
    }
    Ok(scores_m.iter().zip(scores_dgp).map(|(a, b)| a - b).collect())
}

/// Fraction of strictly negative differences; zeros are not errors.
pub fn error_rate(diffs: &[f64]) -> Result<f64, MetricError> {
    if diffs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(diffs.iter().filter(|&&d| d < 0.0).count() as f64 / diffs.len() as f64)
}

/// `(1/M) Σ_m S̄(m) / S̄(m*)`, self-term included.
pub fn discrimination_heuristic(mean_scores: &[f64], dgp_index: usize) -> Result<f64, MetricError> {
    let Some(&dgp) = mean_scores.get(dgp_index) else {
        return Err(MetricError::InvalidArgument(format!("DGP index {dgp_index} out of range")));
    };
    if !(dgp.abs() >= RATIO_GUARD) {
        return Err(MetricError::DegenerateDgpScore(dgp));
    }
    Ok(mean_scores.iter().map(|s| s / dgp).sum::<f64>() / mean_scores.len() as f64)
}

/// Quantiles of the mean of `subsample` draws with replacement, over
/// `reps` repetitions.
pub fn bootstrap_band(
    scores: &[f64],
    subsample: usize,
    reps: usize,
    quantiles: (f64, f64),
    seed: u64,
) -> Result<(f64, f64), MetricError> {
    let n = scores.len();
    if subsample > n {
        return Err(MetricError::SubsampleExceedsN { subsample, n });
    }
    if subsample == 0 || reps == 0 {
        return Err(MetricError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&quantiles.0) || !(quantiles.0..=1.0).contains(&quantiles.1) {
        return Err(MetricError::InvalidArgument("band quantiles must satisfy 0 ≤ lo ≤ hi ≤ 1".into()));
    }
    let mut rng = SeedPath::root(seed).with_str("bootstrap").rng();
    let mut means = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut s = 0.0;
        for _ in 0..subsample {
            s += scores[rng.random_range(0..n)];
        }
        means.push(s / subsample as f64);
    }
    means.sort_by(f64::total_cmp);
    Ok((sorted_quantile(&means, quantiles.0), sorted_quantile(&means, quantiles.1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// Share of the curve's mass below zero.
    pub negative_mass: f64,
    /// Mean of the input, which is also the mean of the kernel estimate.
    pub mean: f64,
    pub n: usize,
}

/// Gaussian kernel estimate with Silverman's bandwidth, evaluated on
/// `points` uniform nodes between the `clip` quantiles of the input.
pub fn kde_differences(diffs: &[f64], clip: (f64, f64), points: usize) -> Result<KdeCurve, MetricError> {
    let n = diffs.len();
    if n < 10 {
        return Err(MetricError::TooFewPoints(n));
    }
    if points < 2 {
        return Err(MetricError::InvalidArgument("need at least 2 evaluation points".into()));
    }
    let mut sorted = diffs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted_quantile(&sorted, clip.0);
    let hi = sorted_quantile(&sorted, clip.1);
    let mean = math::mean(diffs);
    let sd = math::variance(diffs).sqrt();
    let mut h = 1.06 * sd * (n as f64).powf(-0.2);
    if !(h > 0.0) {
        // all points (nearly) equal
        h = f64::max(1e-12, 1e-9 * mean.abs());
    }
    let x: Vec<f64> = if hi > lo {
        (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
    } else {
        (0..points).map(|k| lo - 4.0 * h + 8.0 * h * k as f64 / (points - 1) as f64).collect()
    };
    let norm = 1.0 / (n as f64 * h * math::SQRT_2PI);
    let reach = 8.0 * h;
    let density: Vec<f64> = x
        .iter()
        .map(|&xk| {
            let a = sorted.partition_point(|&v| v < xk - reach);
            let b = sorted.partition_point(|&v| v <= xk + reach);
            let s: f64 = sorted[a..b]
                .iter()
                .map(|&v| {
                    let u = (xk - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    let (mut total, mut negative) = (0.0, 0.0);
    for k in 0..points - 1 {
        let w = x[k + 1] - x[k];
        let area = 0.5 * w * (density[k] + density[k + 1]);
        total += area;
        if x[k + 1] <= 0.0 {
            negative += area;
        } else if x[k] < 0.0 {
            // split the trapezoid at zero
            let t = -x[k] / w;
            let f0 = density[k] + t * (density[k + 1] - density[k]);
            negative += 0.5 * (-x[k]) * (density[k] + f0);
        }
    }
    let negative_mass = if total > 0.0 { negative / total } else { 0.0 };
    Ok(KdeCurve { x, density, bandwidth: h, negative_mass, mean, n })
}

/// Trailing mean over `min(window, i + 1)` values.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..series.len())
        .map(|i| {
            let k = (i + 1).min(w);
            series[i + 1 - k..=i].iter().sum::<f64>() / k as f64
        })
        .collect()
}

/// Knobs of the report computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSettings {
    #[serde(default = "default_guard")]
    pub ratio_guard: f64,
    #[serde(default = "default_reps")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_band")]
    pub band_quantiles: (f64, f64),
    #[serde(default = "default_kde_points")]
    pub kde_points: usize,
    #[serde(default = "default_clip")]
    pub kde_clip: (f64, f64),
    /// Emit pooled density curves per `(panel, rule, DGP, model)`.
    #[serde(default = "default_true")]
    pub kde: bool,
    #[serde(default = "default_ma")]
    pub moving_average_window: usize,
    /// Threshold on mean relative scores for the cell-level propriety check.
    #[serde(default = "default_tolerance")]
    pub relative_tolerance: f64,
}

fn default_guard() -> f64 {
    RATIO_GUARD
}
fn default_reps() -> usize {
    5000
}
fn default_band() -> (f64, f64) {
    (0.25, 0.75)
}
fn default_kde_points() -> usize {
    512
}
fn default_clip() -> (f64, f64) {
    (0.001, 0.999)
}
fn default_true() -> bool {
    true
}
fn default_ma() -> usize {
    8
}
fn default_tolerance() -> f64 {
    0.02
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            ratio_guard: default_guard(),
            bootstrap_reps: default_reps(),
            band_quantiles: default_band(),
            kde_points: default_kde_points(),
            kde_clip: default_clip(),
            kde: true,
            moving_average_window: default_ma(),
            relative_tolerance: default_tolerance(),
        }
    }
}

/// One line of the long-format report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub panel: String,
    pub rule: String,
    pub dgp: String,
    pub model: String,
    pub date: Option<NaiveDate>,
    pub metric: &'static str,
    pub value: f64,
}

/// Plot data: header plus string rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl FigureTable {
    fn new(columns: &[&str]) -> Self {
        FigureTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub rule: String,
    /// Mean over `(panel, DGP, model ≠ DGP, date)` cells.
    pub average_error_rate: Option<f64>,
    /// Mean over dates of the per-date mean over `(DGP, model)` pairs.
    pub average_error_rate_models_then_dates: Option<f64>,
    /// Mean over `(panel, DGP, date)` cells.
    pub average_heuristic: Option<f64>,
    pub average_relative_score: Option<f64>,
    /// Share of `(panel, DGP, date)` cells where every misspecified model
    /// has mean relative score ≥ 1 − tolerance.
    pub share_cells_relative_ok: Option<f64>,
    pub relative_cells: usize,
    pub error_rate_cells: usize,
    pub excluded_pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub panel: String,
    pub rules: Vec<RuleSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rules: Vec<RuleSummary>,
    pub panels: Vec<PanelSummary>,
    /// Rules ordered by ascending average error rate.
    pub order_by_error_rate: Vec<String>,
    /// Rules ordered by ascending average discrimination heuristic.
    pub order_by_heuristic: Vec<String>,
    pub cells: usize,
    pub absent_cells: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<ReportRow>,
    /// File stem → table.
    pub figures: BTreeMap<String, FigureTable>,
    pub summary: Summary,
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: usize,
}

impl Acc {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }
    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Default)]
struct RuleAcc {
    error: Acc,
    /// date → per-date accumulator for the models-then-dates variant
    error_by_date: BTreeMap<NaiveDate, Acc>,
    heuristic: Acc,
    relative: Acc,
    cells_ok: Acc,
    excluded: usize,
}

impl RuleAcc {
    fn finish(&self, rule: &str) -> RuleSummary {
        let per_date: Vec<f64> = self.error_by_date.values().filter_map(|a| a.mean()).collect();
        RuleSummary {
            rule: rule.into(),
            average_error_rate: self.error.mean(),
            average_error_rate_models_then_dates: (!per_date.is_empty()).then(|| math::mean(&per_date)),
            average_heuristic: self.heuristic.mean(),
            average_relative_score: self.relative.mean(),
            share_cells_relative_ok: self.cells_ok.mean(),
            relative_cells: self.relative.n,
            error_rate_cells: self.error.n,
            excluded_pairs: self.excluded,
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn order_by(rules: &[RuleSummary], f: impl Fn(&RuleSummary) -> Option<f64>) -> Vec<String> {
    let mut v: Vec<(f64, usize)> = rules.iter().enumerate().filter_map(|(i, r)| f(r).map(|x| (x, i))).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v.into_iter().map(|(_, i)| rules[i].rule.clone()).collect()
}

/// Seed of the bootstrap band for one `(cell, rule, model)`.
pub fn band_seed(root: u64, key: &CellKey, rule: &str, model: &str) -> u64 {
    SeedPath::root(root)
        .with_str(&key.panel)
        .with_str(rule)
        .with_str(&key.dgp)
        .with_u64(chrono::Datelike::num_days_from_ce(&key.date) as u64)
        .with_str(model)
        .with_str("band")
        .seed()
}

/// Computes every metric of a tensor. Absent models and cells are skipped.
pub fn compute_report(tensor: &ScoreTensor, subsample: usize, root_seed: u64, settings: &MetricSettings) -> MetricReport {
    let mut rows = Vec::new();
    let mut bands = FigureTable::new(&["panel", "rule", "dgp", "model", "date", "mean_relative_score", "band_lower", "band_upper"]);
    let mut heuristic_raw: BTreeMap<(String, String), BTreeMap<NaiveDate, Acc>> = BTreeMap::new();
    let mut overall: BTreeMap<String, RuleAcc> = BTreeMap::new();
    let mut per_panel: BTreeMap<(String, String), RuleAcc> = BTreeMap::new();
    let mut per_dgp_error: BTreeMap<(String, String, String), Acc> = BTreeMap::new();
    let mut pooled: BTreeMap<(String, String, String, String), Vec<f64>> = BTreeMap::new();

    for (key, cell) in &tensor.cells {
        for rule in &tensor.rules {
            let Some(dgp_scores) = cell.get(rule, &key.dgp) else {
                continue;
            };
            let models: Vec<&String> = tensor.models.iter().filter(|m| cell.get(rule, m).is_some()).collect();
            let mut mean_scores = Vec::with_capacity(models.len());
            let mut dgp_index = 0;
            let mut all_ok = true;
            let mut any_candidate = false;
            for (mi, model) in models.iter().enumerate() {
                let s = cell.get(rule, model).expect("present");
                let s_bar = math::mean(s);
                mean_scores.push(s_bar);
                rows.push(row(key, rule, model, "mean_score", s_bar));
                if **model == key.dgp {
                    dgp_index = mi;
                    continue;
                }
                any_candidate = true;
                let diffs = score_differences(s, dgp_scores).expect("same realisations");
                if let Ok(er) = error_rate(&diffs) {
                    rows.push(row(key, rule, model, "error_rate", er));
                    for acc in [overall.entry(rule.clone()).or_default(), per_panel.entry((key.panel.clone(), rule.clone())).or_default()] {
                        acc.error.add(er);
                        acc.error_by_date.entry(key.date).or_default().add(er);
                    }
                    per_dgp_error.entry((key.panel.clone(), rule.clone(), key.dgp.clone())).or_default().add(er);
                }
                rows.push(row(key, rule, model, "mean_difference", math::mean(&diffs)));
                if settings.kde {
                    pooled
                        .entry((key.panel.clone(), rule.clone(), key.dgp.clone(), (*model).clone()))
                        .or_default()
                        .extend_from_slice(&diffs);
                }
                match mean_relative_score(s, dgp_scores, settings.ratio_guard) {
                    Ok(r) => {
                        rows.push(row(key, rule, model, "mean_relative_score", r.value));
                        rows.push(row(key, rule, model, "excluded_pairs", r.excluded as f64));
                        all_ok &= r.value >= 1.0 - settings.relative_tolerance;
                        for acc in [overall.entry(rule.clone()).or_default(), per_panel.entry((key.panel.clone(), rule.clone())).or_default()] {
                            acc.relative.add(r.value);
                            acc.excluded += r.excluded;
                        }
                        let ratios = relative_scores(s, dgp_scores, settings.ratio_guard).expect("lengths match");
                        if let Ok((lo, hi)) = bootstrap_band(
                            &ratios,
                            subsample.min(ratios.len()),
                            settings.bootstrap_reps,
                            settings.band_quantiles,
                            band_seed(root_seed, key, rule, model),
                        ) {
                            rows.push(row(key, rule, model, "band_lower", lo));
                            rows.push(row(key, rule, model, "band_upper", hi));
                            bands.rows.push(vec![
                                key.panel.clone(),
                                rule.clone(),
                                key.dgp.clone(),
                                (*model).clone(),
                                key.date.to_string(),
                                fmt_f(r.value),
                                fmt_f(lo),
                                fmt_f(hi),
                            ]);
                        }
                    }
                    Err(_) => all_ok = false,
                }
            }
            if any_candidate {
                for acc in [overall.entry(rule.clone()).or_default(), per_panel.entry((key.panel.clone(), rule.clone())).or_default()] {
                    acc.cells_ok.add(if all_ok { 1.0 } else { 0.0 });
                }
            }
            if let Ok(h) = discrimination_heuristic(&mean_scores, dgp_index) {
                rows.push(row(key, rule, "", "discrimination_heuristic", h));
                for acc in [overall.entry(rule.clone()).or_default(), per_panel.entry((key.panel.clone(), rule.clone())).or_default()] {
                    acc.heuristic.add(h);
                }
                heuristic_raw.entry((key.panel.clone(), rule.clone())).or_default().entry(key.date).or_default().add(h);
            }
        }
    }

    let mut figures = BTreeMap::new();
    figures.insert("relative_score_bands".to_string(), bands);

    if settings.kde {
        let mut curves = FigureTable::new(&["panel", "rule", "dgp", "model", "x", "density"]);
        let mut stats = FigureTable::new(&["panel", "rule", "dgp", "model", "n", "bandwidth", "negative_mass", "mean"]);
        for ((panel, rule, dgp, model), diffs) in &pooled {
            let Ok(c) = kde_differences(diffs, settings.kde_clip, settings.kde_points) else {
                continue;
            };
            for (x, f) in c.x.iter().zip(&c.density) {
                curves.rows.push(vec![panel.clone(), rule.clone(), dgp.clone(), model.clone(), fmt_f(*x), fmt_f(*f)]);
            }
            stats.rows.push(vec![
                panel.clone(),
                rule.clone(),
                dgp.clone(),
                model.clone(),
                c.n.to_string(),
                fmt_f(c.bandwidth),
                fmt_f(c.negative_mass),
                fmt_f(c.mean),
            ]);
        }
        figures.insert("difference_density".to_string(), curves);
        figures.insert("difference_density_summary".to_string(), stats);
    }

    let mut error_table = FigureTable::new(&["panel", "rule", "dgp", "aggregation", "error_rate"]);
    for ((panel, rule), acc) in &per_panel {
        let s = acc.finish(rule);
        if let Some(v) = s.average_error_rate {
            error_table.rows.push(vec![panel.clone(), rule.clone(), "all".into(), "joint".into(), fmt_f(v)]);
        }
        if let Some(v) = s.average_error_rate_models_then_dates {
            error_table.rows.push(vec![panel.clone(), rule.clone(), "all".into(), "models-then-dates".into(), fmt_f(v)]);
        }
    }
    for ((panel, rule, dgp), acc) in &per_dgp_error {
        if let Some(v) = acc.mean() {
            error_table.rows.push(vec![panel.clone(), rule.clone(), dgp.clone(), "joint".into(), fmt_f(v)]);
        }
    }
    figures.insert("error_rates".to_string(), error_table);

    let mut heuristic_table = FigureTable::new(&["panel", "rule", "date", "heuristic", "moving_average"]);
    for ((panel, rule), by_date) in &heuristic_raw {
        let dates: Vec<NaiveDate> = by_date.keys().copied().collect();
        let series: Vec<f64> = by_date.values().map(|a| a.mean().unwrap_or(f64::NAN)).collect();
        let ma = moving_average(&series, settings.moving_average_window);
        for ((d, h), m) in dates.iter().zip(&series).zip(&ma) {
            heuristic_table.rows.push(vec![panel.clone(), rule.clone(), d.to_string(), fmt_f(*h), fmt_f(*m)]);
        }
    }
    figures.insert("heuristic_by_date".to_string(), heuristic_table);

    let rules: Vec<RuleSummary> = tensor
        .rules
        .iter()
        .map(|r| overall.get(r).map(|a| a.finish(r)).unwrap_or_else(|| RuleSummary { rule: r.clone(), ..Default::default() }))
        .collect();
    let mut panels: Vec<String> = tensor.cells.keys().map(|k| k.panel.clone()).collect();
    panels.dedup();
    let panels = panels
        .into_iter()
        .map(|p| PanelSummary {
            rules: tensor
                .rules
                .iter()
                .map(|r| {
                    per_panel
                        .get(&(p.clone(), r.clone()))
                        .map(|a| a.finish(r))
                        .unwrap_or_else(|| RuleSummary { rule: r.clone(), ..Default::default() })
                })
                .collect(),
            panel: p,
        })
        .collect();
    let summary = Summary {
        order_by_error_rate: order_by(&rules, |r| r.average_error_rate),
        order_by_heuristic: order_by(&rules, |r| r.average_heuristic),
        rules,
        panels,
        cells: tensor.cells.len(),
        absent_cells: tensor.absent.len(),
    };
    MetricReport { rows, figures, summary }
}

fn row(key: &CellKey, rule: &str, model: &str, metric: &'static str, value: f64) -> ReportRow {
    ReportRow {
        panel: key.panel.clone(),
        rule: rule.into(),
        dgp: key.dgp.clone(),
        model: model.into(),
        date: Some(key.date),
        metric,
        value,
    }
}
