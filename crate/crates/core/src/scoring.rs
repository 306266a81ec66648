//! Proper scoring rules, all negatively oriented: lower is better and the
//! true distribution minimizes the expected score.
//!
//! Ensemble-based rules (energy, variogram, CRPS kernel form) treat the
//! draws as an empirical distribution, so the draw-draw double sums use
//! the plug-in `1/N²` divisor. The `*Scorer` types cache the part of a
//! score that depends only on the ensemble, which is what makes scoring
//! thousands of observations against one ensemble cheap.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::math::{self, LN_2PI};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("energy score exponent {0} outside (0, 2)")]
    BetaOutOfRange(f64),
    #[error("ensemble has {0} draws, need at least 2")]
    DegenerateEnsemble(usize),
    #[error("variogram order {0} must be positive")]
    NonPositiveOrder(f64),
    #[error("dimension mismatch: ensemble has {ensemble}, observation has {observation}")]
    DimensionMismatch { ensemble: usize, observation: usize },
    #[error("non-finite ensemble entry at draw {draw}, component {component}")]
    NonFiniteEntry { draw: usize, component: usize },
    #[error("ensemble data length {len} is not a multiple of dimension {dim}")]
    RaggedEnsemble { len: usize, dim: usize },
    #[error("quantile function decreases at level {0}")]
    NonMonotoneQuantileFunction(f64),
    #[error("threshold range [{lo}, {hi}] excludes the observation {y}")]
    RangeExcludesObservation { lo: f64, hi: f64, y: f64 },
    #[error("quadrature needs at least {min} nodes, got {got}")]
    GridTooCoarse { min: usize, got: usize },
    #[error("weight function is negative at {0}")]
    NegativeWeight(f64),
    #[error("covariance matrix is not positive definite")]
    SingularCovariance,
    #[error("pseudo-spherical exponent {0} must exceed 1")]
    InvalidAlpha(f64),
}

/// `N × d` sample representing one predictive distribution, stored row
/// major so that one draw is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastEnsemble {
    data: Vec<f64>,
    dim: usize,
    pub model_id: String,
    pub date: Option<NaiveDate>,
}

impl ForecastEnsemble {
    pub fn from_rows(data: Vec<f64>, dim: usize) -> Result<Self, ScoreError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(ScoreError::RaggedEnsemble { len: data.len(), dim });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(ScoreError::NonFiniteEntry { draw: pos / dim, component: pos % dim });
        }
        Ok(ForecastEnsemble { data, dim, model_id: String::new(), date: None })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self, ScoreError> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        Self::from_rows(data, m.ncols())
    }

    pub fn univariate(draws: &[f64]) -> Result<Self, ScoreError> {
        Self::from_rows(draws.to_vec(), 1)
    }

    pub fn with_id(mut self, model_id: impl Into<String>, date: Option<NaiveDate>) -> Self {
        self.model_id = model_id.into();
        self.date = date;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.draws().map(|row| row[k]).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrpsRepresentation {
    Kernel,
    Quantile,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RuleTag {
    Energy { beta: f64 },
    Variogram { p: f64 },
    Crps { emphasis: Emphasis, representation: CrpsRepresentation },
    Log,
    Quadratic,
    PseudoSpherical { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreValue {
    pub rule: RuleTag,
    pub value: f64,
}

/// Which part of the distribution a weighted CRPS emphasizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Emphasis {
    Uniform,
    Centre,
    BothTails,
    RightTail,
    LeftTail,
}

impl Emphasis {
    pub const ALL: [Emphasis; 5] =
        [Emphasis::Uniform, Emphasis::Centre, Emphasis::BothTails, Emphasis::RightTail, Emphasis::LeftTail];

    /// Quantile weight `ν(α)` on `[0, 1]`.
    pub fn quantile_weight(self, a: f64) -> f64 {
        match self {
            Emphasis::Uniform => 1.0,
            Emphasis::Centre => a * (1.0 - a),
            Emphasis::BothTails => (2.0 * a - 1.0) * (2.0 * a - 1.0),
            Emphasis::RightTail => a * a,
            Emphasis::LeftTail => (1.0 - a) * (1.0 - a),
        }
    }

    /// Threshold weight `u(z)` on the real line.
    pub fn threshold_weight(self, z: f64) -> f64 {
        match self {
            Emphasis::Uniform => 1.0,
            Emphasis::Centre => math::norm_pdf(z),
            Emphasis::BothTails => 1.0 - math::norm_pdf(z) / math::norm_pdf(0.0),
            Emphasis::RightTail => math::norm_cdf(z),
            Emphasis::LeftTail => 1.0 - math::norm_cdf(z),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum QuantileWeight {
    Table(Emphasis),
    Custom(fn(f64) -> f64),
}

impl QuantileWeight {
    fn eval(&self, a: f64) -> f64 {
        match self {
            QuantileWeight::Table(e) => e.quantile_weight(a),
            QuantileWeight::Custom(f) => f(a),
        }
    }

    fn emphasis(&self) -> Emphasis {
        match self {
            QuantileWeight::Table(e) => *e,
            QuantileWeight::Custom(_) => Emphasis::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ThresholdWeight {
    Table(Emphasis),
    Custom(fn(f64) -> f64),
}

impl ThresholdWeight {
    fn eval(&self, z: f64) -> f64 {
        match self {
            ThresholdWeight::Table(e) => e.threshold_weight(z),
            ThresholdWeight::Custom(f) => f(z),
        }
    }

    fn emphasis(&self) -> Emphasis {
        match self {
            ThresholdWeight::Table(e) => *e,
            ThresholdWeight::Custom(_) => Emphasis::Uniform,
        }
    }
}

fn check_dim(ens: &ForecastEnsemble, y: &[f64]) -> Result<(), ScoreError> {
    if ens.dim() != y.len() {
        return Err(ScoreError::DimensionMismatch { ensemble: ens.dim(), observation: y.len() });
    }
    Ok(())
}

#[inline]
fn norm_pow(sq: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(0.5 * beta)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Energy score with the ensemble self-term cached.
#[derive(Debug, Clone)]
pub struct EnergyScorer<'a> {
    ensemble: &'a ForecastEnsemble,
    beta: f64,
    half_self_term: f64,
}

impl<'a> EnergyScorer<'a> {
    pub fn new(ensemble: &'a ForecastEnsemble, beta: f64) -> Result<Self, ScoreError> {
        if !(beta > 0.0 && beta < 2.0) {
            return Err(ScoreError::BetaOutOfRange(beta));
        }
        let n = ensemble.len();
        if n < 2 {
            return Err(ScoreError::DegenerateEnsemble(n));
        }
        // ½·(1/N²)·Σ_{i,j} = (1/N²)·Σ_{i<j}
        let mut acc = 0.0;
        for i in 0..n {
            let xi = ensemble.draw(i);
            let mut row = 0.0;
            for j in (i + 1)..n {
                row += norm_pow(sq_dist(xi, ensemble.draw(j)), beta);
            }
            acc += row;
        }
        let nf = n as f64;
        Ok(EnergyScorer { ensemble, beta, half_self_term: acc / (nf * nf) })
    }

    pub fn half_self_term(&self) -> f64 {
        self.half_self_term
    }

    pub fn score(&self, y: &[f64]) -> Result<f64, ScoreError> {
        check_dim(self.ensemble, y)?;
        let n = self.ensemble.len() as f64;
        let first: f64 = self.ensemble.draws().map(|x| norm_pow(sq_dist(x, y), self.beta)).sum::<f64>() / n;
        Ok(first - self.half_self_term)
    }
}

/// `ES_β(F, y) = E‖Y − y‖^β − ½ E‖Y − Y'‖^β`.
pub fn energy_score(forecast: &ForecastEnsemble, y: &[f64], beta: f64) -> Result<ScoreValue, ScoreError> {
    let value = EnergyScorer::new(forecast, beta)?.score(y)?;
    Ok(ScoreValue { rule: RuleTag::Energy { beta }, value })
}

#[inline]
fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 0.5 {
        a.sqrt()
    } else {
        a.powf(p)
    }
}

/// Variogram score with the expected pairwise variogram cached.
#[derive(Debug, Clone)]
pub struct VariogramScorer {
    dim: usize,
    p: f64,
    /// `E|Y_i − Y_j|^p` for `i < j`, row-major over the upper triangle.
    expected: Vec<f64>,
}

impl VariogramScorer {
    pub fn new(ensemble: &ForecastEnsemble, p: f64) -> Result<Self, ScoreError> {
        if !(p > 0.0) {
            return Err(ScoreError::NonPositiveOrder(p));
        }
        let n = ensemble.len();
        if n < 1 {
            return Err(ScoreError::DegenerateEnsemble(n));
        }
        let d = ensemble.dim();
        let pairs = d * (d.saturating_sub(1)) / 2;
        let mut expected = alloc::vec![0.0; pairs];
        let mut first = alloc::vec![0.0; pairs];
        let mut constant = alloc::vec![true; pairs];
        for (r, x) in ensemble.draws().enumerate() {
            let mut idx = 0;
            for i in 0..d {
                for j in (i + 1)..d {
                    let v = abs_pow(x[i] - x[j], p);
                    if r == 0 {
                        first[idx] = v;
                    } else if v != first[idx] {
                        constant[idx] = false;
                    }
                    expected[idx] += v;
                    idx += 1;
                }
            }
        }
        // a constant pair keeps its exact value instead of sum / n
        for ((e, &c), &f) in expected.iter_mut().zip(&constant).zip(&first) {
            *e = if c { f } else { *e / n as f64 };
        }
        Ok(VariogramScorer { dim: d, p, expected })
    }

    pub fn score(&self, y: &[f64]) -> Result<f64, ScoreError> {
        if y.len() != self.dim {
            return Err(ScoreError::DimensionMismatch { ensemble: self.dim, observation: y.len() });
        }
        let mut acc = 0.0;
        let mut idx = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let r = abs_pow(y[i] - y[j], self.p) - self.expected[idx];
                acc += r * r;
                idx += 1;
            }
        }
        // the double sum over all (i, j) counts each unordered pair twice
        Ok(2.0 * acc)
    }
}

/// `VS_p(F, y) = Σ_i Σ_j (|y_i − y_j|^p − E|Y_i − Y_j|^p)²` with unit weights.
pub fn variogram_score(forecast: &ForecastEnsemble, y: &[f64], p: f64) -> Result<ScoreValue, ScoreError> {
    check_dim(forecast, y)?;
    let value = VariogramScorer::new(forecast, p)?.score(y)?;
    Ok(ScoreValue { rule: RuleTag::Variogram { p }, value })
}

/// Kernel-form CRPS of a univariate ensemble, `E|X − y| − ½E|X − X'|`.
///
/// The draw-draw term is evaluated through the sorted-sample identity
/// `Σ_{i<j} (x_(j) − x_(i)) = Σ_k (2k − N + 1) x_(k)` (0-based `k`).
pub fn crps_ensemble(draws: &[f64], y: f64) -> Result<ScoreValue, ScoreError> {
    let n = draws.len();
    if n < 2 {
        return Err(ScoreError::DegenerateEnsemble(n));
    }
    if let Some(pos) = draws.iter().position(|x| !x.is_finite()) {
        return Err(ScoreError::NonFiniteEntry { draw: pos, component: 0 });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let abs_err: f64 = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / nf;
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, x)| (2.0 * k as f64 - nf + 1.0) * x)
        .sum::<f64>();
    Ok(ScoreValue {
        rule: RuleTag::Crps { emphasis: Emphasis::Uniform, representation: CrpsRepresentation::Kernel },
        value: abs_err - spread / (nf * nf),
    })
}

pub const MIN_QUADRATURE_NODES: usize = 16;
pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

/// Quantile-weighted CRPS `∫₀¹ QS_α(F⁻¹(α), y) ν(α) dα` by the midpoint
/// rule, with `QS_α(q, y) = 2(1{y ≤ q} − α)(q − y)`.
pub fn crps_quantile_weighted(
    inv_cdf: &dyn Fn(f64) -> f64,
    y: f64,
    weight: QuantileWeight,
    grid: usize,
) -> Result<ScoreValue, ScoreError> {
    if grid < MIN_QUADRATURE_NODES {
        return Err(ScoreError::GridTooCoarse { min: MIN_QUADRATURE_NODES, got: grid });
    }
    let h = 1.0 / grid as f64;
    let mut acc = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for k in 0..grid {
        let a = (k as f64 + 0.5) * h;
        let q = inv_cdf(a);
        if q < prev {
            return Err(ScoreError::NonMonotoneQuantileFunction(a));
        }
        prev = q;
        let w = weight.eval(a);
        if w < 0.0 {
            return Err(ScoreError::NegativeWeight(a));
        }
        let ind = if y <= q { 1.0 } else { 0.0 };
        acc += 2.0 * (ind - a) * (q - y) * w;
    }
    Ok(ScoreValue {
        rule: RuleTag::Crps { emphasis: weight.emphasis(), representation: CrpsRepresentation::Quantile },
        value: acc * h,
    })
}

/// Threshold-weighted CRPS `∫ (F(z) − 1{y ≤ z})² u(z) dz` over `z_range`
/// by the midpoint rule.
pub fn crps_threshold_weighted(
    cdf: &dyn Fn(f64) -> f64,
    y: f64,
    weight: ThresholdWeight,
    z_range: (f64, f64),
    grid: usize,
) -> Result<ScoreValue, ScoreError> {
    let (lo, hi) = z_range;
    if !(lo <= y && y <= hi) {
        return Err(ScoreError::RangeExcludesObservation { lo, hi, y });
    }
    if grid < MIN_QUADRATURE_NODES {
        return Err(ScoreError::GridTooCoarse { min: MIN_QUADRATURE_NODES, got: grid });
    }
    let h = (hi - lo) / grid as f64;
    let mut acc = 0.0;
    for k in 0..grid {
        let z = lo + (k as f64 + 0.5) * h;
        let w = weight.eval(z);
        if w < 0.0 {
            return Err(ScoreError::NegativeWeight(z));
        }
        let ind = if y <= z { 1.0 } else { 0.0 };
        let r = cdf(z) - ind;
        acc += r * r * w;
    }
    Ok(ScoreValue {
        rule: RuleTag::Crps { emphasis: weight.emphasis(), representation: CrpsRepresentation::Threshold },
        value: acc * h,
    })
}

/// Default truncation interval `[y − 10σ, y + 10σ]` for threshold quadrature.
pub fn default_threshold_range(y: f64, scale: f64) -> (f64, f64) {
    (y - 10.0 * scale, y + 10.0 * scale)
}

/// Empirical quantile function `x_(⌈αN⌉)` of a sorted sample.
pub fn empirical_quantile_fn(sorted: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |a: f64| {
        let n = sorted.len();
        let k = ((a * n as f64).ceil() as usize).clamp(1, n);
        sorted[k - 1]
    }
}

/// Empirical distribution function of a sorted sample.
pub fn empirical_cdf_fn(sorted: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |z: f64| sorted.partition_point(|&x| x <= z) as f64 / sorted.len() as f64
}

/// Multivariate Gaussian predictive density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensitySpec {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityScores {
    pub log: ScoreValue,
    pub quadratic: ScoreValue,
    /// Negated pseudo-spherical score.
    pub pseudo_spherical: ScoreValue,
}

/// Log, quadratic and (negated) pseudo-spherical scores of a Gaussian.
pub fn density_scores(spec: &GaussianDensitySpec, y: &[f64], alpha: f64) -> Result<DensityScores, ScoreError> {
    let d = spec.mean.len();
    if y.len() != d || spec.covariance.nrows() != d || spec.covariance.ncols() != d {
        return Err(ScoreError::DimensionMismatch { ensemble: d, observation: y.len() });
    }
    if !(alpha > 1.0) {
        return Err(ScoreError::InvalidAlpha(alpha));
    }
    let chol = spec.covariance.clone().cholesky().ok_or(ScoreError::SingularCovariance)?;
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let resid = DVector::from_column_slice(y) - &spec.mean;
    let white = l.solve_lower_triangular(&resid).ok_or(ScoreError::SingularCovariance)?;
    let maha = white.norm_squared();
    let df = d as f64;
    let log_f = -0.5 * (df * LN_2PI + log_det + maha);
    // ln ∫ f^a = (d(1−a)/2) ln 2π + ((1−a)/2) ln|Σ| − (d/2) ln a
    let log_norm_pow = |a: f64| 0.5 * df * (1.0 - a) * LN_2PI + 0.5 * (1.0 - a) * log_det - 0.5 * df * a.ln();
    let f = log_f.exp();
    let quadratic = log_norm_pow(2.0).exp() - 2.0 * f;
    let log_norm_alpha = log_norm_pow(alpha) / alpha;
    let pseudo = ((alpha - 1.0) * (log_f - log_norm_alpha)).exp();
    Ok(DensityScores {
        log: ScoreValue { rule: RuleTag::Log, value: -log_f },
        quadratic: ScoreValue { rule: RuleTag::Quadratic, value: quadratic },
        pseudo_spherical: ScoreValue { rule: RuleTag::PseudoSpherical { alpha }, value: -pseudo },
    })
}

/// Multivariate rules evaluated by the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultivariateRule {
    Energy { beta: f64 },
    Variogram { p: f64 },
}

impl MultivariateRule {
    pub const STANDARD: [MultivariateRule; 4] = [
        MultivariateRule::Energy { beta: 1.0 },
        MultivariateRule::Variogram { p: 0.5 },
        MultivariateRule::Variogram { p: 1.0 },
        MultivariateRule::Variogram { p: 2.0 },
    ];

    pub fn label(&self) -> String {
        match self {
            MultivariateRule::Energy { beta } => format!("ES({beta})"),
            MultivariateRule::Variogram { p } => format!("VS({p})"),
        }
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        match *self {
            MultivariateRule::Energy { beta } if !(beta > 0.0 && beta < 2.0) => Err(ScoreError::BetaOutOfRange(beta)),
            MultivariateRule::Variogram { p } if !(p > 0.0) => Err(ScoreError::NonPositiveOrder(p)),
            _ => Ok(()),
        }
    }

    pub fn scorer<'a>(&self, ensemble: &'a ForecastEnsemble) -> Result<RuleScorer<'a>, ScoreError> {
        match *self {
            MultivariateRule::Energy { beta } => EnergyScorer::new(ensemble, beta).map(RuleScorer::Energy),
            MultivariateRule::Variogram { p } => VariogramScorer::new(ensemble, p).map(RuleScorer::Variogram),
        }
    }
}

/// A rule bound to one ensemble.
#[derive(Debug, Clone)]
pub enum RuleScorer<'a> {
    Energy(EnergyScorer<'a>),
    Variogram(VariogramScorer),
}

impl RuleScorer<'_> {
    pub fn score(&self, y: &[f64]) -> Result<f64, ScoreError> {
        match self {
            RuleScorer::Energy(s) => s.score(y),
            RuleScorer::Variogram(s) => s.score(y),
        }
    }
}
