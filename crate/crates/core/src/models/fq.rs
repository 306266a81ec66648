//! Factor-quantile marginals: quantile regressions of each variable on
//! latent principal-component factors, evaluated at fixed factor values
//! and interpolated into a monotone inverse CDF, joined by a Gaussian
//! copula.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::copula::{check_columns, copula_uniforms};
use super::pca::{pca_factors, FactorSelection};
use super::quantreg::quantile_regression_from;
use super::spline::MonotoneQuantileCurve;
use super::ModelError;
use crate::math;
use crate::rng::rng_from_seed;
use crate::scoring::ForecastEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FqVariant {
    /// Last `m` principal components as factors.
    AL,
    /// First `m` principal components, coefficients bagged.
    AB,
}

/// How the AB variant resamples rows for each bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    Bootstrap,
    /// Every bag uses the window as is.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FqConfig {
    pub variant: FqVariant,
    pub factors: usize,
    pub quantiles: Vec<f64>,
    pub bags: usize,
    pub resampling: Resampling,
    /// Factor values at which quantiles are predicted.
    pub factor_value: f64,
}

pub fn default_quantile_partition() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

impl FqConfig {
    pub fn al() -> Self {
        FqConfig {
            variant: FqVariant::AL,
            factors: 1,
            quantiles: default_quantile_partition(),
            bags: 1,
            resampling: Resampling::Identity,
            factor_value: 0.0,
        }
    }

    pub fn ab() -> Self {
        FqConfig {
            variant: FqVariant::AB,
            factors: 2,
            quantiles: default_quantile_partition(),
            bags: 50,
            resampling: Resampling::Bootstrap,
            factor_value: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FqModel {
    pub variant: FqVariant,
    pub factors: usize,
    pub quantiles: Vec<f64>,
    /// `[variable][τ] -> (intercept, factor loadings…)`, averaged over bags.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    /// `[bag][variable][τ] -> coefficients`; empty for AL.
    pub bag_coefficients: Vec<Vec<Vec<Vec<f64>>>>,
    pub bags: usize,
    pub curves: Vec<MonotoneQuantileCurve>,
    #[serde(with = "crate::math::serde_matrix")]
    pub correlation: DMatrix<f64>,
}

fn fit_coefficients(
    design: &DMatrix<f64>,
    window: &DMatrix<f64>,
    rows: Option<&[usize]>,
    quantiles: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, ModelError> {
    let (x, y_all) = match rows {
        Some(idx) => (design.select_rows(idx.iter()), window.select_rows(idx.iter())),
        None => (design.clone(), window.clone()),
    };
    let mut out = Vec::with_capacity(window.ncols());
    for k in 0..window.ncols() {
        let y: Vec<f64> = y_all.column(k).iter().copied().collect();
        let mut per_tau = Vec::with_capacity(quantiles.len());
        let mut warm: Option<Vec<f64>> = None;
        for &tau in quantiles {
            let b = quantile_regression_from(&x, &y, tau, warm.as_deref())?;
            warm = Some(b.clone());
            per_tau.push(b);
        }
        out.push(per_tau);
    }
    Ok(out)
}

pub fn fit_fq(window: &DMatrix<f64>, config: &FqConfig, seed: u64) -> Result<FqModel, ModelError> {
    check_columns(window)?;
    let (t, d) = window.shape();
    if config.quantiles.is_empty() || config.quantiles.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ModelError::InvalidSpec("quantile partition must increase strictly".into()));
    }
    let which = match config.variant {
        FqVariant::AL => FactorSelection::LastM,
        FqVariant::AB => FactorSelection::FirstM,
    };
    let pca = pca_factors(window, which, config.factors)?;
    let m = config.factors;
    let design = DMatrix::from_fn(t, m + 1, |i, j| if j == 0 { 1.0 } else { pca.factors[(i, j - 1)] });

    let (coefficients, bag_coefficients, bags) = match config.variant {
        FqVariant::AL => (fit_coefficients(&design, window, None, &config.quantiles)?, Vec::new(), 1),
        FqVariant::AB => {
            if config.bags == 0 {
                return Err(ModelError::InvalidSpec("bag count must be at least 1".into()));
            }
            let mut rng = rng_from_seed(seed);
            let mut bag_coefficients = Vec::with_capacity(config.bags);
            for _ in 0..config.bags {
                let coef = match config.resampling {
                    Resampling::Identity => fit_coefficients(&design, window, None, &config.quantiles)?,
                    Resampling::Bootstrap => {
                        let rows: Vec<usize> = (0..t).map(|_| rng.random_range(0..t)).collect();
                        fit_coefficients(&design, window, Some(&rows), &config.quantiles)?
                    }
                };
                bag_coefficients.push(coef);
            }
            let mut mean = bag_coefficients[0].clone();
            for bag in &bag_coefficients[1..] {
                for (mv, bv) in mean.iter_mut().zip(bag) {
                    for (mt, bt) in mv.iter_mut().zip(bv) {
                        for (a, b) in mt.iter_mut().zip(bt) {
                            *a += b;
                        }
                    }
                }
            }
            let nb = config.bags as f64;
            for mv in mean.iter_mut() {
                for mt in mv.iter_mut() {
                    for a in mt.iter_mut() {
                        *a /= nb;
                    }
                }
            }
            (mean, bag_coefficients, config.bags)
        }
    };

    let mut curves = Vec::with_capacity(d);
    for per_tau in &coefficients {
        let q: Vec<f64> = per_tau
            .iter()
            .map(|b| b[0] + b[1..].iter().map(|c| c * config.factor_value).sum::<f64>())
            .collect();
        curves.push(MonotoneQuantileCurve::new(&config.quantiles, &q)?);
    }
    Ok(FqModel {
        variant: config.variant,
        factors: m,
        quantiles: config.quantiles.clone(),
        coefficients,
        bag_coefficients,
        bags,
        curves,
        correlation: math::normal_score_correlation(window),
    })
}

pub fn sample_fq(model: &FqModel, n_draws: usize, seed: u64) -> Result<ForecastEnsemble, ModelError> {
    let d = model.curves.len();
    if model.correlation.nrows() != d {
        return Err(ModelError::InvalidSpec("copula dimension does not match marginals".into()));
    }
    let mut u = copula_uniforms(&model.correlation, n_draws, seed)?;
    for row in u.chunks_exact_mut(d) {
        for (k, v) in row.iter_mut().enumerate() {
            *v = model.curves[k].eval(*v);
        }
    }
    ForecastEnsemble::from_rows(u, d).map_err(|_| ModelError::InvalidSpec("non-finite draw".into()))
}
