//! Empirical marginals joined by a Gaussian copula.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::math;
use crate::rng::rng_from_seed;
use crate::scoring::ForecastEnsemble;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfCopulaModel {
    /// Sorted historical values per column.
    pub support: Vec<Vec<f64>>,
    /// Gaussian-copula correlation matrix.
    #[serde(with = "crate::math::serde_matrix")]
    pub correlation: DMatrix<f64>,
}

pub(crate) fn check_columns(window: &DMatrix<f64>) -> Result<(), ModelError> {
    for k in 0..window.ncols() {
        let col = window.column(k);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidSpec("non-finite window entry".into()));
        }
        if col.iter().all(|&v| v == col[0]) {
            return Err(ModelError::DegenerateColumn(k));
        }
    }
    Ok(())
}

pub fn fit_edf_copula(window: &DMatrix<f64>) -> Result<EdfCopulaModel, ModelError> {
    check_columns(window)?;
    let support = (0..window.ncols())
        .map(|k| {
            let mut col: Vec<f64> = window.column(k).iter().copied().collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    Ok(EdfCopulaModel { support, correlation: math::normal_score_correlation(window) })
}

/// Draws `n` rows of copula uniforms `Φ(Lz)`, row major.
pub(crate) fn copula_uniforms(correlation: &DMatrix<f64>, n: usize, seed: u64) -> Result<Vec<f64>, ModelError> {
    let d = correlation.nrows();
    let l = math::correlation_cholesky(correlation).ok_or(ModelError::CholeskyFailure)?;
    let mut rng = rng_from_seed(seed);
    let mut out = vec![0.0; n * d];
    let mut z = vec![0.0; d];
    for row in out.chunks_exact_mut(d) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * z[j];
            }
            row[i] = math::norm_cdf(s);
        }
    }
    Ok(out)
}

/// EDF step-function inverse: the `⌊u·n⌋`-th order statistic.
pub fn edf_inverse(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    let idx = ((u * n as f64) as usize).min(n - 1);
    sorted[idx]
}

pub fn sample_edf_copula(model: &EdfCopulaModel, n_draws: usize, seed: u64) -> Result<ForecastEnsemble, ModelError> {
    let d = model.support.len();
    if model.correlation.nrows() != d || model.support.iter().any(|s| s.is_empty()) {
        return Err(ModelError::InvalidSpec("copula dimension does not match support".into()));
    }
    let mut u = copula_uniforms(&model.correlation, n_draws, seed)?;
    for row in u.chunks_exact_mut(d) {
        for (k, v) in row.iter_mut().enumerate() {
            *v = edf_inverse(&model.support[k], *v);
        }
    }
    ForecastEnsemble::from_rows(u, d).map_err(|_| ModelError::InvalidSpec("non-finite draw".into()))
}
