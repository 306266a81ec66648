use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorSelection {
    FirstM,
    LastM,
}

#[derive(Debug, Clone)]
pub struct PcaFactors {
    /// `T × m` factor realisations.
    pub factors: DMatrix<f64>,
    /// `d × m` selected eigenvectors.
    pub loadings: DMatrix<f64>,
    /// All `d` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Full `d × d` eigenvector matrix, columns ordered as `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub column_means: Vec<f64>,
}

/// Principal-component factors of a window.
///
/// Computed from the SVD of the centered data rather than from the
/// covariance matrix, so near-collinear columns keep an accurate small
/// eigenvalue. Each eigenvector is signed so its largest-magnitude entry
/// is positive.
pub fn pca_factors(window: &DMatrix<f64>, which: FactorSelection, m: usize) -> Result<PcaFactors, ModelError> {
    let (t, d) = window.shape();
    if m == 0 || m >= d {
        return Err(ModelError::InvalidSpec(alloc::format!("factor count {m} must be in 1..{d}")));
    }
    if t <= d {
        return Err(ModelError::RankDeficientWindow);
    }
    let column_means: Vec<f64> = (0..d).map(|k| window.column(k).mean()).collect();
    let mut centered = window.clone();
    for k in 0..d {
        let mu = column_means[k];
        centered.column_mut(k).iter_mut().for_each(|x| *x -= mu);
    }
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.ok_or(ModelError::RankDeficientWindow)?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let smax = sv[order[0]];
    let smin = sv[order[d - 1]];
    if !(smax > 0.0) || smin <= smax * f64::EPSILON * (t.max(d) as f64) {
        return Err(ModelError::RankDeficientWindow);
    }
    let mut eigenvectors = DMatrix::<f64>::zeros(d, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (c, &idx) in order.iter().enumerate() {
        let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in v.into_iter().enumerate() {
            eigenvectors[(r, c)] = x;
        }
        eigenvalues.push(sv[idx] * sv[idx] / (t as f64 - 1.0));
    }
    let cols: Vec<usize> = match which {
        FactorSelection::FirstM => (0..m).collect(),
        FactorSelection::LastM => (d - m..d).collect(),
    };
    let loadings = eigenvectors.select_columns(cols.iter());
    let factors = &centered * &loadings;
    Ok(PcaFactors { factors, loadings, eigenvalues, eigenvectors, column_means })
}
